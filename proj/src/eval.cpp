#include "slimraft/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "slimraft/error.hpp"
#include "slimraft/prompt.hpp"
#include "slimraft/text.hpp"

namespace slimraft {

using json = nlohmann::json;

namespace {

constexpr std::string_view kQuestionLabel = "Question:\n";
constexpr std::string_view kExpectedLabel = "\n\nExpected answer:\n";
constexpr std::string_view kCandidateLabel = "\n\nCandidate answer:\n";

const std::regex& score_regex() {
  static const std::regex re(R"(\b(10|[0-9])(\.[0-9]+)?\b)");
  return re;
}

const std::regex& cue_regex() {
  static const std::regex re(R"(\b(score|nota)\b)", std::regex::icase);
  return re;
}

std::optional<double> in_range(double v) {
  if (v < 0.0 || v > 10.0 || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string fixed2(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << v;
  return os.str();
}

}  // namespace

std::vector<EvalItem> parse_eval_items(std::string_view jsonl) {
  std::vector<EvalItem> items;
  const auto lines = text::split_lines(jsonl);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    const auto where = "eval items line " + std::to_string(i + 1);
    const auto doc = json::parse(lines[i], nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
      throw Error(Errc::Parse, where + ": not a JSON object");
    }
    auto field = [&](const char* key, bool required) {
      const auto it = doc.find(key);
      if (it == doc.end() || it->is_null()) {
        if (required) throw Error(Errc::Parse, where + ": missing '" + key + "'");
        return std::string{};
      }
      if (!it->is_string()) throw Error(Errc::Parse, where + ": '" + key + "' must be a string");
      return it->get<std::string>();
    };
    EvalItem item{field("id", true), field("question", true),
                  field("expected_answer", true), field("model_answer", false),
                  field("model_tag", false)};
    if (text::trim(item.question).empty() || text::trim(item.expected_answer).empty()) {
      throw Error(Errc::Parse, where + ": question and expected_answer must be non-empty");
    }
    items.push_back(std::move(item));
  }
  return items;
}

std::vector<EvalItem> load_eval_items(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open eval items file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_eval_items(buf.str());
}

std::string eval_item_to_json(const EvalItem& item) {
  return json{{"id", item.id},
              {"question", item.question},
              {"expected_answer", item.expected_answer},
              {"model_answer", item.model_answer},
              {"model_tag", item.model_tag}}
      .dump();
}

ChatRequest build_judge_request(const EvalItem& item, const JudgeConfig& config) {
  ChatRequest req;
  req.temperature = 0.0;
  req.messages.push_back({"system", config.rubric});
  std::string user;
  user += kQuestionLabel;
  user += item.question;
  user += kExpectedLabel;
  user += item.expected_answer;
  user += kCandidateLabel;
  user += item.model_answer;
  req.messages.push_back({"user", std::move(user)});
  return req;
}

std::optional<double> parse_score(std::string_view reply) {
  const std::string s(reply);
  std::smatch cue;
  if (std::regex_search(s, cue, cue_regex())) {
    const auto rest = cue.suffix().str();
    std::smatch num;
    if (std::regex_search(rest, num, score_regex())) {
      return in_range(std::stod(num.str()));
    }
  }
  std::set<double> values;
  for (auto it = std::sregex_iterator(s.begin(), s.end(), score_regex());
       it != std::sregex_iterator(); ++it) {
    values.insert(std::stod(it->str()));
  }
  if (values.size() != 1) return std::nullopt;
  return in_range(*values.begin());
}

JudgeVerdict judge(const EvalItem& item, ChatClient& client, const JudgeConfig& config) {
  const auto request = build_judge_request(item, config);
  std::string last;
  for (int attempt = 0; attempt <= std::max(0, config.parse_retries); ++attempt) {
    last = client.complete(request);
    if (const auto score = parse_score(last)) {
      return JudgeVerdict{item.id, *score, text::trim(last)};
    }
  }
  throw Error(Errc::UnparsableVerdict,
              "no score in judge reply for item " + item.id + ": '" + last + "'");
}

EvalReport aggregate(std::span<const JudgeVerdict> verdicts, std::string model_tag) {
  if (verdicts.empty()) {
    throw Error(Errc::EmptyVerdictSet, "cannot aggregate an empty verdict set");
  }
  EvalReport report;
  report.model_tag = std::move(model_tag);
  report.verdicts.assign(verdicts.begin(), verdicts.end());
  report.total = verdicts.size();

  const auto [lo, hi] = std::minmax_element(
      verdicts.begin(), verdicts.end(),
      [](const JudgeVerdict& a, const JudgeVerdict& b) { return a.score < b.score; });
  report.min = lo->score;
  report.max = hi->score;
  if (report.min == report.max) {
    report.average = report.min;
    report.std_dev = 0.0;
    return report;
  }
  const double n = static_cast<double>(verdicts.size());
  double sum = 0.0;
  for (const auto& v : verdicts) sum += v.score;
  const double mean = std::clamp(sum / n, report.min, report.max);
  double sq = 0.0;
  for (const auto& v : verdicts) sq += (v.score - mean) * (v.score - mean);
  report.average = mean;
  report.std_dev = std::sqrt(sq / n);
  return report;
}

EvalReport run_eval(std::span<const EvalItem> items, ChatClient& client,
                    const RunOptions& options) {
  if (items.empty()) throw Error(Errc::InvalidArgument, "no eval items to judge");

  std::vector<std::optional<JudgeVerdict>> verdicts(items.size());
  std::vector<std::string> errors(items.size());
  TokenBucket bucket(options.rate_per_second);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < items.size(); i = next++) {
      bucket.acquire();
      try {
        verdicts[i] = judge(items[i], client, options.judge);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };

  unsigned workers = client.thread_safe() ? std::max(1u, options.concurrency) : 1u;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, items.size()));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  std::vector<JudgeVerdict> ok;
  std::vector<ItemFailure> failures;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (verdicts[i]) {
      ok.push_back(std::move(*verdicts[i]));
    } else {
      failures.push_back({items[i].id, errors[i]});
    }
  }
  if (ok.empty()) {
    throw Error(Errc::AllItemsFailed,
                "all " + std::to_string(items.size()) + " items failed; first: " +
                    failures.front().message);
  }

  std::string tag = items.front().model_tag;
  for (const auto& item : items) {
    if (item.model_tag != tag) {
      tag = "mixed";
      break;
    }
  }
  auto report = aggregate(ok, tag);
  report.failures = std::move(failures);
  report.total = items.size();
  return report;
}

std::string report_to_json(std::span<const EvalReport> reports) {
  json arr = json::array();
  for (const auto& r : reports) {
    json verdicts = json::array();
    for (const auto& v : r.verdicts) {
      verdicts.push_back({{"item_id", v.item_id}, {"score", v.score}, {"rationale", v.rationale}});
    }
    json failures = json::array();
    for (const auto& f : r.failures) {
      failures.push_back({{"item_id", f.item_id}, {"error", f.message}});
    }
    arr.push_back({{"model_tag", r.model_tag},
                   {"average", r.average},
                   {"std_dev", r.std_dev},
                   {"min", r.min},
                   {"max", r.max},
                   {"judged", r.judged()},
                   {"total", r.total},
                   {"coverage", std::to_string(r.judged()) + "/" + std::to_string(r.total)},
                   {"verdicts", std::move(verdicts)},
                   {"failures", std::move(failures)}});
  }
  return json{{"reports", std::move(arr)}}.dump(2) + "\n";
}

std::string render_report_table(std::span<const EvalReport> reports) {
  std::size_t model_width = 5;
  for (const auto& r : reports) model_width = std::max(model_width, text::utf8_length(r.model_tag));
  constexpr int kNum = 9;

  std::ostringstream os;
  auto pad = [&](const std::string& s) {
    os << s << std::string(model_width - text::utf8_length(s), ' ');
  };
  pad("Model");
  os << std::setw(kNum) << "Aver." << std::setw(kNum) << "St. Dev." << std::setw(kNum)
     << "Min." << std::setw(kNum) << "Max." << '\n';
  for (const auto& r : reports) {
    pad(r.model_tag);
    if (r.verdicts.empty()) {
      os << std::setw(kNum) << "-" << std::setw(kNum) << "-" << std::setw(kNum) << "-"
         << std::setw(kNum) << "-" << '\n';
      continue;
    }
    os << std::setw(kNum) << fixed2(r.average) << std::setw(kNum) << fixed2(r.std_dev)
       << std::setw(kNum) << fixed2(r.min) << std::setw(kNum) << fixed2(r.max) << '\n';
  }
  return os.str();
}

std::string ExactMatchJudge::complete(const ChatRequest& request) {
  if (request.messages.empty()) throw Error(Errc::Client, "empty judge request");
  const auto& user = request.messages.back().content;
  const auto e = user.find(kExpectedLabel);
  const auto c = user.find(kCandidateLabel);
  if (e == std::string::npos || c == std::string::npos || c < e) {
    throw Error(Errc::Client, "judge request is missing the answer sections");
  }
  const auto expected = user.substr(e + kExpectedLabel.size(), c - e - kExpectedLabel.size());
  const auto candidate = user.substr(c + kCandidateLabel.size());
  if (text::trim(candidate).empty()) return "Unable to grade: the candidate answer is empty.";
  if (canonical_line(expected) == canonical_line(candidate)) {
    return "Score: 10 - exact match";
  }
  return "Score: 0 - answers differ";
}

std::string reformulate(std::string_view raw_query, std::string_view fewshot_prompt,
                        ChatClient& client, const ReformulateOptions& options) {
  if (text::trim(raw_query).empty()) {
    throw Error(Errc::InvalidArgument, "query to reformulate is empty");
  }
  std::regex pattern;
  try {
    pattern = std::regex(options.pattern);
  } catch (const std::regex_error& e) {
    throw Error(Errc::InvalidArgument, "invalid canonical pattern: " + std::string(e.what()));
  }
  const std::string prompt_template(fewshot_prompt);
  if (!std::regex_search(prompt_template, pattern)) {
    throw Error(Errc::InvalidArgument,
                "few-shot prompt contains no worked example in canonical form");
  }

  std::string prompt = prompt_template;
  constexpr std::string_view kSlot = "{{query}}";
  if (const auto at = prompt.find(kSlot); at != std::string::npos) {
    prompt.replace(at, kSlot.size(), raw_query);
  } else {
    prompt += "\n\n";
    prompt += raw_query;
  }

  ChatRequest req;
  req.temperature = 0.0;
  req.messages.push_back({"user", prompt});
  std::string last;
  for (int attempt = 0; attempt <= std::max(0, options.retries); ++attempt) {
    last = client.complete(req);
    std::smatch m;
    if (std::regex_search(last, m, pattern)) return canonical_line(m.str());
  }
  throw Error(Errc::NonCanonicalOutput,
              "reformulation did not produce a canonical question: '" + last + "'");
}

}  // namespace slimraft
