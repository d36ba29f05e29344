#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "slimraft/chat_client.hpp"

namespace slimraft {

struct EvalItem {
  std::string id;
  std::string question;
  std::string expected_answer;
  std::string model_answer;
  std::string model_tag;  // never shown to the judge
};

// JSON Lines {id, question, expected_answer, model_answer, model_tag}.
// Blank lines are skipped. Throws Parse naming the offending line.
std::vector<EvalItem> parse_eval_items(std::string_view jsonl);
std::vector<EvalItem> load_eval_items(const std::filesystem::path& path);
std::string eval_item_to_json(const EvalItem& item);

struct JudgeVerdict {
  std::string item_id;
  double score = 0.0;
  std::string rationale;
};

inline constexpr std::string_view kDefaultRubric =
    "You are grading answers to product-classification questions. Compare the "
    "candidate answer with the expected answer and score it from 0 to 10 for "
    "semantic agreement: 10 means fully equivalent, 0 means unrelated or no "
    "answer. Reply in the form 'Score: <number>' followed by a one-sentence "
    "rationale.";

struct JudgeConfig {
  std::string rubric{kDefaultRubric};
  int parse_retries = 2;  // extra attempts after an unparsable reply
};

// System message carries the rubric; the user message carries question,
// expected answer and candidate answer under fixed labels. The model tag and
// item id are never included.
ChatRequest build_judge_request(const EvalItem& item, const JudgeConfig& config = {});

// Score in [0, 10] read from a judge reply: the first number after a
// "score"/"nota" cue, otherwise the only standalone number. Returns nullopt
// when nothing parses, the value is out of range, or several different
// standalone numbers make the reply ambiguous.
std::optional<double> parse_score(std::string_view reply);

// Throws Client (from the client) or UnparsableVerdict.
JudgeVerdict judge(const EvalItem& item, ChatClient& client,
                   const JudgeConfig& config = {});

struct ItemFailure {
  std::string item_id;
  std::string message;
};

struct EvalReport {
  std::string model_tag;
  double average = 0.0;
  double std_dev = 0.0;  // population standard deviation
  double min = 0.0;
  double max = 0.0;
  std::vector<JudgeVerdict> verdicts;
  std::vector<ItemFailure> failures;
  std::size_t total = 0;  // items attempted

  std::size_t judged() const noexcept { return verdicts.size(); }
  bool complete() const noexcept { return verdicts.size() == total; }
};

// Throws EmptyVerdictSet for an empty input.
EvalReport aggregate(std::span<const JudgeVerdict> verdicts, std::string model_tag);

struct RunOptions {
  JudgeConfig judge;
  unsigned concurrency = 4;
  double rate_per_second = 0.0;  // 0 = unlimited
};

// Judges every item with bounded concurrency and aggregates the successes.
// The report's model tag is the items' common tag (or "mixed"). Verdicts keep
// input order. Throws AllItemsFailed when nothing could be judged and
// InvalidArgument for an empty item list.
EvalReport run_eval(std::span<const EvalItem> items, ChatClient& client,
                    const RunOptions& options = {});

std::string report_to_json(std::span<const EvalReport> reports);

// Table with columns Model, Aver., St. Dev., Min., Max.; two decimals.
std::string render_report_table(std::span<const EvalReport> reports);

// Deterministic judge used for offline runs: "Score: 10" when the candidate
// equals the expected answer after whitespace canonicalization, "Score: 0"
// otherwise, and an unparsable refusal when the candidate answer is empty.
class ExactMatchJudge final : public ChatClient {
 public:
  std::string complete(const ChatRequest& request) override;
};

inline constexpr std::string_view kCanonicalQuestionPattern =
    R"(Qual a categoria NCM correta para o produto: [^\n?]+\?)";

struct ReformulateOptions {
  std::string pattern{kCanonicalQuestionPattern};
  int retries = 2;
};

// Rewrites a free-form query into the canonical question using a few-shot
// prompt. `fewshot_prompt` may contain "{{query}}" where the raw query goes;
// otherwise the query is appended. The prompt must itself contain at least
// one canonical example. Returns the first canonical question found in the
// reply; throws NonCanonicalOutput when no attempt yields one.
std::string reformulate(std::string_view raw_query, std::string_view fewshot_prompt,
                        ChatClient& client, const ReformulateOptions& options = {});

}  // namespace slimraft
