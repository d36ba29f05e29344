#include "slimraft/pipeline.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "slimraft/error.hpp"

namespace slimraft {

using json = nlohmann::json;

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(Errc::Io, "failed writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string table_report_json(const NomenclatureTable& table) {
  const auto hist = table.level_histogram();
  constexpr Level kOrder[] = {Level::Chapter, Level::Heading, Level::Subheading,
                              Level::Item, Level::SubItem};
  json levels = json::object();
  for (std::size_t i = 0; i < hist.size(); ++i) levels[std::string(level_name(kOrder[i]))] = hist[i];
  json violations = json::array();
  for (const auto& c : table.integrity_violations()) violations.push_back(c.digits());
  return json{{"source", table.source_id()},
              {"entries", table.size()},
              {"levels", std::move(levels)},
              {"violations", std::move(violations)},
              {"warnings", table.warnings()}}
      .dump();
}

CorpusJobResult run_corpus_job(const CorpusJob& job) {
  const auto table = NomenclatureTable::load(job.nomenclature, job.mode);
  const auto templates = load_templates(job.templates);
  const auto variations =
      job.variations ? load_variations(*job.variations, templates) : VariationMap{};
  auto records = load_records(job.records);
  if (job.abbreviations) {
    const auto dict = load_abbreviations(*job.abbreviations);
    for (auto& r : records) r.description = normalize_description(r.description, dict);
  }

  if (job.corpus_out.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(job.corpus_out.parent_path(), ec);
  }
  std::ofstream out(job.corpus_out, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write corpus " + job.corpus_out.string());

  CorpusOptions options;
  options.instruction = job.instruction;
  options.threads = job.threads;
  const auto plan = generate_corpus(
      templates, variations, records, table,
      [&](const TrainingRecord& r) { out << r.to_json() << '\n'; }, options);
  out.close();
  if (!out) throw Error(Errc::Io, "failed writing corpus " + job.corpus_out.string());

  json sources = json::object();
  sources["nomenclature"] = sha256_file(job.nomenclature);
  sources["templates"] = sha256_file(job.templates);
  if (job.variations) sources["variations"] = sha256_file(*job.variations);
  sources["records"] = sha256_file(job.records);
  if (job.abbreviations) sources["abbreviations"] = sha256_file(*job.abbreviations);

  CorpusJobResult result;
  result.plan = plan;
  result.manifest_json = json{{"q", plan.q},
                              {"v", plan.v},
                              {"n", plan.n},
                              {"N", plan.total},
                              {"seed", job.seed},
                              {"instruction", job.instruction},
                              {"sources", std::move(sources)}}
                             .dump(2) +
                         "\n";
  write_text_file(job.manifest_out, result.manifest_json);
  return result;
}

SplitJobResult run_split_job(const SplitJob& job) {
  const auto records = load_records(job.records);
  const auto split = split_holdout(records, job.holdout, job.seed);
  write_text_file(job.train_out, format_records(split.train));
  write_text_file(job.eval_out, format_records(split.eval));

  std::size_t items_written = 0;
  if (job.templates && job.nomenclature && job.eval_items_out) {
    const auto templates = load_templates(*job.templates);
    const auto table = NomenclatureTable::load(*job.nomenclature, IntegrityMode::Lenient);
    const auto& tmpl = templates.front();
    std::string lines;
    for (const auto& rec : split.eval) {
      const auto values = placeholder_values(rec, table);
      EvalItem item{rec.id, canonical_line(substitute(tmpl.question_mask, values)),
                    canonical_line(substitute(tmpl.answer_mask, values)), "", ""};
      lines += eval_item_to_json(item);
      lines += '\n';
      ++items_written;
    }
    write_text_file(*job.eval_items_out, lines);
  }

  SplitJobResult result;
  result.train = split.train.size();
  result.eval = split.eval.size();
  result.summary_json = json{{"train", result.train},
                             {"eval", result.eval},
                             {"seed", job.seed},
                             {"eval_items", items_written}}
                            .dump();
  return result;
}

std::vector<EvalReport> run_eval_grouped(std::span<const EvalItem> items,
                                         ChatClient& client, const RunOptions& options) {
  if (items.empty()) throw Error(Errc::InvalidArgument, "no eval items to judge");
  std::vector<std::string> order;
  std::map<std::string, std::vector<EvalItem>> groups;
  for (const auto& item : items) {
    auto [it, inserted] = groups.try_emplace(item.model_tag);
    if (inserted) order.push_back(item.model_tag);
    it->second.push_back(item);
  }

  std::vector<EvalReport> reports;
  std::size_t judged = 0;
  for (const auto& tag : order) {
    const auto& group = groups[tag];
    try {
      reports.push_back(run_eval(group, client, options));
      judged += reports.back().judged();
    } catch (const Error& e) {
      if (e.code() != Errc::AllItemsFailed) throw;
      EvalReport empty;
      empty.model_tag = tag;
      empty.total = group.size();
      for (const auto& item : group) empty.failures.push_back({item.id, e.what()});
      reports.push_back(std::move(empty));
    }
  }
  if (judged == 0) {
    throw Error(Errc::AllItemsFailed,
                "none of the " + std::to_string(items.size()) + " items could be judged");
  }
  return reports;
}

}  // namespace slimraft
