#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "slimraft/corpus.hpp"
#include "slimraft/eval.hpp"
#include "slimraft/nomenclature.hpp"

namespace slimraft {

// {"entries":N,"levels":{...},"violations":[...],"warnings":[...]}
std::string table_report_json(const NomenclatureTable& table);

struct CorpusJob {
  std::filesystem::path nomenclature;
  std::filesystem::path templates;
  std::optional<std::filesystem::path> variations;
  std::filesystem::path records;
  std::optional<std::filesystem::path> abbreviations;
  std::filesystem::path corpus_out;
  std::filesystem::path manifest_out;
  std::string instruction{kDefaultInstruction};
  std::uint64_t seed = 0;
  unsigned threads = 1;
  IntegrityMode mode = IntegrityMode::Strict;
};

struct CorpusJobResult {
  CorpusPlan plan;
  std::string manifest_json;
};

// Loads every input, writes the JSONL corpus and the manifest sidecar
// ({q, v, n, N, seed, instruction, sources: {name: sha256}}).
CorpusJobResult run_corpus_job(const CorpusJob& job);

struct SplitJob {
  std::filesystem::path records;
  std::size_t holdout = 0;
  std::uint64_t seed = 0;
  std::filesystem::path train_out;
  std::filesystem::path eval_out;
  // When all three are set, held-out products are also written as eval
  // items rendered with the first template's question and answer masks.
  std::optional<std::filesystem::path> templates;
  std::optional<std::filesystem::path> nomenclature;
  std::optional<std::filesystem::path> eval_items_out;
  std::string instruction{kDefaultInstruction};
};

struct SplitJobResult {
  std::size_t train = 0;
  std::size_t eval = 0;
  std::string summary_json;
};

SplitJobResult run_split_job(const SplitJob& job);

// Judges items grouped by model tag (first-appearance order), one report per
// tag. A tag whose items all fail yields a report with no verdicts. Throws
// AllItemsFailed only when no item at all could be judged.
std::vector<EvalReport> run_eval_grouped(std::span<const EvalItem> items,
                                         ChatClient& client,
                                         const RunOptions& options = {});

void write_text_file(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace slimraft
