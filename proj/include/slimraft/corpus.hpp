#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "slimraft/chat_client.hpp"
#include "slimraft/nomenclature.hpp"
#include "slimraft/prompt.hpp"

namespace slimraft {

inline constexpr std::size_t kMaxDescriptionLength = 120;

// Placeholders a mask may use. {{heading}} expands to the description of the
// code's 4-digit heading.
inline constexpr std::string_view kPlaceholderProduct = "product";
inline constexpr std::string_view kPlaceholderCode = "NCM";
inline constexpr std::string_view kPlaceholderCategory = "category";
inline constexpr std::string_view kPlaceholderHeading = "heading";

struct ProductRecord {
  std::string id;
  std::string description;
  NcmCode ncm_code;
};

// Validates description length and that the code is a full 8-digit sub-item.
// Throws Error(Errc::InvalidRecord).
ProductRecord make_product_record(std::string id, std::string description,
                                  std::string_view code);

// `id,description,ncm_code` rows with a header line. Ids must be unique.
std::vector<ProductRecord> parse_records(std::string_view content,
                                         const std::string& source_id);
std::vector<ProductRecord> load_records(const std::filesystem::path& path);
std::string format_records(std::span<const ProductRecord> records);

struct QaTemplate {
  std::string id;
  std::vector<std::string> context_masks;
  std::string question_mask;
  std::string answer_mask;
};

// Names between "{{" and "}}" in order of appearance. An unterminated "{{"
// yields the whole remainder as a name, which then fails validation.
std::vector<std::string> placeholders_in(std::string_view mask);

// Throws UnknownPlaceholder naming the offender and `owner`.
void check_placeholders(std::string_view mask, std::string_view owner);

void validate_template(const QaTemplate& t);

std::vector<QaTemplate> parse_templates(std::string_view json_text);
std::vector<QaTemplate> load_templates(const std::filesystem::path& path);

// Paraphrases of one template's question mask, excluding the original.
struct VariationSet {
  std::string template_id;
  std::vector<std::string> question_variants;
};

using VariationMap = std::map<std::string, VariationSet>;

// JSON object template_id -> [variants]. Ids must name known templates.
VariationMap parse_variations(std::string_view json_text,
                              std::span<const QaTemplate> templates);
VariationMap load_variations(const std::filesystem::path& path,
                             std::span<const QaTemplate> templates);
std::string format_variations(const VariationMap& variations);

struct VariationOptions {
  // Extra calls allowed beyond `count` for rejected generations.
  int retry_budget = 5;
};

// Asks `llm` for `count` paraphrases of the question mask. A generation is
// kept only if it preserves every placeholder of the original, introduces no
// unknown placeholder, is a single line, and is new after whitespace
// normalization. Throws BudgetExhausted when not enough conform.
VariationSet generate_variations(const QaTemplate& tmpl, int count,
                                 ChatClient& llm,
                                 const VariationOptions& options = {});

struct TrainingRecord {
  std::string user;
  std::string assistant;

  // {"messages":[{"content":...,"role":"user"},{"content":...,"role":"assistant"}]}
  std::string to_json() const;

  // Inverse of to_json(); throws Error(Errc::Parse) on schema violations.
  static TrainingRecord from_json(std::string_view line);

  friend bool operator==(const TrainingRecord&, const TrainingRecord&) = default;
};

// Values substituted for the placeholders of one product record.
struct PlaceholderValues {
  std::string product;
  std::string code;
  std::string category;
  std::string heading;
};

PlaceholderValues placeholder_values(const ProductRecord& record,
                                     const NomenclatureTable& table);

// Single-pass substitution; substituted values are not rescanned.
std::string substitute(std::string_view mask, const PlaceholderValues& values);

// Throws UnknownCode when the record's code is absent from the table and
// ResidualPlaceholder if braces survive substitution.
TrainingRecord render_record(std::string_view question_mask,
                             const QaTemplate& tmpl,
                             const ProductRecord& record,
                             const NomenclatureTable& table,
                             std::string_view instruction = kDefaultInstruction);

struct CorpusPlan {
  std::size_t q = 0;  // templates
  std::size_t v = 0;  // question variants per template, original included
  std::size_t n = 0;  // product records
  std::size_t total = 0;
};

// Checks that every template has the same number of variants and returns
// the resulting plan. Throws InconsistentVariations otherwise.
CorpusPlan plan_corpus(std::span<const QaTemplate> templates,
                       const VariationMap& variations,
                       std::span<const ProductRecord> records);

struct CorpusOptions {
  std::string instruction{kDefaultInstruction};
  unsigned threads = 1;
};

using RecordSink = std::function<void(const TrainingRecord&)>;

// Emits plan.total records to `sink` in (template, variant, record) order.
// Rendering may run on several threads; emission order never changes.
CorpusPlan generate_corpus(std::span<const QaTemplate> templates,
                           const VariationMap& variations,
                           std::span<const ProductRecord> records,
                           const NomenclatureTable& table,
                           const RecordSink& sink,
                           const CorpusOptions& options = {});

std::vector<TrainingRecord> generate_corpus(
    std::span<const QaTemplate> templates, const VariationMap& variations,
    std::span<const ProductRecord> records, const NomenclatureTable& table,
    const CorpusOptions& options = {});

struct HoldoutSplit {
  std::vector<ProductRecord> train;
  std::vector<ProductRecord> eval;
};

// Seeded partition at product granularity. Both halves keep input order.
// Throws HoldoutTooLarge when holdout_count would leave no training product.
HoldoutSplit split_holdout(std::span<const ProductRecord> records,
                           std::size_t holdout_count, std::uint64_t seed);

using AbbreviationDictionary = std::vector<std::pair<std::string, std::string>>;

AbbreviationDictionary parse_abbreviations(std::string_view json_text);
AbbreviationDictionary load_abbreviations(const std::filesystem::path& path);

// Case-insensitive, longest-match expansion of abbreviations that start and
// end on token boundaries.
std::string normalize_description(std::string_view text,
                                  const AbbreviationDictionary& dictionary);

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace slimraft
