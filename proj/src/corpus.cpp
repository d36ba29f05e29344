#include "slimraft/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <future>
#include <iomanip>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>
#include <openssl/evp.h>

#include "slimraft/csv.hpp"
#include "slimraft/error.hpp"
#include "slimraft/text.hpp"

namespace slimraft {

using json = nlohmann::json;

namespace {

std::string read_file(const std::filesystem::path& path, std::string_view what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(Errc::Io, "cannot open " + std::string(what) + " " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

bool is_allowed_placeholder(std::string_view name) {
  return name == kPlaceholderProduct || name == kPlaceholderCode ||
         name == kPlaceholderCategory || name == kPlaceholderHeading;
}

bool has_braces(std::string_view s) {
  return s.find("{{") != std::string_view::npos ||
         s.find("}}") != std::string_view::npos;
}

std::string required_string(const json& obj, const char* key,
                            const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw Error(Errc::Parse, where + ": missing string field '" + key + "'");
  }
  return it->get<std::string>();
}

// Unbiased draw in [0, bound) from a 64-bit engine. std::uniform_int_distribution
// is implementation-defined, which would make splits differ across toolchains.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

bool is_word_byte(unsigned char c) {
  return std::isalnum(c) || c >= 0x80;
}

}  // namespace

ProductRecord make_product_record(std::string id, std::string description,
                                  std::string_view code) {
  id = text::trim(id);
  description = text::trim(description);
  if (id.empty()) throw Error(Errc::InvalidRecord, "product record has empty id");
  if (description.empty()) {
    throw Error(Errc::InvalidRecord, "product " + id + " has empty description");
  }
  if (text::utf8_length(description) > kMaxDescriptionLength) {
    throw Error(Errc::InvalidRecord,
                "product " + id + " description exceeds " +
                    std::to_string(kMaxDescriptionLength) + " characters");
  }
  std::optional<NcmCode> parsed;
  try {
    parsed = NcmCode::parse(text::trim(code));
  } catch (const Error& e) {
    throw Error(Errc::InvalidRecord, "product " + id + ": " + e.what());
  }
  if (parsed->level() != Level::SubItem) {
    throw Error(Errc::InvalidRecord, "product " + id + " code " +
                                         parsed->digits() +
                                         " is not an 8-digit sub-item");
  }
  return ProductRecord{std::move(id), std::move(description), *parsed};
}

std::vector<ProductRecord> parse_records(std::string_view content,
                                         const std::string& source_id) {
  const auto rows = csv::parse(content);
  std::vector<ProductRecord> out;
  if (rows.empty()) return out;
  const auto& header = rows.front().fields;
  if (header.size() != 3 || text::trim(header[0]) != "id" ||
      text::trim(header[1]) != "description" ||
      text::trim(header[2]) != "ncm_code") {
    throw Error(Errc::Parse,
                source_id + ": line 1: expected header 'id,description,ncm_code'");
  }
  std::unordered_set<std::string> seen;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    const auto where = source_id + ": line " + std::to_string(row.line);
    if (row.fields.size() != 3) {
      throw Error(Errc::Parse, where + ": expected 3 columns, found " +
                                   std::to_string(row.fields.size()));
    }
    ProductRecord rec = [&] {
      try {
        return make_product_record(row.fields[0], row.fields[1], row.fields[2]);
      } catch (const Error& e) {
        throw Error(Errc::InvalidRecord, where + ": " + e.what());
      }
    }();
    if (!seen.insert(rec.id).second) {
      throw Error(Errc::InvalidRecord, where + ": duplicate product id " + rec.id);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<ProductRecord> load_records(const std::filesystem::path& path) {
  return parse_records(read_file(path, "records file"), path.string());
}

std::string format_records(std::span<const ProductRecord> records) {
  std::string out = "id,description,ncm_code\n";
  for (const auto& r : records) {
    out += csv::escape(r.id);
    out += ',';
    out += csv::escape(r.description);
    out += ',';
    out += r.ncm_code.digits();
    out += '\n';
  }
  return out;
}

std::vector<std::string> placeholders_in(std::string_view mask) {
  std::vector<std::string> names;
  std::size_t pos = 0;
  while ((pos = mask.find("{{", pos)) != std::string_view::npos) {
    const auto close = mask.find("}}", pos + 2);
    if (close == std::string_view::npos) {
      names.emplace_back(mask.substr(pos + 2));
      break;
    }
    names.emplace_back(mask.substr(pos + 2, close - pos - 2));
    pos = close + 2;
  }
  return names;
}

void check_placeholders(std::string_view mask, std::string_view owner) {
  for (const auto& name : placeholders_in(mask)) {
    if (!is_allowed_placeholder(name)) {
      throw Error(Errc::UnknownPlaceholder, "unknown placeholder {{" + name +
                                                "}} in " + std::string(owner));
    }
  }
  // A stray "}}" with no opening braces is just as invalid.
  std::string stripped(mask);
  for (const auto* p : {"{{product}}", "{{NCM}}", "{{category}}", "{{heading}}"}) {
    for (auto at = stripped.find(p); at != std::string::npos; at = stripped.find(p))
      stripped.erase(at, std::char_traits<char>::length(p));
  }
  if (has_braces(stripped)) {
    throw Error(Errc::UnknownPlaceholder,
                "unbalanced placeholder braces in " + std::string(owner));
  }
}

void validate_template(const QaTemplate& t) {
  const auto owner = "template '" + t.id + "'";
  if (t.id.empty()) throw Error(Errc::Parse, "template with empty id");
  if (t.context_masks.empty()) {
    throw Error(Errc::Parse, owner + " has no context masks");
  }
  if (text::trim(t.question_mask).empty() || text::trim(t.answer_mask).empty()) {
    throw Error(Errc::Parse, owner + " has an empty question or answer mask");
  }
  for (const auto& m : t.context_masks) {
    if (text::trim(m).empty()) {
      throw Error(Errc::Parse, owner + " has an empty context mask");
    }
    if (m.find('\n') != std::string::npos) {
      throw Error(Errc::Parse, owner + " has a line break inside a context mask");
    }
    check_placeholders(m, owner);
  }
  check_placeholders(t.question_mask, owner);
  check_placeholders(t.answer_mask, owner);
}

std::vector<QaTemplate> parse_templates(std::string_view json_text) {
  const auto doc = json::parse(json_text, nullptr, false);
  if (doc.is_discarded() || !doc.is_array()) {
    throw Error(Errc::Parse, "templates file must be a JSON list");
  }
  if (doc.empty()) throw Error(Errc::EmptyTemplateSet, "templates file is empty");
  std::vector<QaTemplate> out;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& obj = doc[i];
    const auto where = "template #" + std::to_string(i);
    if (!obj.is_object()) throw Error(Errc::Parse, where + " is not an object");
    QaTemplate t;
    t.id = required_string(obj, "id", where);
    const auto masks = obj.find("context_masks");
    if (masks == obj.end() || !masks->is_array()) {
      throw Error(Errc::Parse, where + ": missing list field 'context_masks'");
    }
    for (const auto& m : *masks) {
      if (!m.is_string()) throw Error(Errc::Parse, where + ": non-string context mask");
      t.context_masks.push_back(m.get<std::string>());
    }
    t.question_mask = required_string(obj, "question_mask", where);
    t.answer_mask = required_string(obj, "answer_mask", where);
    validate_template(t);
    if (!ids.insert(t.id).second) {
      throw Error(Errc::DuplicateTemplateId, "duplicate template id '" + t.id + "'");
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<QaTemplate> load_templates(const std::filesystem::path& path) {
  return parse_templates(read_file(path, "templates file"));
}

VariationMap parse_variations(std::string_view json_text,
                              std::span<const QaTemplate> templates) {
  const auto doc = json::parse(json_text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw Error(Errc::Parse, "variations file must be a JSON object");
  }
  VariationMap out;
  for (const auto& [id, list] : doc.items()) {
    const auto tmpl = std::find_if(templates.begin(), templates.end(),
                                   [&](const QaTemplate& t) { return t.id == id; });
    if (tmpl == templates.end()) {
      throw Error(Errc::Parse, "variations given for unknown template '" + id + "'");
    }
    if (!list.is_array()) {
      throw Error(Errc::Parse, "variations for '" + id + "' must be a list");
    }
    VariationSet set{id, {}};
    std::set<std::string> seen{canonical_line(tmpl->question_mask)};
    for (const auto& v : list) {
      if (!v.is_string()) {
        throw Error(Errc::Parse, "non-string variation for '" + id + "'");
      }
      const auto variant = v.get<std::string>();
      check_placeholders(variant, "variation of template '" + id + "'");
      if (!seen.insert(canonical_line(variant)).second) {
        throw Error(Errc::DuplicateVariant,
                    "duplicate variation for template '" + id + "': " + variant);
      }
      set.question_variants.push_back(variant);
    }
    out.emplace(id, std::move(set));
  }
  return out;
}

VariationMap load_variations(const std::filesystem::path& path,
                             std::span<const QaTemplate> templates) {
  return parse_variations(read_file(path, "variations file"), templates);
}

std::string format_variations(const VariationMap& variations) {
  json doc = json::object();
  for (const auto& [id, set] : variations) doc[id] = set.question_variants;
  return doc.dump(2) + "\n";
}

VariationSet generate_variations(const QaTemplate& tmpl, int count,
                                 ChatClient& llm,
                                 const VariationOptions& options) {
  if (count < 1) {
    throw Error(Errc::InvalidArgument, "variation count must be at least 1");
  }
  const auto required = placeholders_in(tmpl.question_mask);
  std::set<std::string> seen{canonical_line(tmpl.question_mask)};

  ChatRequest request;
  request.temperature = 0.7;
  request.messages.push_back(
      {"system",
       "You paraphrase questions. Copy every token written as {{name}} "
       "exactly, braces included. Reply with the rewritten question only, "
       "on one line."});
  request.messages.push_back(
      {"user", "Rewrite this question with different wording:\n" +
                   tmpl.question_mask});

  VariationSet out{tmpl.id, {}};
  const int max_calls = count + std::max(0, options.retry_budget);
  for (int call = 0; call < max_calls && static_cast<int>(out.question_variants.size()) < count;
       ++call) {
    auto reply = text::trim(llm.complete(request));
    if (reply.size() >= 2 && reply.front() == '"' && reply.back() == '"') {
      reply = text::trim(reply.substr(1, reply.size() - 2));
    }
    if (reply.empty() || reply.find('\n') != std::string::npos) continue;
    const auto found = placeholders_in(reply);
    const bool keeps_all = std::all_of(
        required.begin(), required.end(), [&](const std::string& name) {
          return std::find(found.begin(), found.end(), name) != found.end();
        });
    if (!keeps_all) continue;
    try {
      check_placeholders(reply, "generated variation");
    } catch (const Error&) {
      continue;
    }
    if (!seen.insert(canonical_line(reply)).second) continue;
    out.question_variants.push_back(std::move(reply));
  }
  if (static_cast<int>(out.question_variants.size()) < count) {
    throw Error(Errc::BudgetExhausted,
                "collected " + std::to_string(out.question_variants.size()) +
                    " of " + std::to_string(count) +
                    " conforming variations for template '" + tmpl.id + "'");
  }
  return out;
}

std::string TrainingRecord::to_json() const {
  json doc = {{"messages",
               json::array({{{"content", user}, {"role", "user"}},
                            {{"content", assistant}, {"role", "assistant"}}})}};
  return doc.dump();
}

TrainingRecord TrainingRecord::from_json(std::string_view line) {
  const auto doc = json::parse(line, nullptr, false);
  if (doc.is_discarded()) throw Error(Errc::Parse, "corpus line is not JSON");
  const auto msgs = doc.find("messages");
  if (!doc.is_object() || msgs == doc.end() || !msgs->is_array() || msgs->size() != 2) {
    throw Error(Errc::Parse, "corpus line must hold exactly two messages");
  }
  static constexpr const char* kRoles[] = {"user", "assistant"};
  std::string contents[2];
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& m = (*msgs)[i];
    if (!m.is_object() || !m.contains("role") || !m.contains("content") ||
        !m["role"].is_string() || !m["content"].is_string() ||
        m["role"].get<std::string>() != kRoles[i]) {
      throw Error(Errc::Parse, std::string("corpus message ") + std::to_string(i) +
                                   " must be {content, role: " + kRoles[i] + "}");
    }
    contents[i] = m["content"].get<std::string>();
  }
  return TrainingRecord{std::move(contents[0]), std::move(contents[1])};
}

PlaceholderValues placeholder_values(const ProductRecord& record,
                                     const NomenclatureTable& table) {
  return PlaceholderValues{
      record.description,
      record.ncm_code.format(CodeStyle::Plain),
      table.category_path(record.ncm_code).rendered,
      table.heading_description(record.ncm_code),
  };
}

std::string substitute(std::string_view mask, const PlaceholderValues& values) {
  std::string out;
  out.reserve(mask.size() * 2);
  std::size_t pos = 0;
  while (pos < mask.size()) {
    const auto open = mask.find("{{", pos);
    if (open == std::string_view::npos) break;
    const auto close = mask.find("}}", open + 2);
    if (close == std::string_view::npos) break;
    const auto name = mask.substr(open + 2, close - open - 2);
    const std::string* value = nullptr;
    if (name == kPlaceholderProduct) value = &values.product;
    else if (name == kPlaceholderCode) value = &values.code;
    else if (name == kPlaceholderCategory) value = &values.category;
    else if (name == kPlaceholderHeading) value = &values.heading;
    out.append(mask.substr(pos, open - pos));
    if (value) {
      out.append(*value);
    } else {
      out.append(mask.substr(open, close + 2 - open));
    }
    pos = close + 2;
  }
  out.append(mask.substr(pos));
  return out;
}

TrainingRecord render_record(std::string_view question_mask,
                             const QaTemplate& tmpl,
                             const ProductRecord& record,
                             const NomenclatureTable& table,
                             std::string_view instruction) {
  const auto values = placeholder_values(record, table);
  std::vector<std::string> contexts;
  contexts.reserve(tmpl.context_masks.size());
  for (const auto& m : tmpl.context_masks) contexts.push_back(substitute(m, values));

  TrainingRecord rec;
  rec.user = render_user_message(contexts, instruction, substitute(question_mask, values));
  rec.assistant = canonical_line(substitute(tmpl.answer_mask, values));
  if (has_braces(rec.user) || has_braces(rec.assistant)) {
    throw Error(Errc::ResidualPlaceholder,
                "placeholder braces survived rendering of template '" + tmpl.id +
                    "' for product " + record.id);
  }
  return rec;
}

CorpusPlan plan_corpus(std::span<const QaTemplate> templates,
                       const VariationMap& variations,
                       std::span<const ProductRecord> records) {
  if (templates.empty()) throw Error(Errc::EmptyTemplateSet, "no templates");
  CorpusPlan plan;
  plan.q = templates.size();
  plan.n = records.size();
  for (std::size_t i = 0; i < templates.size(); ++i) {
    const auto it = variations.find(templates[i].id);
    const std::size_t v = 1 + (it == variations.end() ? 0 : it->second.question_variants.size());
    if (i == 0) {
      plan.v = v;
    } else if (v != plan.v) {
      throw Error(Errc::InconsistentVariations,
                  "template '" + templates[i].id + "' has " + std::to_string(v) +
                      " variants but '" + templates[0].id + "' has " +
                      std::to_string(plan.v));
    }
  }
  plan.total = plan.q * plan.v * plan.n;
  return plan;
}

CorpusPlan generate_corpus(std::span<const QaTemplate> templates,
                           const VariationMap& variations,
                           std::span<const ProductRecord> records,
                           const NomenclatureTable& table,
                           const RecordSink& sink,
                           const CorpusOptions& options) {
  const auto plan = plan_corpus(templates, variations, records);

  // Flattened (template, variant) list; records vary fastest.
  struct Slot {
    const QaTemplate* tmpl;
    const std::string* question;
  };
  std::vector<Slot> slots;
  for (const auto& t : templates) {
    slots.push_back({&t, &t.question_mask});
    if (const auto it = variations.find(t.id); it != variations.end()) {
      for (const auto& q : it->second.question_variants) slots.push_back({&t, &q});
    }
  }

  auto render_at = [&](std::size_t index) {
    const auto& slot = slots[index / plan.n];
    const auto& rec = records[index % plan.n];
    try {
      return render_record(*slot.question, *slot.tmpl, rec, table, options.instruction);
    } catch (const Error& e) {
      throw Error(e.code(), "template '" + slot.tmpl->id + "', record '" + rec.id +
                                "': " + e.what());
    }
  };

  const unsigned threads = std::max(1u, options.threads);
  constexpr std::size_t kChunk = 4096;
  std::vector<TrainingRecord> buffer;
  for (std::size_t start = 0; start < plan.total; start += kChunk) {
    const std::size_t count = std::min(kChunk, plan.total - start);
    buffer.assign(count, TrainingRecord{});
    if (threads == 1) {
      for (std::size_t i = 0; i < count; ++i) buffer[i] = render_at(start + i);
    } else {
      std::vector<std::future<void>> workers;
      const std::size_t per = (count + threads - 1) / threads;
      for (std::size_t lo = 0; lo < count; lo += per) {
        const std::size_t hi = std::min(count, lo + per);
        workers.push_back(std::async(std::launch::async, [&, lo, hi] {
          for (std::size_t i = lo; i < hi; ++i) buffer[i] = render_at(start + i);
        }));
      }
      // get() in launch order so the earliest failing slice is reported.
      std::exception_ptr first;
      for (auto& w : workers) {
        try {
          w.get();
        } catch (...) {
          if (!first) first = std::current_exception();
        }
      }
      if (first) std::rethrow_exception(first);
    }
    for (const auto& r : buffer) sink(r);
  }
  return plan;
}

std::vector<TrainingRecord> generate_corpus(
    std::span<const QaTemplate> templates, const VariationMap& variations,
    std::span<const ProductRecord> records, const NomenclatureTable& table,
    const CorpusOptions& options) {
  std::vector<TrainingRecord> out;
  generate_corpus(templates, variations, records, table,
                  [&](const TrainingRecord& r) { out.push_back(r); }, options);
  return out;
}

HoldoutSplit split_holdout(std::span<const ProductRecord> records,
                           std::size_t holdout_count, std::uint64_t seed) {
  std::vector<std::string> ids;
  std::unordered_set<std::string> seen;
  for (const auto& r : records)
    if (seen.insert(r.id).second) ids.push_back(r.id);
  if (holdout_count >= ids.size() && holdout_count > 0) {
    throw Error(Errc::HoldoutTooLarge,
                "holdout of " + std::to_string(holdout_count) + " leaves no training "
                "product out of " + std::to_string(ids.size()));
  }

  std::mt19937_64 rng(seed);
  for (std::size_t i = ids.size(); i > 1; --i) {
    std::swap(ids[i - 1], ids[bounded(rng, i)]);
  }
  const std::unordered_set<std::string> held(ids.begin(),
                                             ids.begin() + static_cast<std::ptrdiff_t>(holdout_count));
  HoldoutSplit split;
  for (const auto& r : records) {
    (held.contains(r.id) ? split.eval : split.train).push_back(r);
  }
  return split;
}

AbbreviationDictionary parse_abbreviations(std::string_view json_text) {
  const auto doc = json::parse(json_text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw Error(Errc::Parse, "abbreviation dictionary must be a JSON object");
  }
  AbbreviationDictionary dict;
  for (const auto& [key, value] : doc.items()) {
    if (text::trim(key).empty() || !value.is_string()) {
      throw Error(Errc::Parse, "abbreviation entries need a non-empty key and a string value");
    }
    dict.emplace_back(key, value.get<std::string>());
  }
  return dict;
}

AbbreviationDictionary load_abbreviations(const std::filesystem::path& path) {
  return parse_abbreviations(read_file(path, "abbreviation dictionary"));
}

std::string normalize_description(std::string_view input,
                                  const AbbreviationDictionary& dictionary) {
  struct Key {
    std::string lowered;
    const std::string* expansion;
  };
  std::vector<Key> keys;
  for (const auto& [abbr, expansion] : dictionary) {
    if (abbr.empty()) {
      throw Error(Errc::InvalidArgument, "abbreviation keys must be non-empty");
    }
    keys.push_back({text::lower(abbr), &expansion});
  }
  std::stable_sort(keys.begin(), keys.end(), [](const Key& a, const Key& b) {
    return a.lowered.size() > b.lowered.size();
  });

  std::string out;
  out.reserve(input.size());
  std::size_t i = 0;
  while (i < input.size()) {
    const bool at_boundary =
        i == 0 || !is_word_byte(static_cast<unsigned char>(input[i - 1]));
    bool replaced = false;
    for (const auto& key : keys) {
      const auto len = key.lowered.size();
      if (i + len > input.size()) continue;
      const bool starts_word = is_word_byte(static_cast<unsigned char>(key.lowered.front()));
      if (starts_word && !at_boundary) continue;
      if (text::lower(input.substr(i, len)) != key.lowered) continue;
      const bool ends_word = is_word_byte(static_cast<unsigned char>(key.lowered.back()));
      if (ends_word && i + len < input.size() &&
          is_word_byte(static_cast<unsigned char>(input[i + len])))
        continue;
      out += *key.expansion;
      i += len;
      replaced = true;
      break;
    }
    if (!replaced) out.push_back(input[i++]);
  }
  return out;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(Errc::Io, "SHA-256 computation failed");
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return hex.str();
}

std::string sha256_file(const std::filesystem::path& path) {
  return sha256_hex(read_file(path, "file"));
}

}  // namespace slimraft
