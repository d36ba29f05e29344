#include "slimraft/nomenclature.hpp"

#include <fstream>
#include <sstream>

#include "slimraft/csv.hpp"
#include "slimraft/error.hpp"
#include "slimraft/text.hpp"

namespace slimraft {
namespace {

constexpr std::array<Level, 5> kLevels = {Level::Chapter, Level::Heading,
                                          Level::Subheading, Level::Item,
                                          Level::SubItem};

std::size_t level_index(Level level) {
  for (std::size_t i = 0; i < kLevels.size(); ++i)
    if (kLevels[i] == level) return i;
  return 0;
}

}  // namespace

std::string_view level_name(Level level) noexcept {
  switch (level) {
    case Level::Chapter: return "chapter";
    case Level::Heading: return "heading";
    case Level::Subheading: return "subheading";
    case Level::Item: return "item";
    case Level::SubItem: return "subitem";
  }
  return "unknown";
}

NcmCode NcmCode::parse(std::string_view text) {
  std::string digits;
  digits.reserve(text.size());
  for (char c : text) {
    if (c == '.') continue;
    if (c < '0' || c > '9') {
      throw Error(Errc::NonDigit,
                  "code '" + std::string(text) + "' contains a non-digit");
    }
    digits.push_back(c);
  }
  Level level{};
  switch (digits.size()) {
    case 2: level = Level::Chapter; break;
    case 4: level = Level::Heading; break;
    case 6: level = Level::Subheading; break;
    case 7: level = Level::Item; break;
    case 8: level = Level::SubItem; break;
    default:
      throw Error(Errc::InvalidLength,
                  "code '" + std::string(text) + "' has " +
                      std::to_string(digits.size()) +
                      " digits; expected 2, 4, 6, 7 or 8");
  }
  const int chapter = (digits[0] - '0') * 10 + (digits[1] - '0');
  if (chapter < 1 || chapter > 97) {
    throw Error(Errc::ChapterOutOfRange,
                "code '" + std::string(text) + "' has chapter " +
                    digits.substr(0, 2) + " outside 01-97");
  }
  return NcmCode(std::move(digits), level);
}

std::string NcmCode::format(CodeStyle style) const {
  if (style == CodeStyle::Plain || digits_.size() <= 4) return digits_;
  std::string out = digits_.substr(0, 4);
  out += '.';
  out += digits_.substr(4, 2);
  if (digits_.size() > 6) {
    out += '.';
    out += digits_.substr(6);
  }
  return out;
}

std::vector<NcmCode> NcmCode::ancestors() const {
  std::vector<NcmCode> out;
  for (Level level : kLevels) {
    const auto len = static_cast<std::size_t>(level);
    if (len >= digits_.size()) break;
    out.push_back(NcmCode(digits_.substr(0, len), level));
  }
  return out;
}

bool NcmCode::is_prefix_of(const NcmCode& other) const noexcept {
  return digits_.size() < other.digits_.size() &&
         other.digits_.compare(0, digits_.size(), digits_) == 0;
}

NomenclatureTable NomenclatureTable::parse(std::string_view content,
                                           std::string source_id,
                                           IntegrityMode mode) {
  NomenclatureTable table;
  table.source_id_ = std::move(source_id);
  const auto rows = csv::parse(content);
  if (rows.empty()) {
    table.warnings_.push_back(table.source_id_ + ": empty nomenclature file");
    return table;
  }
  const auto& header = rows.front();
  if (header.fields.size() != 2 ||
      text::lower(text::trim(header.fields[0])) != "code" ||
      text::lower(text::trim(header.fields[1])) != "description") {
    throw Error(Errc::Parse, table.source_id_ +
                                 ": line 1: expected header 'code,description'");
  }
  if (rows.size() == 1) {
    table.warnings_.push_back(table.source_id_ + ": no entries after header");
  }
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    const auto where = table.source_id_ + ": line " + std::to_string(row.line);
    if (row.fields.size() != 2) {
      throw Error(Errc::Parse, where + ": expected 2 columns, found " +
                                   std::to_string(row.fields.size()));
    }
    std::optional<NcmCode> code;
    try {
      code = NcmCode::parse(text::trim(row.fields[0]));
    } catch (const Error& e) {
      throw Error(Errc::Parse, where + ": " + e.what());
    }
    table.insert({*code, text::trim(row.fields[1])}, where);
  }
  table.check_integrity(mode);
  return table;
}

NomenclatureTable NomenclatureTable::load(const std::filesystem::path& path,
                                          IntegrityMode mode) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(Errc::Io, "cannot open nomenclature file " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string(), mode);
}

NomenclatureTable NomenclatureTable::from_entries(
    std::vector<NomenclatureEntry> entries, std::string source_id,
    IntegrityMode mode) {
  NomenclatureTable table;
  table.source_id_ = std::move(source_id);
  for (auto& e : entries) {
    const auto where = table.source_id_ + ": code " + e.code.digits();
    e.description = text::trim(e.description);
    table.insert(std::move(e), where);
  }
  table.check_integrity(mode);
  return table;
}

void NomenclatureTable::insert(NomenclatureEntry entry,
                               const std::string& where) {
  if (entry.description.empty()) {
    throw Error(Errc::Parse, where + ": empty description");
  }
  const auto key = entry.code.digits();
  if (entries_.contains(key)) {
    throw Error(Errc::DuplicateCode, where + ": duplicate code " + key);
  }
  entries_.emplace(key, std::move(entry));
}

void NomenclatureTable::check_integrity(IntegrityMode mode) {
  for (const auto& [key, entry] : entries_) {
    for (const auto& anc : entry.code.ancestors()) {
      if (anc.level() != Level::Chapter && anc.level() != Level::Heading)
        continue;
      if (entries_.contains(anc.digits())) continue;
      const auto msg = source_id_ + ": code " + key + " is missing its " +
                       std::string(level_name(anc.level())) + " " +
                       anc.digits();
      if (mode == IntegrityMode::Strict) {
        throw Error(Errc::MissingAncestor, msg);
      }
      warnings_.push_back(msg);
      if (violations_.empty() || violations_.back() != entry.code)
        violations_.push_back(entry.code);
    }
  }
}

const NomenclatureEntry* NomenclatureTable::find(const NcmCode& code) const {
  const auto it = entries_.find(code.digits());
  return it == entries_.end() ? nullptr : &it->second;
}

const NomenclatureEntry& NomenclatureTable::at(const NcmCode& code) const {
  if (const auto* e = find(code)) return *e;
  throw Error(Errc::UnknownCode,
              "code " + code.digits() + " is not in " + source_id_);
}

CategoryPath NomenclatureTable::category_path(const NcmCode& code) const {
  const auto& own = at(code);
  CategoryPath path;
  for (const auto& anc : code.ancestors()) {
    if (const auto* e = find(anc)) path.segments.push_back(e->description);
  }
  path.segments.push_back(own.description);
  for (std::size_t i = 0; i < path.segments.size(); ++i) {
    if (i > 0) path.rendered += " - ";
    path.rendered += path.segments[i];
  }
  return path;
}

const std::string& NomenclatureTable::heading_description(
    const NcmCode& code) const {
  const auto& own = at(code);
  if (code.level() == Level::Chapter || code.level() == Level::Heading)
    return own.description;
  const auto heading = code.ancestors()[1];
  if (const auto* e = find(heading)) return e->description;
  return own.description;
}

std::array<std::size_t, 5> NomenclatureTable::level_histogram() const {
  std::array<std::size_t, 5> counts{};
  for (const auto& [key, entry] : entries_)
    ++counts[level_index(entry.code.level())];
  return counts;
}

}  // namespace slimraft
