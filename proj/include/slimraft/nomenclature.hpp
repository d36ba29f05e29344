#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace slimraft {

// Depth in the HS/NCM hierarchy. The underlying value is the digit count.
enum class Level : int {
  Chapter = 2,
  Heading = 4,
  Subheading = 6,
  Item = 7,
  SubItem = 8,
};

std::string_view level_name(Level level) noexcept;

enum class CodeStyle { Plain, Dotted };

// A validated HS/NCM code. Construct through NcmCode::parse.
class NcmCode {
 public:
  // Accepts plain ("22041010") or dotted ("2204.10.10", "08.08") input.
  // Throws Error with InvalidLength, NonDigit or ChapterOutOfRange.
  static NcmCode parse(std::string_view text);

  const std::string& digits() const noexcept { return digits_; }
  Level level() const noexcept { return level_; }

  // Plain is the digits verbatim; dotted groups them 4.2.2 (or 4.2.1 / 4.2).
  std::string format(CodeStyle style = CodeStyle::Plain) const;

  // Strict prefixes at valid levels, shallowest first.
  std::vector<NcmCode> ancestors() const;

  bool is_prefix_of(const NcmCode& other) const noexcept;

  friend bool operator==(const NcmCode&, const NcmCode&) = default;
  friend auto operator<=>(const NcmCode& a, const NcmCode& b) {
    return a.digits_ <=> b.digits_;
  }

 private:
  NcmCode(std::string digits, Level level)
      : digits_(std::move(digits)), level_(level) {}

  std::string digits_;
  Level level_ = Level::Chapter;
};

struct NomenclatureEntry {
  NcmCode code;
  std::string description;
};

struct CategoryPath {
  std::vector<std::string> segments;
  std::string rendered;
};

enum class IntegrityMode { Strict, Lenient };

// Immutable code -> description table. Entries iterate in ascending code
// order.
class NomenclatureTable {
 public:
  NomenclatureTable() = default;

  // Parses `code,description` rows (header required). Throws Parse,
  // DuplicateCode, or (strict mode) MissingAncestor. Lenient mode records
  // missing ancestors in warnings() instead.
  static NomenclatureTable parse(std::string_view content,
                                 std::string source_id,
                                 IntegrityMode mode = IntegrityMode::Strict);

  static NomenclatureTable load(const std::filesystem::path& path,
                                IntegrityMode mode = IntegrityMode::Strict);

  // Builds a table from entries already in memory. Same checks as parse().
  static NomenclatureTable from_entries(std::vector<NomenclatureEntry> entries,
                                        std::string source_id,
                                        IntegrityMode mode);

  const NomenclatureEntry* find(const NcmCode& code) const;
  const NomenclatureEntry& at(const NcmCode& code) const;  // UnknownCode
  bool contains(const NcmCode& code) const { return find(code) != nullptr; }

  // Throws UnknownCode when `code` is not in the table.
  CategoryPath category_path(const NcmCode& code) const;

  // Description of the code's 4-digit heading. Falls back to the code's own
  // description when the heading row is absent or the code is a chapter.
  const std::string& heading_description(const NcmCode& code) const;

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const std::string& source_id() const noexcept { return source_id_; }
  const std::vector<std::string>& warnings() const noexcept {
    return warnings_;
  }

  // Entries whose 2- or 4-digit ancestor row is missing.
  const std::vector<NcmCode>& integrity_violations() const noexcept {
    return violations_;
  }

  // Count of entries per level, indexed Chapter..SubItem.
  std::array<std::size_t, 5> level_histogram() const;

  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

 private:
  void insert(NomenclatureEntry entry, const std::string& where);
  void check_integrity(IntegrityMode mode);

  std::map<std::string, NomenclatureEntry> entries_;
  std::string source_id_;
  std::vector<std::string> warnings_;
  std::vector<NcmCode> violations_;
};

}  // namespace slimraft
