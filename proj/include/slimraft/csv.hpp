#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace slimraft::csv {

struct Row {
  std::size_t line = 0;  // 1-based line on which the row starts
  std::vector<std::string> fields;
};

// RFC-4180 reader: comma separator, double-quote quoting with "" escapes,
// quoted fields may span lines. Blank lines are skipped. Throws
// Error(Errc::Parse) on an unterminated quote or stray quote.
std::vector<Row> parse(std::string_view content);

// Quotes a field only when it needs quoting.
std::string escape(std::string_view field);

}  // namespace slimraft::csv
