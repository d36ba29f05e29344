#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace slimraft::text {

std::string trim(std::string_view s);

// Collapses every run of spaces and tabs into a single space and trims the
// ends. Newlines are left alone.
std::string collapse_spaces(std::string_view s);

// Number of Unicode code points in a UTF-8 string. Invalid bytes count as one
// code point each.
std::size_t utf8_length(std::string_view s);

// Lowercases ASCII and Latin-1/Latin Extended-A letters; leaves accents.
std::string lower(std::string_view s);

// Lowercases and strips diacritics from Latin letters ("Maçã" -> "maca").
std::string fold(std::string_view s);

// Search tokenizer: fold(), then split on anything that is not a letter or
// digit. A '.' between two digits stays inside the token so dotted codes
// such as "2204.10.10" survive as a single token.
std::vector<std::string> tokenize(std::string_view s);

// Crude Portuguese plural folding on a folded token: "vinhos" -> "vinho",
// "preparacoes" -> "preparacao", "flores" -> "flor", "bens" -> "bem".
// Tokens containing digits are returned unchanged.
std::string singular(std::string token);

// tokenize() followed by singular(); the retrieval vocabulary.
std::vector<std::string> search_terms(std::string_view s);

bool is_digits(std::string_view s);

std::vector<std::string> split_lines(std::string_view s);

}  // namespace slimraft::text
