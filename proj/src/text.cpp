#include "slimraft/text.hpp"

#include <array>
#include <cstdint>
#include <string_view>

namespace slimraft::text {
namespace {

// Base letters for U+0100..U+017F (Latin Extended-A), one per code point.
constexpr std::string_view kExtendedA =
    "AaAaAa" "CcCcCcCc" "DdDd" "EeEeEeEeEe" "GgGgGgGg" "HhHh" "IiIiIiIiIi"
    "Ii" "Jj" "Kkk" "LlLlLlLlLl" "NnNnNnnNn" "OoOoOo" "Oo" "RrRrRr" "SsSsSsSs"
    "TtTtTt" "UuUuUuUuUuUu" "Ww" "YyY" "ZzZzZz" "s";
static_assert(kExtendedA.size() == 0x80);

struct Decoded {
  char32_t cp;
  std::size_t len;
};

Decoded decode(std::string_view s, std::size_t i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  auto cont = [&](std::size_t k) -> int {
    if (i + k >= s.size()) return -1;
    const auto b = static_cast<unsigned char>(s[i + k]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) return {b0, 1};
  if ((b0 & 0xE0) == 0xC0) {
    const int c1 = cont(1);
    if (c1 >= 0) return {static_cast<char32_t>(((b0 & 0x1F) << 6) | c1), 2};
  } else if ((b0 & 0xF0) == 0xE0) {
    const int c1 = cont(1), c2 = cont(2);
    if (c1 >= 0 && c2 >= 0)
      return {static_cast<char32_t>(((b0 & 0x0F) << 12) | (c1 << 6) | c2), 3};
  } else if ((b0 & 0xF8) == 0xF0) {
    const int c1 = cont(1), c2 = cont(2), c3 = cont(3);
    if (c1 >= 0 && c2 >= 0 && c3 >= 0)
      return {static_cast<char32_t>(((b0 & 0x07) << 18) | (c1 << 12) |
                                    (c2 << 6) | c3),
              4};
  }
  // Invalid lead or truncated sequence: pass the byte through as U+FFFD-ish.
  return {0xFFFD, 1};
}

void encode(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool is_combining(char32_t cp) { return cp >= 0x0300 && cp <= 0x036F; }

char32_t lower_cp(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= 'A' && cp <= 'Z') ? cp + 0x20 : cp;
  }
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
  if (cp >= 0x100 && cp <= 0x17F) {
    if (cp == 0x130) return U'i';
    if (cp == 0x178) return 0xFF;
    const char base = kExtendedA[cp - 0x100];
    if (base >= 'A' && base <= 'Z') return cp + 1;
  }
  return cp;
}

// Accent-stripped lowercase spelling of a Latin letter, or empty when the
// code point has no Latin base letter.
std::string_view latin_base(char32_t cp) {
  static constexpr std::array<std::string_view, 64> kLatin1 = {
      "a", "a", "a", "a",  "a", "a", "ae", "c", "e", "e", "e",  "e", "i",
      "i", "i", "i", "d",  "n", "o", "o",  "o", "o", "o", "",   "o", "u",
      "u", "u", "u", "y",  "th", "ss", "a", "a", "a", "a", "a", "a", "ae",
      "c", "e", "e", "e",  "e", "i", "i",  "i", "i", "d", "n",  "o", "o",
      "o", "o", "o", "",   "o", "u", "u",  "u", "u", "y", "th", "y"};
  if (cp >= 0xC0 && cp <= 0xFF) return kLatin1[cp - 0xC0];
  if (cp >= 0x100 && cp <= 0x17F) {
    static constexpr std::string_view kLowerBases =
        "abcdefghijklmnopqrstuvwxyz";
    const char base = kExtendedA[cp - 0x100];
    const char low = (base >= 'A' && base <= 'Z') ? base + 0x20 : base;
    return kLowerBases.substr(static_cast<std::size_t>(low - 'a'), 1);
  }
  return {};
}

bool is_ascii_alnum(char32_t cp) {
  return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') ||
         (cp >= 'A' && cp <= 'Z');
}

bool is_word_cp(char32_t cp) {
  if (cp < 0x80) return is_ascii_alnum(cp);
  if (cp < 0x180) return !latin_base(cp).empty();
  if (cp == 0xFFFD) return false;
  if (cp >= 0x2000 && cp <= 0x2BFF) return false;  // punctuation, symbols
  if (cp >= 0x3000 && cp <= 0x303F) return false;
  return true;
}

// Appends the folded form of one code point.
void fold_cp(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(lower_cp(cp)));
    return;
  }
  if (is_combining(cp)) return;
  const auto base = latin_base(cp);
  if (!base.empty()) {
    out.append(base);
    return;
  }
  encode(lower_cp(cp), out);
}

}  // namespace

std::string trim(std::string_view s) {
  const auto ws = " \t\r\n\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

std::string collapse_spaces(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending = false;
  for (char c : s) {
    if (c == ' ' || c == '\t') {
      pending = !out.empty() && out.back() != '\n';
      continue;
    }
    if (c == '\n') {
      pending = false;
      while (!out.empty() && out.back() == ' ') out.pop_back();
    } else if (pending) {
      out.push_back(' ');
    }
    pending = false;
    out.push_back(c);
  }
  return out;
}

std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.size(); i += decode(s, i).len) ++n;
  return n;
}

std::string lower(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    const auto d = decode(s, i);
    if (d.cp == 0xFFFD && d.len == 1) {
      out.push_back(s[i]);
    } else {
      encode(lower_cp(d.cp), out);
    }
    i += d.len;
  }
  return out;
}

std::string fold(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    const auto d = decode(s, i);
    fold_cp(d.cp, out);
    i += d.len;
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (std::size_t i = 0; i < s.size();) {
    const auto d = decode(s, i);
    i += d.len;
    if (is_combining(d.cp)) continue;
    if (is_word_cp(d.cp)) {
      fold_cp(d.cp, current);
      continue;
    }
    const bool digit_before =
        !current.empty() && current.back() >= '0' && current.back() <= '9';
    const bool digit_after = i < s.size() && s[i] >= '0' && s[i] <= '9';
    if (d.cp == '.' && digit_before && digit_after) {
      current.push_back('.');
      continue;
    }
    flush();
  }
  flush();
  return tokens;
}

namespace {

bool ends_with(const std::string& s, std::string_view tail) {
  return s.size() >= tail.size() && s.compare(s.size() - tail.size(), tail.size(), tail) == 0;
}

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

}  // namespace

std::string singular(std::string t) {
  for (char c : t)
    if (c < 'a' || c > 'z') return t;
  const auto n = t.size();
  if (n >= 5 && (ends_with(t, "oes") || ends_with(t, "aes"))) return t.replace(n - 3, 3, "ao");
  if (n >= 5 && (ends_with(t, "res") || ends_with(t, "zes"))) return t.erase(n - 2);
  if (n >= 4 && ends_with(t, "ns")) return t.replace(n - 2, 2, "m");
  if (n >= 4 && t[n - 1] == 's' && is_vowel(t[n - 2])) t.pop_back();
  return t;
}

std::vector<std::string> search_terms(std::string_view s) {
  auto tokens = tokenize(s);
  for (auto& t : tokens) t = singular(std::move(t));
  return tokens;
}

bool is_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (c < '0' || c > '9') return false;
  return true;
}

std::vector<std::string> split_lines(std::string_view s) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto end = s.find('\n', start);
    if (end == std::string_view::npos) end = s.size();
    auto line = s.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.emplace_back(line);
    start = end + 1;
  }
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

}  // namespace slimraft::text
