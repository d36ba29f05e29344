#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "slimraft/nomenclature.hpp"

#ifndef SLIMRAFT_TEST_DATA
#define SLIMRAFT_TEST_DATA "tests/data"
#endif
#ifndef SLIMRAFT_DATA_DIR
#define SLIMRAFT_DATA_DIR "data"
#endif

namespace testing {

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(SLIMRAFT_TEST_DATA) / name;
}

inline std::filesystem::path data_file(const std::string& name) {
  return std::filesystem::path(SLIMRAFT_DATA_DIR) / name;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void spit(const std::filesystem::path& p, const std::string& content) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << content;
}

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() /
            ("slimraft-" + tag + "-" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline const std::vector<std::string>& vocabulary() {
  static const std::vector<std::string> words = {
      "maçã",     "pera",     "marmelo",  "fresca",   "seca",     "vinho",    "espumante",
      "uva",      "suco",     "laranja",  "café",     "chá",      "açúcar",   "leite",
      "queijo",   "manteiga", "arroz",    "feijão",   "milho",    "trigo",    "farinha",
      "óleo",     "azeite",   "sabão",    "perfume",  "papel",    "toalha",   "fralda",
      "tinta",    "verniz",   "cerveja",  "água",     "mineral",  "gaseificada", "congelado",
      "refrigerado", "inteiro", "moído",  "torrado",  "descafeinado", "outros", "outras",
      "misturas", "preparações", "conservas", "frutas", "legumes", "carnes", "peixes",
      "crustáceos", "bovina",  "suína",    "aves",     "ovos",     "mel",      "cacau"};
  return words;
}

inline std::string random_phrase(std::mt19937_64& rng, int min_words, int max_words) {
  const auto& v = vocabulary();
  std::uniform_int_distribution<int> len(min_words, max_words);
  std::uniform_int_distribution<std::size_t> pick(0, v.size() - 1);
  std::string out;
  const int n = len(rng);
  for (int i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += v[pick(rng)];
  }
  return out;
}

inline std::string two_digits(int v) {
  return std::string{static_cast<char>('0' + v / 10), static_cast<char>('0' + v % 10)};
}

// Strictly consistent table with exactly `size` entries: every code's
// chapter and heading are present. Mixes all five levels.
inline std::vector<slimraft::NomenclatureEntry> random_entries(std::size_t size,
                                                               std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> chapter_d(1, 97), two(0, 99), digit(0, 9), kind(0, 9);
  std::set<std::string> codes;
  std::vector<std::string> headings;
  std::vector<std::string> subheadings;
  std::vector<slimraft::NomenclatureEntry> out;
  auto add = [&](const std::string& digits) {
    if (out.size() >= size || !codes.insert(digits).second) return false;
    out.push_back({slimraft::NcmCode::parse(digits), random_phrase(rng, 1, 5)});
    return true;
  };
  while (out.size() < size) {
    const int k = kind(rng);
    if (headings.empty() || k == 0) {
      const auto ch = two_digits(chapter_d(rng));
      add(ch);
      const auto h = ch + two_digits(two(rng));
      if (add(h)) headings.push_back(h);
    } else if (subheadings.empty() || k < 4) {
      const auto& h = headings[std::uniform_int_distribution<std::size_t>(0, headings.size() - 1)(rng)];
      const auto s = h + two_digits(two(rng));
      if (add(s)) subheadings.push_back(s);
    } else {
      const auto& s =
          subheadings[std::uniform_int_distribution<std::size_t>(0, subheadings.size() - 1)(rng)];
      const auto item = s + std::to_string(digit(rng));
      if (k == 9) {
        add(item);
      } else {
        add(item + std::to_string(digit(rng)));
      }
    }
  }
  return out;
}

inline slimraft::NomenclatureTable random_table(std::size_t size, std::uint64_t seed) {
  return slimraft::NomenclatureTable::from_entries(random_entries(size, seed),
                                                   "random-" + std::to_string(seed),
                                                   slimraft::IntegrityMode::Strict);
}

// 8-digit codes of a table.
inline std::vector<slimraft::NcmCode> subitems(const slimraft::NomenclatureTable& table) {
  std::vector<slimraft::NcmCode> out;
  for (const auto& [digits, entry] : table) {
    if (entry.code.level() == slimraft::Level::SubItem) out.push_back(entry.code);
  }
  return out;
}

}  // namespace testing
