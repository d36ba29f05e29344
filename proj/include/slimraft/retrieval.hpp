#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "slimraft/nomenclature.hpp"
#include "slimraft/prompt.hpp"

namespace slimraft {

inline constexpr std::size_t kDefaultTopK = 3;
inline constexpr int kIndexFormatVersion = 2;

struct ContextDocument {
  std::string text;
  NcmCode source_code;
  double score = 0.0;
};

// One indexed nomenclature entry with everything needed to render a hit.
struct IndexedDocument {
  NcmCode code;
  std::string description;
  std::string category;  // rendered category path
  std::string heading;   // heading description (or own description)
  std::size_t length = 0;  // token count
};

struct Posting {
  std::size_t doc = 0;
  std::size_t tf = 0;
};

struct SearchResult {
  std::vector<ContextDocument> hits;
  bool empty_query = false;  // query produced no tokens
};

// Tokens an entry is indexed under: its description tokens followed by the
// plain and dotted code forms.
std::vector<std::string> document_tokens(const NcmCode& code,
                                         std::string_view description);

// tf component of the TF-IDF weight: 1 + ln(tf), 0 for tf == 0.
double tf_weight(std::size_t tf);

// Smoothed inverse document frequency: ln((N + 1) / (df + 1)) + 1.
double idf_weight(std::size_t doc_count, std::size_t df);

// Collapses the three argument sentences for a hit (code assertion, category
// description, heading membership) into one context line.
std::string render_hit(const IndexedDocument& doc);

// TF-IDF inverted index over a nomenclature table, scored by cosine
// similarity. Immutable after construction; search() is safe to call
// concurrently.
class LexicalIndex {
 public:
  // Throws EmptyTable for an empty table.
  static LexicalIndex build(const NomenclatureTable& table);

  // Top-k hits by descending score, ties broken by ascending code. Entries
  // sharing no token with the query are never returned.
  SearchResult search(std::string_view query, std::size_t k = kDefaultTopK) const;

  std::string to_snapshot() const;
  // Throws VersionMismatch for snapshots written by another format version
  // and Parse for malformed content.
  static LexicalIndex from_snapshot(std::string_view snapshot);

  void save(const std::filesystem::path& path) const;
  static LexicalIndex load(const std::filesystem::path& path);

  std::size_t doc_count() const noexcept { return docs_.size(); }
  const std::vector<IndexedDocument>& documents() const noexcept { return docs_; }
  const std::map<std::string, std::vector<Posting>>& postings() const noexcept {
    return postings_;
  }
  const std::string& source_id() const noexcept { return source_id_; }

 private:
  void finalize();

  std::string source_id_;
  std::vector<IndexedDocument> docs_;  // ascending code order
  std::map<std::string, std::vector<Posting>> postings_;
  std::map<std::string, double> idf_;
  std::vector<double> norms_;
};

// Inference-time user message, laid out exactly like training records.
// Throws InvalidArgument for an empty question.
std::string assemble_prompt(std::span<const ContextDocument> docs,
                            std::string_view question,
                            std::string_view instruction = kDefaultInstruction);

}  // namespace slimraft
