#include "slimraft/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "slimraft/error.hpp"
#include "slimraft/text.hpp"

namespace slimraft {

using json = nlohmann::json;

namespace {

constexpr std::string_view kSnapshotFormat = "slimraft-lexical-index";

std::map<std::string, std::size_t> count_tokens(const std::vector<std::string>& tokens) {
  std::map<std::string, std::size_t> counts;
  for (const auto& t : tokens) ++counts[t];
  return counts;
}

}  // namespace

std::vector<std::string> document_tokens(const NcmCode& code,
                                         std::string_view description) {
  auto tokens = text::search_terms(description);
  tokens.push_back(code.format(CodeStyle::Plain));
  const auto dotted = code.format(CodeStyle::Dotted);
  if (dotted != tokens.back()) tokens.push_back(dotted);
  return tokens;
}

double tf_weight(std::size_t tf) {
  return tf == 0 ? 0.0 : 1.0 + std::log(static_cast<double>(tf));
}

double idf_weight(std::size_t doc_count, std::size_t df) {
  return std::log(static_cast<double>(doc_count + 1) / static_cast<double>(df + 1)) + 1.0;
}

std::string render_hit(const IndexedDocument& doc) {
  const auto code = doc.code.format(CodeStyle::Plain);
  return "o código da categoria é: " + code + "; a categoria " + code +
         " possui a seguinte descrição: " + doc.category + "; a categoria " +
         code + " tem posição: " + doc.heading;
}

LexicalIndex LexicalIndex::build(const NomenclatureTable& table) {
  if (table.empty()) {
    throw Error(Errc::EmptyTable, "cannot index empty nomenclature table " +
                                      table.source_id());
  }
  LexicalIndex index;
  index.source_id_ = table.source_id();
  for (const auto& [key, entry] : table) {
    IndexedDocument doc{entry.code, entry.description,
                        table.category_path(entry.code).rendered,
                        table.heading_description(entry.code), 0};
    const auto tokens = document_tokens(entry.code, entry.description);
    doc.length = tokens.size();
    const std::size_t id = index.docs_.size();
    for (const auto& [token, tf] : count_tokens(tokens)) {
      index.postings_[token].push_back({id, tf});
    }
    index.docs_.push_back(std::move(doc));
  }
  index.finalize();
  return index;
}

void LexicalIndex::finalize() {
  idf_.clear();
  norms_.assign(docs_.size(), 0.0);
  for (const auto& [token, list] : postings_) {
    const double idf = idf_weight(docs_.size(), list.size());
    idf_[token] = idf;
    for (const auto& p : list) {
      const double w = tf_weight(p.tf) * idf;
      norms_[p.doc] += w * w;
    }
  }
  for (auto& n : norms_) n = std::sqrt(n);
}

SearchResult LexicalIndex::search(std::string_view query, std::size_t k) const {
  SearchResult result;
  const auto tokens = text::search_terms(query);
  if (tokens.empty()) {
    result.empty_query = true;
    return result;
  }
  if (k == 0) return result;

  std::vector<double> dot(docs_.size(), 0.0);
  std::vector<bool> touched(docs_.size(), false);
  double query_norm = 0.0;
  for (const auto& [token, qtf] : count_tokens(tokens)) {
    const auto it = postings_.find(token);
    if (it == postings_.end()) continue;
    const double idf = idf_.at(token);
    const double qw = tf_weight(qtf) * idf;
    query_norm += qw * qw;
    for (const auto& p : it->second) {
      dot[p.doc] += qw * tf_weight(p.tf) * idf;
      touched[p.doc] = true;
    }
  }
  query_norm = std::sqrt(query_norm);

  std::vector<std::pair<double, std::size_t>> scored;
  for (std::size_t d = 0; d < docs_.size(); ++d) {
    if (!touched[d]) continue;
    scored.emplace_back(dot[d] / (query_norm * norms_[d]), d);
  }
  const auto take = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take),
                    scored.end(), [](const auto& a, const auto& b) {
                      if (a.first != b.first) return a.first > b.first;
                      return a.second < b.second;
                    });
  for (std::size_t i = 0; i < take; ++i) {
    const auto& doc = docs_[scored[i].second];
    result.hits.push_back({render_hit(doc), doc.code, scored[i].first});
  }
  return result;
}

std::string LexicalIndex::to_snapshot() const {
  json docs = json::array();
  for (const auto& d : docs_) {
    docs.push_back({{"code", d.code.digits()},
                    {"description", d.description},
                    {"category", d.category},
                    {"heading", d.heading},
                    {"length", d.length}});
  }
  json postings = json::object();
  for (const auto& [token, list] : postings_) {
    json arr = json::array();
    for (const auto& p : list) arr.push_back({p.doc, p.tf});
    postings[token] = std::move(arr);
  }
  json doc = {{"format", kSnapshotFormat},
              {"version", kIndexFormatVersion},
              {"source_id", source_id_},
              {"documents", std::move(docs)},
              {"postings", std::move(postings)}};
  return doc.dump() + "\n";
}

LexicalIndex LexicalIndex::from_snapshot(std::string_view snapshot) {
  const auto doc = json::parse(snapshot, nullptr, false);
  if (doc.is_discarded() || !doc.is_object() ||
      doc.value("format", "") != kSnapshotFormat) {
    throw Error(Errc::Parse, "not a lexical index snapshot");
  }
  const auto version = doc.value("version", -1);
  if (version != kIndexFormatVersion) {
    throw Error(Errc::VersionMismatch,
                "index snapshot has format version " + std::to_string(version) +
                    ", expected " + std::to_string(kIndexFormatVersion));
  }
  LexicalIndex index;
  try {
    index.source_id_ = doc.at("source_id").get<std::string>();
    for (const auto& d : doc.at("documents")) {
      index.docs_.push_back({NcmCode::parse(d.at("code").get<std::string>()),
                             d.at("description").get<std::string>(),
                             d.at("category").get<std::string>(),
                             d.at("heading").get<std::string>(),
                             d.at("length").get<std::size_t>()});
    }
    for (const auto& [token, list] : doc.at("postings").items()) {
      if (token.empty()) throw Error(Errc::Parse, "index snapshot has an empty token");
      auto& out = index.postings_[token];
      for (const auto& p : list) {
        const auto id = p.at(0).get<std::size_t>();
        if (id >= index.docs_.size()) {
          throw Error(Errc::Parse, "index snapshot posting for '" + token +
                                       "' points past the document list");
        }
        out.push_back({id, p.at(1).get<std::size_t>()});
      }
    }
  } catch (const json::exception& e) {
    throw Error(Errc::Parse, std::string("malformed index snapshot: ") + e.what());
  }
  if (index.docs_.empty()) throw Error(Errc::EmptyTable, "index snapshot has no documents");
  index.finalize();
  return index;
}

void LexicalIndex::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write index snapshot " + path.string());
  out << to_snapshot();
  if (!out) throw Error(Errc::Io, "failed writing index snapshot " + path.string());
}

LexicalIndex LexicalIndex::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open index snapshot " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_snapshot(buf.str());
}

std::string assemble_prompt(std::span<const ContextDocument> docs,
                            std::string_view question,
                            std::string_view instruction) {
  if (text::trim(question).empty()) {
    throw Error(Errc::InvalidArgument, "question must be non-empty");
  }
  std::vector<std::string> contexts;
  contexts.reserve(docs.size());
  for (const auto& d : docs) contexts.push_back(d.text);
  return render_user_message(contexts, instruction, question);
}

}  // namespace slimraft
