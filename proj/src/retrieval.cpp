#include "hybridsum/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

#include "hybridsum/error.hpp"

namespace hybridsum {

using nlohmann::ordered_json;

Bm25Index Bm25Index::build(const Corpus& corpus, Split split, Bm25Params params) {
  if (!corpus.has_split()) throw InvalidArgument("corpus has no split assignment");
  std::vector<Document> docs;
  for (const Sample* s : corpus.samples_in(split)) {
    docs.push_back({s->id, s->code_tokens, s->comment_tokens});
  }
  if (docs.empty()) {
    throw InvalidArgument("cannot index empty " + std::string(to_string(split)) + " split");
  }
  return build(std::move(docs), params);
}

Bm25Index Bm25Index::build(std::vector<Document> documents, Bm25Params params) {
  if (documents.empty()) throw InvalidArgument("cannot index an empty document set");
  if (!(params.k1 >= 0.0) || !(params.b >= 0.0 && params.b <= 1.0)) {
    throw InvalidArgument("BM25 parameters out of range (k1 >= 0, 0 <= b <= 1)");
  }
  Bm25Index index;
  index.params_ = params;
  index.docs_ = std::move(documents);
  std::sort(index.docs_.begin(), index.docs_.end(),
            [](const Document& a, const Document& b) { return a.id < b.id; });
  index.finalize();
  return index;
}

void Bm25Index::finalize() {
  by_id_.clear();
  postings_.clear();
  std::size_t total_len = 0;
  for (std::size_t d = 0; d < docs_.size(); ++d) {
    if (!by_id_.emplace(docs_[d].id, d).second) {
      throw InvalidArgument("duplicate document id '" + docs_[d].id + "'");
    }
    if (docs_[d].code.empty()) {
      throw InvalidArgument("document '" + docs_[d].id + "' has no code tokens");
    }
    total_len += docs_[d].code.size();
    std::map<Token, std::size_t> tf;
    for (const auto& t : docs_[d].code) ++tf[t];
    for (const auto& [term, count] : tf) postings_[term].push_back({d, count});
  }
  avg_doc_len_ = static_cast<double>(total_len) / static_cast<double>(docs_.size());
}

std::size_t Bm25Index::document_frequency(const Token& term) const {
  const auto it = postings_.find(term);
  return it == postings_.end() ? 0 : it->second.size();
}

double Bm25Index::idf(const Token& term) const {
  const auto n = static_cast<double>(docs_.size());
  const auto df = static_cast<double>(document_frequency(term));
  return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

double Bm25Index::term_weight(double idf, std::size_t tf, std::size_t doc_len) const {
  const auto f = static_cast<double>(tf);
  const double norm =
      params_.k1 * (1.0 - params_.b + params_.b * static_cast<double>(doc_len) / avg_doc_len_);
  return idf * f * (params_.k1 + 1.0) / (f + norm);
}

std::optional<std::size_t> Bm25Index::doc_index(const SampleId& id) const {
  const auto it = by_id_.find(id);
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

double Bm25Index::score(const Tokens& query, const SampleId& doc_id) const {
  const auto doc = doc_index(doc_id);
  if (!doc) throw InvalidArgument("document '" + doc_id + "' is not indexed");
  const std::set<Token> terms(query.begin(), query.end());
  double total = 0.0;
  for (const auto& term : terms) {
    const auto it = postings_.find(term);
    if (it == postings_.end()) continue;
    const auto& list = it->second;
    const auto p = std::lower_bound(list.begin(), list.end(), *doc,
                                    [](const Posting& x, std::size_t d) { return x.doc < d; });
    if (p == list.end() || p->doc != *doc) continue;
    total += term_weight(idf(term), p->tf, docs_[*doc].code.size());
  }
  return total;
}

RetrievalResult Bm25Index::retrieve_top1(const Sample& query, bool exclude_self) const {
  return retrieve_top1(query.id, query.code_tokens, exclude_self);
}

RetrievalResult Bm25Index::retrieve_top1(const SampleId& query_id, const Tokens& query,
                                         bool exclude_self) const {
  std::optional<std::size_t> excluded;
  if (exclude_self) excluded = doc_index(query_id);
  if (excluded && docs_.size() == 1) {
    throw InvalidArgument("index holds only the query document '" + query_id + "'");
  }

  // Accumulate per document in lexicographic term order so each score is
  // bit-identical to score(query, id).
  std::vector<double> acc(docs_.size(), 0.0);
  const std::set<Token> terms(query.begin(), query.end());
  for (const auto& term : terms) {
    const auto it = postings_.find(term);
    if (it == postings_.end()) continue;
    const double w = idf(term);
    for (const auto& p : it->second) acc[p.doc] += term_weight(w, p.tf, docs_[p.doc].code.size());
  }

  // Scores that differ only by summation rounding count as ties, and ties
  // go to the smallest id.
  constexpr double kTieTolerance = 1e-12;
  std::optional<std::size_t> best;
  for (std::size_t d = 0; d < docs_.size(); ++d) {
    if (excluded && d == *excluded) continue;
    if (!best || acc[d] - acc[*best] > kTieTolerance * std::max(1.0, std::abs(acc[*best]))) best = d;
  }
  const Document& doc = docs_[*best];
  return {query_id, doc.id, acc[*best], doc.code, doc.comment};
}

std::string Bm25Index::serialize() const {
  ordered_json j;
  j["format"] = kFormat;
  j["k1"] = params_.k1;
  j["b"] = params_.b;
  j["doc_count"] = docs_.size();
  auto& docs = j["documents"] = ordered_json::array();
  for (const auto& d : docs_) {
    docs.push_back({{"id", d.id}, {"code", d.code}, {"comment", d.comment}});
  }
  return j.dump() + "\n";
}

Bm25Index Bm25Index::deserialize(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const ordered_json::parse_error& e) {
    throw FormatError(1, std::string("invalid index JSON: ") + e.what());
  }
  if (!j.is_object() || j.value("format", std::string{}) != kFormat) {
    throw FormatError(1, std::string("not a ") + kFormat + " index");
  }
  try {
    Bm25Index index;
    index.params_ = {j.at("k1").get<double>(), j.at("b").get<double>()};
    for (const auto& d : j.at("documents")) {
      index.docs_.push_back(
          {d.at("id").get<std::string>(), d.at("code").get<Tokens>(), d.at("comment").get<Tokens>()});
    }
    if (index.docs_.size() != j.at("doc_count").get<std::size_t>()) {
      throw FormatError(1, "doc_count does not match the document list");
    }
    if (index.docs_.empty()) throw FormatError(1, "index has no documents");
    if (!std::is_sorted(index.docs_.begin(), index.docs_.end(),
                        [](const Document& a, const Document& b) { return a.id < b.id; })) {
      throw FormatError(1, "documents are not in id order");
    }
    index.finalize();
    return index;
  } catch (const ordered_json::exception& e) {
    throw FormatError(1, std::string("malformed index: ") + e.what());
  }
}

void Bm25Index::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write index file '" + path.string() + "'");
  out << serialize();
}

Bm25Index Bm25Index::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open index file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

}  // namespace hybridsum
