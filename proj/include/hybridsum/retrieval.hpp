#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "hybridsum/corpus.hpp"
#include "hybridsum/tokens.hpp"

namespace hybridsum {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

struct RetrievalResult {
  SampleId query_id;
  SampleId retrieved_id;
  double score = 0.0;
  Tokens retrieved_code;
  Tokens retrieved_comment;
};

/// Okapi BM25 inverted index over the code tokens of one corpus split.
///
/// Documents are stored in ascending id order, so "smallest index" and
/// "smallest id" coincide for tie-breaking. The index keeps each document's
/// code and comment so retrieval results are self-contained.
class Bm25Index {
public:
  struct Posting {
    std::size_t doc;
    std::size_t tf;
  };

  struct Document {
    SampleId id;
    Tokens code;
    Tokens comment;
  };

  /// Indexes the given split (train by default). Throws on an empty split.
  static Bm25Index build(const Corpus& corpus, Split split = Split::Train, Bm25Params params = {});
  static Bm25Index build(std::vector<Document> documents, Bm25Params params = {});

  std::size_t doc_count() const noexcept { return docs_.size(); }
  double avg_doc_len() const noexcept { return avg_doc_len_; }
  const Bm25Params& params() const noexcept { return params_; }
  const std::vector<Document>& documents() const noexcept { return docs_; }
  std::size_t doc_len(std::size_t doc) const { return docs_.at(doc).code.size(); }
  std::size_t document_frequency(const Token& term) const;
  double idf(const Token& term) const;

  bool contains(const SampleId& id) const { return by_id_.count(id) != 0; }
  std::optional<std::size_t> doc_index(const SampleId& id) const;

  /// Sum over the distinct query terms (in lexicographic order) of
  /// idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * |d| / avgdl)).
  double score(const Tokens& query, const SampleId& doc_id) const;

  /// Highest-scoring document, ties to the smallest id. With `exclude_self`
  /// the query's own id is skipped when it is indexed.
  RetrievalResult retrieve_top1(const Sample& query, bool exclude_self = true) const;
  RetrievalResult retrieve_top1(const SampleId& query_id, const Tokens& query,
                                bool exclude_self = true) const;

  std::string serialize() const;
  static Bm25Index deserialize(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static Bm25Index load(const std::filesystem::path& path);

  static constexpr const char* kFormat = "hybridsum-bm25/1";

private:
  Bm25Index() = default;
  void finalize();
  double term_weight(double idf, std::size_t tf, std::size_t doc_len) const;

  Bm25Params params_;
  std::vector<Document> docs_;
  std::unordered_map<SampleId, std::size_t> by_id_;
  std::unordered_map<Token, std::vector<Posting>> postings_;
  double avg_doc_len_ = 0.0;
};

}  // namespace hybridsum
