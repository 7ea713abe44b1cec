#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "nlq/textproc.hpp"

namespace nlq {

struct Document {
  std::string doc_id;
  std::vector<Token> tokens;
};

struct Posting {
  std::uint32_t doc;  // ordinal into doc_ids(), which is sorted
  std::uint32_t tf;
};

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

// Frozen inverted index with the statistics BM25 needs. Documents are
// addressed by ordinal into the sorted doc-id table, so posting lists
// sorted by ordinal are sorted by doc_id as well.
class Index {
 public:
  static Index build(const std::vector<Document>& corpus, Bm25Params p = {});

  std::size_t num_docs() const { return doc_ids_.size(); }
  double avgdl() const { return avgdl_; }
  const Bm25Params& params() const { return params_; }
  const std::vector<std::string>& doc_ids() const { return doc_ids_; }
  std::uint64_t doc_length(std::uint32_t ordinal) const {
    return doc_lengths_[ordinal];
  }
  std::optional<std::uint32_t> ordinal(const std::string& doc_id) const;
  const std::vector<Posting>* postings(const Token& term) const;
  std::size_t doc_freq(const Token& term) const;
  double idf(const Token& term) const;

  void save(const std::string& path) const;
  static Index load(const std::string& path);

 private:
  Bm25Params params_;
  std::vector<std::string> doc_ids_;       // sorted ascending
  std::vector<std::uint64_t> doc_lengths_;  // by ordinal
  double avgdl_ = 0.0;
  std::unordered_map<Token, std::vector<Posting>> postings_;
};

struct ScoredDoc {
  std::string doc_id;
  double score;
};

// Descending score, ties broken by ascending doc_id, no duplicates.
using Ranking = std::vector<ScoredDoc>;

// Query-side term frequency multiplies each term's contribution; terms
// absent from the index contribute 0. Unknown doc_id throws.
double bm25_score(const Index& index, const std::vector<Token>& query,
                  const std::string& doc_id);

// Top-k documents with score > 0. k must be >= 1.
Ranking search(const Index& index, const std::vector<Token>& query,
               std::size_t k);

// Uncapped AP: relevant docs missing from the ranking contribute 0.
// Throws on an empty relevant set.
double average_precision(const Ranking& ranking,
                         const std::set<std::string>& relevant);

// topic_id -> relevant doc ids. Doc ids need not exist in the corpus.
using RelevanceJudgments = std::map<std::string, std::set<std::string>>;

}  // namespace nlq
