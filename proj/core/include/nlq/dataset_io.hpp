#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nlq/search_core.hpp"
#include "nlq/textproc.hpp"

namespace nlq {

struct Topic {
  std::string topic_id;
  std::string title;
  std::string description;
  std::string narrative;  // parsed but unused
};

struct MaskResult {
  SelectionMask mask;
  // Fraction of distinct query tokens found in the NL expression.
  double coverage = 1.0;
};

// Marks the query inside the NL token sequence. A contiguous occurrence of
// the whole query wins (first such span); otherwise each distinct query
// token present in nl gets its first occurrence. Absent tokens are skipped
// and reported through the coverage ratio.
MaskResult derive_mask(const std::vector<Token>& nl,
                       const std::vector<Token>& query);

// Tokens at mask-1 positions, original order.
std::vector<Token> mask_to_query(const std::vector<Token>& nl,
                                 const SelectionMask& mask);

// Projection of the query onto the NL vocabulary (the Q-bin baseline).
std::vector<Token> project_query(const std::vector<Token>& nl,
                                 const std::vector<Token>& query);

struct DatasetStats {
  std::size_t pair_count = 0;
  double avg_nl_length = 0.0;
  double avg_duplicate_words = 0.0;  // mean of |tokens| - |distinct tokens|
};

DatasetStats dataset_stats(
    const std::vector<std::pair<std::vector<Token>, std::vector<Token>>>&
        pairs);

// Tag-delimited legacy topic format: <top>/<num>/<title>/<desc>/<narr>,
// case-insensitive, "Number:"-style prefixes stripped, unknown tags
// ignored. Topics missing a title or description raise a FormatError
// naming the topic.
std::vector<Topic> parse_topics(const std::string& path);
std::vector<Topic> parse_topics_text(const std::string& text,
                                     const std::string& origin);

// Lines "topic_id 0 doc_id relevance"; relevance > 0 marks relevant.
RelevanceJudgments parse_qrels(const std::string& path);
RelevanceJudgments parse_qrels_text(const std::string& text,
                                    const std::string& origin);

// Native pair file: one record per line, "topic_id<TAB>nl<TAB>query".
struct PairRecord {
  std::string topic_id;
  std::string nl;
  std::string query;
};

std::vector<PairRecord> load_pairs_tsv(const std::string& path);
std::string pairs_to_tsv(const std::vector<PairRecord>& pairs);

// ---- synthetic dataset ----

struct SynthParams {
  std::uint64_t seed = 0;
  std::size_t n_docs = 200;
  std::size_t n_pairs = 60;
  std::size_t vocab_size = 400;
  std::size_t emb_dim = 16;
};

struct SynthData {
  std::vector<Document> corpus;
  std::vector<PairRecord> pairs;
  RelevanceJudgments qrels;
  // Word vectors for the full synthetic vocabulary; content words cluster
  // away from glue/filler words, standing in for pretrained embeddings.
  std::vector<std::pair<Token, std::vector<double>>> embeddings;
  std::size_t emb_dim = 0;
  // Gold masks per pair, aligned with `pairs`.
  std::vector<SelectionMask> gold_masks;
};

// Seeded generator for license-free end-to-end runs: a handful of content
// keywords per pair are planted in the pair's relevant documents (and
// sparsely elsewhere) and wrapped in a verbose NL template built from glue
// words, so the gold mask marks exactly the keywords and filler terms act
// as retrieval noise.
SynthData synth_generate(const SynthParams& params);

std::string embeddings_to_text(
    const std::vector<std::pair<Token, std::vector<double>>>& vectors,
    std::size_t dim);
std::string corpus_to_tsv(const std::vector<Document>& corpus);
std::vector<Document> load_corpus_tsv(const std::string& path,
                                      const Analyzer& analyzer);
std::string qrels_to_text(const RelevanceJudgments& qrels);

}  // namespace nlq
