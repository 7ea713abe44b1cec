#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nlq/rng.hpp"

namespace nlq {

// A token is lowercase, non-empty and free of whitespace/punctuation.
using Token = std::string;

// Binary word-selection mask over a token sequence; 1 keeps the token.
using SelectionMask = std::vector<std::uint8_t>;

// Lowercases and splits on whitespace/punctuation boundaries; punctuation
// is dropped. Bytes >= 0x80 are kept verbatim so UTF-8 words survive.
std::vector<Token> tokenize(std::string_view text);

// Tokenizer plus an optional stopword list. The same analyzer must be used
// for documents, NL expressions and queries or BM25 statistics drift.
struct Analyzer {
  std::set<std::string> stopwords;  // empty by default

  std::vector<Token> operator()(std::string_view text) const;
};

// Dense, lexicographically ordered term ids for a fixed corpus.
class Vocab {
 public:
  Vocab() = default;

  static Vocab build(const std::vector<std::vector<Token>>& corpus);

  std::size_t size() const { return terms_.size(); }
  const std::vector<Token>& terms() const { return terms_; }
  // -1 when absent.
  int lookup(const Token& t) const;
  const Token& term(std::size_t id) const { return terms_[id]; }
  bool contains(const Token& t) const { return lookup(t) >= 0; }

 private:
  std::vector<Token> terms_;
  std::unordered_map<Token, int> ids_;
};

enum class OovPolicy : std::uint8_t { kHashRandom = 0, kZero = 1 };

struct EmbeddingConfig {
  OovPolicy policy = OovPolicy::kHashRandom;
  std::uint64_t seed = 0;
  double scale = 1.0;  // norm of hash-random vectors
};

// Word vectors keyed by token. Lookups of unknown tokens fall back to the
// OOV policy, so the table is total; hash-random fallbacks depend only on
// (token, seed) and are bit-reproducible.
class EmbeddingTable {
 public:
  // File format: first line "<count> <dim>", then "<word> <v1> ... <vdim>".
  static EmbeddingTable load(const std::string& path, const Vocab& vocab,
                             EmbeddingConfig cfg);
  // No file at all: every lookup goes through the OOV policy.
  static EmbeddingTable synthetic(std::size_t dim, EmbeddingConfig cfg);

  std::size_t dim() const { return dim_; }
  const EmbeddingConfig& config() const { return cfg_; }
  bool stored(const Token& t) const { return vectors_.count(t) > 0; }
  std::vector<double> lookup(const Token& t) const;

 private:
  std::size_t dim_ = 0;
  EmbeddingConfig cfg_;
  std::unordered_map<Token, std::vector<double>> vectors_;

  std::vector<double> oov_vector(const Token& t) const;
};

std::vector<std::vector<double>> embed_tokens(const std::vector<Token>& tokens,
                                              const EmbeddingTable& table);

}  // namespace nlq
