#include "nlq/textproc.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "nlq/errors.hpp"

namespace nlq {

namespace {

bool token_byte(unsigned char c) {
  return std::isalnum(c) != 0 || c >= 0x80;
}

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  Token cur;
  for (unsigned char c : text) {
    if (token_byte(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::vector<Token> Analyzer::operator()(std::string_view text) const {
  auto toks = tokenize(text);
  if (stopwords.empty()) return toks;
  std::vector<Token> kept;
  kept.reserve(toks.size());
  for (auto& t : toks) {
    if (stopwords.count(t) == 0) kept.push_back(std::move(t));
  }
  return kept;
}

Vocab Vocab::build(const std::vector<std::vector<Token>>& corpus) {
  Vocab v;
  std::set<Token> distinct;
  for (const auto& seq : corpus) {
    distinct.insert(seq.begin(), seq.end());
  }
  v.terms_.assign(distinct.begin(), distinct.end());
  for (std::size_t i = 0; i < v.terms_.size(); ++i) {
    v.ids_[v.terms_[i]] = static_cast<int>(i);
  }
  return v;
}

int Vocab::lookup(const Token& t) const {
  auto it = ids_.find(t);
  return it == ids_.end() ? -1 : it->second;
}

EmbeddingTable EmbeddingTable::load(const std::string& path,
                                    const Vocab& vocab, EmbeddingConfig cfg) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open embeddings file: " + path);

  std::string header;
  if (!std::getline(in, header)) {
    throw FormatError("embeddings: empty file: " + path);
  }
  std::istringstream hs(header);
  long long count = -1, dim = -1;
  std::string extra;
  if (!(hs >> count >> dim) || (hs >> extra) || count < 0 || dim <= 0) {
    throw FormatError("embeddings: malformed header line: \"" + header + "\"");
  }

  EmbeddingTable table;
  table.dim_ = static_cast<std::size_t>(dim);
  table.cfg_ = cfg;

  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    std::vector<double> vec;
    vec.reserve(table.dim_);
    double x;
    while (ls >> x) vec.push_back(x);
    if (vec.size() != table.dim_) {
      throw FormatError("embeddings: line " + std::to_string(lineno) +
                        " has " + std::to_string(vec.size()) +
                        " components, expected " + std::to_string(table.dim_));
    }
    if (vocab.size() == 0 || vocab.contains(word)) {
      table.vectors_[word] = std::move(vec);
    }
  }

  // Fill vocab terms missing from the file so the table covers the vocab.
  for (const auto& term : vocab.terms()) {
    if (table.vectors_.count(term) == 0) {
      table.vectors_[term] = table.oov_vector(term);
    }
  }
  return table;
}

EmbeddingTable EmbeddingTable::synthetic(std::size_t dim, EmbeddingConfig cfg) {
  EmbeddingTable table;
  table.dim_ = dim;
  table.cfg_ = cfg;
  return table;
}

std::vector<double> EmbeddingTable::lookup(const Token& t) const {
  auto it = vectors_.find(t);
  if (it != vectors_.end()) return it->second;
  return oov_vector(t);
}

std::vector<double> EmbeddingTable::oov_vector(const Token& t) const {
  std::vector<double> v(dim_, 0.0);
  if (cfg_.policy == OovPolicy::kZero) return v;
  Rng rng(seed_combine(cfg_.seed, fnv1a64(t)));
  double norm2 = 0.0;
  for (auto& x : v) {
    x = rng.gaussian();
    norm2 += x * x;
  }
  const double norm = std::sqrt(norm2);
  if (norm > 0.0) {
    for (auto& x : v) x *= cfg_.scale / norm;
  }
  return v;
}

std::vector<std::vector<double>> embed_tokens(const std::vector<Token>& tokens,
                                              const EmbeddingTable& table) {
  std::vector<std::vector<double>> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(table.lookup(t));
  return out;
}

}  // namespace nlq
