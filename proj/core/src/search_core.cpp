#include "nlq/search_core.hpp"

#include <algorithm>
#include <cmath>

#include "nlq/errors.hpp"
#include "nlq/io_util.hpp"

namespace nlq {

namespace {

constexpr char kIndexMagic[8] = {'N', 'L', 'Q', 'I', 'D', 'X', '0', '1'};
constexpr std::uint32_t kIndexVersion = 1;

// Distinct query terms with their query-side frequencies, in order of first
// appearance. The fixed order makes score accumulation deterministic.
std::vector<std::pair<Token, std::uint32_t>> query_profile(
    const std::vector<Token>& query) {
  std::vector<std::pair<Token, std::uint32_t>> profile;
  std::unordered_map<Token, std::size_t> pos;
  for (const auto& t : query) {
    auto it = pos.find(t);
    if (it == pos.end()) {
      pos[t] = profile.size();
      profile.emplace_back(t, 1);
    } else {
      ++profile[it->second].second;
    }
  }
  return profile;
}

double term_doc_score(const Bm25Params& p, double idf, std::uint32_t qtf,
                      std::uint32_t tf, std::uint64_t dl, double avgdl) {
  const double norm = p.k1 * (1.0 - p.b + p.b * static_cast<double>(dl) / avgdl);
  const double tf_part =
      static_cast<double>(tf) * (p.k1 + 1.0) / (static_cast<double>(tf) + norm);
  return static_cast<double>(qtf) * idf * tf_part;
}

}  // namespace

Index Index::build(const std::vector<Document>& corpus, Bm25Params p) {
  if (corpus.empty()) {
    throw FormatError("cannot index an empty corpus (avgdl undefined)");
  }

  Index index;
  index.params_ = p;

  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return corpus[a].doc_id < corpus[b].doc_id;
  });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (corpus[order[i]].doc_id == corpus[order[i - 1]].doc_id) {
      throw FormatError("duplicate doc_id: " + corpus[order[i]].doc_id);
    }
  }

  index.doc_ids_.reserve(corpus.size());
  index.doc_lengths_.reserve(corpus.size());
  std::uint64_t total_len = 0;
  for (std::size_t ord = 0; ord < order.size(); ++ord) {
    const Document& doc = corpus[order[ord]];
    index.doc_ids_.push_back(doc.doc_id);
    index.doc_lengths_.push_back(doc.tokens.size());
    total_len += doc.tokens.size();

    std::unordered_map<Token, std::uint32_t> tf;
    for (const auto& t : doc.tokens) ++tf[t];
    for (const auto& [term, count] : tf) {
      index.postings_[term].push_back(
          {static_cast<std::uint32_t>(ord), count});
    }
  }
  // Documents were visited in ordinal order, so lists are already sorted.
  index.avgdl_ = static_cast<double>(total_len) /
                 static_cast<double>(index.doc_ids_.size());
  return index;
}

std::optional<std::uint32_t> Index::ordinal(const std::string& doc_id) const {
  auto it = std::lower_bound(doc_ids_.begin(), doc_ids_.end(), doc_id);
  if (it == doc_ids_.end() || *it != doc_id) return std::nullopt;
  return static_cast<std::uint32_t>(it - doc_ids_.begin());
}

const std::vector<Posting>* Index::postings(const Token& term) const {
  auto it = postings_.find(term);
  return it == postings_.end() ? nullptr : &it->second;
}

std::size_t Index::doc_freq(const Token& term) const {
  const auto* plist = postings(term);
  return plist == nullptr ? 0 : plist->size();
}

double Index::idf(const Token& term) const {
  const double df = static_cast<double>(doc_freq(term));
  const double n = static_cast<double>(num_docs());
  return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

double bm25_score(const Index& index, const std::vector<Token>& query,
                  const std::string& doc_id) {
  const auto ord = index.ordinal(doc_id);
  if (!ord.has_value()) throw Error("unknown doc_id: " + doc_id);

  double score = 0.0;
  for (const auto& [term, qtf] : query_profile(query)) {
    const auto* plist = index.postings(term);
    if (plist == nullptr) continue;
    auto it = std::lower_bound(
        plist->begin(), plist->end(), *ord,
        [](const Posting& p, std::uint32_t o) { return p.doc < o; });
    if (it == plist->end() || it->doc != *ord) continue;
    score += term_doc_score(index.params(), index.idf(term), qtf, it->tf,
                            index.doc_length(*ord), index.avgdl());
  }
  return score;
}

Ranking search(const Index& index, const std::vector<Token>& query,
               std::size_t k) {
  if (k < 1) throw Error("search: k must be >= 1");

  std::vector<double> scores(index.num_docs(), 0.0);
  for (const auto& [term, qtf] : query_profile(query)) {
    const auto* plist = index.postings(term);
    if (plist == nullptr) continue;
    const double idf = index.idf(term);
    for (const Posting& p : *plist) {
      scores[p.doc] += term_doc_score(index.params(), idf, qtf, p.tf,
                                      index.doc_length(p.doc), index.avgdl());
    }
  }

  std::vector<std::uint32_t> hits;
  for (std::uint32_t ord = 0; ord < scores.size(); ++ord) {
    if (scores[ord] > 0.0) hits.push_back(ord);
  }
  // Ordinals ascend with doc_id, so ties fall back to ascending doc_id.
  std::stable_sort(hits.begin(), hits.end(),
                   [&](std::uint32_t a, std::uint32_t b) {
                     if (scores[a] != scores[b]) return scores[a] > scores[b];
                     return a < b;
                   });
  if (hits.size() > k) hits.resize(k);

  Ranking out;
  out.reserve(hits.size());
  for (auto ord : hits) out.push_back({index.doc_ids()[ord], scores[ord]});
  return out;
}

double average_precision(const Ranking& ranking,
                         const std::set<std::string>& relevant) {
  if (relevant.empty()) {
    throw Error("average_precision: empty relevant set is undefined");
  }
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < ranking.size(); ++r) {
    if (relevant.count(ranking[r].doc_id) > 0) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  return sum / static_cast<double>(relevant.size());
}

void Index::save(const std::string& path) const {
  ByteWriter w;
  w.raw(kIndexMagic, sizeof kIndexMagic);
  w.u32(kIndexVersion);
  w.f64(params_.k1);
  w.f64(params_.b);
  w.u64(doc_ids_.size());
  w.f64(avgdl_);
  for (std::size_t i = 0; i < doc_ids_.size(); ++i) {
    w.str(doc_ids_[i]);
    w.u64(doc_lengths_[i]);
  }
  // Sort terms so the serialized form is byte-identical across rebuilds.
  std::vector<const Token*> terms;
  terms.reserve(postings_.size());
  for (const auto& [term, plist] : postings_) terms.push_back(&term);
  std::sort(terms.begin(), terms.end(),
            [](const Token* a, const Token* b) { return *a < *b; });
  w.u64(terms.size());
  for (const Token* term : terms) {
    w.str(*term);
    const auto& plist = postings_.at(*term);
    w.u64(plist.size());
    for (const Posting& p : plist) {
      w.u32(p.doc);
      w.u32(p.tf);
    }
  }
  // Config hash guards against loading an index built with other knobs.
  ByteWriter cfg;
  cfg.f64(params_.k1);
  cfg.f64(params_.b);
  w.u64(fnv1a64(cfg.bytes()));
  atomic_write_file(path, w.bytes());
}

Index Index::load(const std::string& path) {
  const std::string bytes = read_file(path);
  ByteReader r(bytes);
  char magic[8];
  for (char& c : magic) c = static_cast<char>(r.u8());
  if (std::string_view(magic, 8) != std::string_view(kIndexMagic, 8)) {
    throw FormatError("not an index file: " + path);
  }
  const auto version = r.u32();
  if (version != kIndexVersion) {
    throw FormatError("unsupported index version " + std::to_string(version) +
                      " in " + path);
  }
  Index index;
  index.params_.k1 = r.f64();
  index.params_.b = r.f64();
  const auto n_docs = r.u64();
  index.avgdl_ = r.f64();
  index.doc_ids_.reserve(n_docs);
  index.doc_lengths_.reserve(n_docs);
  for (std::uint64_t i = 0; i < n_docs; ++i) {
    index.doc_ids_.push_back(r.str());
    index.doc_lengths_.push_back(r.u64());
  }
  const auto n_terms = r.u64();
  for (std::uint64_t i = 0; i < n_terms; ++i) {
    Token term = r.str();
    const auto n_postings = r.u64();
    std::vector<Posting> plist;
    plist.reserve(n_postings);
    for (std::uint64_t j = 0; j < n_postings; ++j) {
      Posting p;
      p.doc = r.u32();
      p.tf = r.u32();
      plist.push_back(p);
    }
    index.postings_[std::move(term)] = std::move(plist);
  }
  ByteWriter cfg;
  cfg.f64(index.params_.k1);
  cfg.f64(index.params_.b);
  if (r.u64() != fnv1a64(cfg.bytes())) {
    throw FormatError("index config hash mismatch: " + path);
  }
  if (!r.at_end()) throw FormatError("trailing bytes in index file: " + path);
  return index;
}

}  // namespace nlq
