#include "nlq/dataset_io.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "nlq/errors.hpp"
#include "nlq/io_util.hpp"
#include "nlq/rng.hpp"

namespace nlq {

MaskResult derive_mask(const std::vector<Token>& nl,
                       const std::vector<Token>& query) {
  if (nl.empty()) throw Error("derive_mask: empty NL expression");
  MaskResult out;
  out.mask.assign(nl.size(), 0);

  std::set<Token> distinct(query.begin(), query.end());
  if (distinct.empty()) {
    out.coverage = 1.0;
    return out;
  }
  std::size_t present = 0;
  for (const auto& t : distinct) {
    if (std::find(nl.begin(), nl.end(), t) != nl.end()) ++present;
  }
  out.coverage =
      static_cast<double>(present) / static_cast<double>(distinct.size());

  // Prefer the first contiguous occurrence of the whole query.
  if (!query.empty() && query.size() <= nl.size()) {
    auto it = std::search(nl.begin(), nl.end(), query.begin(), query.end());
    if (it != nl.end()) {
      const std::size_t start = static_cast<std::size_t>(it - nl.begin());
      for (std::size_t i = 0; i < query.size(); ++i) out.mask[start + i] = 1;
      return out;
    }
  }

  // Otherwise mark the first occurrence of each distinct query token.
  for (const auto& t : distinct) {
    auto it = std::find(nl.begin(), nl.end(), t);
    if (it != nl.end()) out.mask[static_cast<std::size_t>(it - nl.begin())] = 1;
  }
  return out;
}

std::vector<Token> mask_to_query(const std::vector<Token>& nl,
                                 const SelectionMask& mask) {
  if (nl.size() != mask.size()) {
    throw Error("mask_to_query: length mismatch");
  }
  std::vector<Token> out;
  for (std::size_t i = 0; i < nl.size(); ++i) {
    if (mask[i]) out.push_back(nl[i]);
  }
  return out;
}

std::vector<Token> project_query(const std::vector<Token>& nl,
                                 const std::vector<Token>& query) {
  return mask_to_query(nl, derive_mask(nl, query).mask);
}

DatasetStats dataset_stats(
    const std::vector<std::pair<std::vector<Token>, std::vector<Token>>>&
        pairs) {
  DatasetStats stats;
  stats.pair_count = pairs.size();
  if (pairs.empty()) return stats;
  double len_sum = 0.0, dup_sum = 0.0;
  for (const auto& [nl, query] : pairs) {
    len_sum += static_cast<double>(nl.size());
    const std::set<Token> distinct(nl.begin(), nl.end());
    dup_sum += static_cast<double>(nl.size() - distinct.size());
  }
  stats.avg_nl_length = len_sum / static_cast<double>(pairs.size());
  stats.avg_duplicate_words = dup_sum / static_cast<double>(pairs.size());
  return stats;
}

namespace {

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string collapse_ws(const std::string& s) {
  std::string out;
  bool in_ws = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      in_ws = !out.empty();
    } else {
      if (in_ws) out.push_back(' ');
      in_ws = false;
      out.push_back(c);
    }
  }
  return out;
}

// Strips leading "Number:" / "Description:" style labels, case-insensitive.
std::string strip_label(const std::string& s,
                        std::initializer_list<const char*> labels) {
  const std::string low = lower(s);
  for (const char* label : labels) {
    const std::string l = label;
    if (low.rfind(l, 0) == 0) return trim(s.substr(l.size()));
  }
  return s;
}

}  // namespace

std::vector<Topic> parse_topics_text(const std::string& text,
                                     const std::string& origin) {
  std::vector<Topic> topics;
  Topic cur;
  bool in_topic = false;
  std::string field;  // num, title, desc, narr or empty (ignored)

  auto flush = [&]() {
    if (!in_topic) return;
    cur.topic_id = trim(strip_label(collapse_ws(cur.topic_id),
                                    {"number:", "topic:"}));
    cur.title = trim(strip_label(collapse_ws(cur.title), {"topic:", "title:"}));
    cur.description =
        trim(strip_label(collapse_ws(cur.description), {"description:"}));
    cur.narrative =
        trim(strip_label(collapse_ws(cur.narrative), {"narrative:"}));
    if (cur.title.empty() || cur.description.empty()) {
      throw FormatError(origin + ": topic \"" + cur.topic_id +
                        "\" is missing a title or description");
    }
    topics.push_back(cur);
    cur = Topic{};
    in_topic = false;
    field.clear();
  };

  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::string content = line;
    const std::string t = lower(trim(line));
    if (t.rfind("<top>", 0) == 0) {
      flush();
      in_topic = true;
      field.clear();
      continue;
    }
    if (t.rfind("</top>", 0) == 0) {
      flush();
      continue;
    }
    if (t.rfind('<', 0) == 0) {
      const auto close = t.find('>');
      if (close != std::string::npos) {
        const std::string tag = t.substr(1, close - 1);
        content = trim(line.substr(line.find('>') + 1));
        if (tag == "num") {
          field = "num";
        } else if (tag == "title") {
          field = "title";
        } else if (tag == "desc") {
          field = "desc";
        } else if (tag == "narr") {
          field = "narr";
        } else {
          field.clear();  // unknown tag: ignore its content
          continue;
        }
        if (!in_topic) in_topic = true;
      }
    }
    if (!in_topic || field.empty()) continue;
    std::string* dst = nullptr;
    if (field == "num") dst = &cur.topic_id;
    if (field == "title") dst = &cur.title;
    if (field == "desc") dst = &cur.description;
    if (field == "narr") dst = &cur.narrative;
    if (dst != nullptr && !trim(content).empty()) {
      if (!dst->empty()) dst->push_back(' ');
      dst->append(trim(content));
    }
  }
  flush();
  return topics;
}

std::vector<Topic> parse_topics(const std::string& path) {
  return parse_topics_text(read_file(path), path);
}

RelevanceJudgments parse_qrels_text(const std::string& text,
                                    const std::string& origin) {
  RelevanceJudgments qrels;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::istringstream ls(line);
    std::string topic, iteration, doc_id;
    long long rel;
    if (!(ls >> topic >> iteration >> doc_id >> rel)) {
      throw FormatError(origin + ": qrels line " + std::to_string(lineno) +
                        ": expected \"topic 0 doc_id relevance\"");
    }
    if (rel > 0) qrels[topic].insert(doc_id);
  }
  return qrels;
}

RelevanceJudgments parse_qrels(const std::string& path) {
  return parse_qrels_text(read_file(path), path);
}

std::vector<PairRecord> load_pairs_tsv(const std::string& path) {
  const std::string text = read_file(path);
  std::vector<PairRecord> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto tab1 = line.find('\t');
    const auto tab2 = tab1 == std::string::npos ? tab1 : line.find('\t', tab1 + 1);
    if (tab1 == std::string::npos || tab2 == std::string::npos) {
      throw FormatError(path + ": line " + std::to_string(lineno) +
                        ": expected \"topic_id<TAB>nl<TAB>query\"");
    }
    PairRecord rec;
    rec.topic_id = line.substr(0, tab1);
    rec.nl = line.substr(tab1 + 1, tab2 - tab1 - 1);
    rec.query = line.substr(tab2 + 1);
    out.push_back(std::move(rec));
  }
  return out;
}

std::string pairs_to_tsv(const std::vector<PairRecord>& pairs) {
  std::string out;
  for (const auto& p : pairs) {
    out += p.topic_id;
    out += '\t';
    out += p.nl;
    out += '\t';
    out += p.query;
    out += '\n';
  }
  return out;
}

// ---- synthetic dataset ----

namespace {

const std::vector<std::string>& glue_words() {
  static const std::vector<std::string> kGlue = {
      "find",    "documents", "that",  "discuss", "what",   "are",
      "the",     "of",        "give",  "me",      "information", "on",
      "identify", "reports",  "about", "effects", "how",    "does",
      "impact",  "which",     "studies", "mention", "describe", "related"};
  return kGlue;
}

std::vector<std::string> make_pseudo_words(std::size_t count, Rng& rng,
                                           const std::set<std::string>& taken) {
  static const char* kConsonants = "bcdfgklmnprstvz";
  static const char* kVowels = "aeiou";
  std::set<std::string> seen = taken;
  std::vector<std::string> out;
  out.reserve(count);
  while (out.size() < count) {
    std::string w;
    const std::size_t syllables = 2 + rng.index(2);
    for (std::size_t s = 0; s < syllables; ++s) {
      w.push_back(kConsonants[rng.index(15)]);
      w.push_back(kVowels[rng.index(5)]);
    }
    if (seen.insert(w).second) out.push_back(std::move(w));
  }
  return out;
}

struct Template {
  std::vector<std::string> before;   // glue tokens before the keyword block
  std::vector<std::string> middle;   // glue between keyword 1 and the rest
  std::vector<std::string> after;    // glue tokens after the keywords
};

const std::vector<Template>& nl_templates() {
  static const std::vector<Template> kTemplates = {
      {{"find", "documents", "that", "discuss"}, {}, {}},
      {{"what", "are", "the"}, {"of"}, {}},
      {{"give", "me", "information", "on"}, {}, {}},
      {{"identify", "reports", "about"}, {}, {"effects"}},
      {{"how", "does"}, {"impact"}, {}},
      {{"which", "studies", "mention"}, {}, {}},
  };
  return kTemplates;
}

}  // namespace

SynthData synth_generate(const SynthParams& params) {
  if (params.n_pairs < 1 || params.n_docs < params.n_pairs) {
    throw Error("synth_generate: need n_docs >= n_pairs >= 1");
  }
  const std::size_t content_count = (params.vocab_size * 7) / 10;
  const std::size_t filler_count = params.vocab_size - content_count;
  if (content_count < 4 * params.n_pairs) {
    throw Error("synth_generate: vocab_size too small, need >= " +
                std::to_string((4 * params.n_pairs * 10 + 6) / 7) +
                " for " + std::to_string(params.n_pairs) + " pairs");
  }
  if (params.emb_dim < 2) throw Error("synth_generate: emb_dim must be >= 2");

  Rng rng(mix64(params.seed));
  const auto& glue = glue_words();
  const std::set<std::string> glue_set(glue.begin(), glue.end());
  auto generated =
      make_pseudo_words(params.vocab_size, rng, glue_set);
  std::vector<std::string> content(generated.begin(),
                                   generated.begin() + content_count);
  std::vector<std::string> filler(generated.begin() + content_count,
                                  generated.end());

  SynthData data;

  // Keywords per pair, drawn without reuse across pairs.
  rng.shuffle(content);
  std::vector<std::vector<std::string>> keywords(params.n_pairs);
  std::size_t next_content = 0;
  for (auto& k : keywords) {
    const std::size_t n_k = 2 + rng.index(3);
    for (std::size_t i = 0; i < n_k; ++i) k.push_back(content[next_content++]);
  }

  // Relevant docs: one dedicated doc per pair, then 0-2 extras while spare
  // documents remain.
  std::vector<std::size_t> doc_order(params.n_docs);
  for (std::size_t i = 0; i < params.n_docs; ++i) doc_order[i] = i;
  rng.shuffle(doc_order);
  std::vector<std::vector<std::size_t>> relevant(params.n_pairs);
  std::size_t next_doc = 0;
  for (auto& r : relevant) r.push_back(doc_order[next_doc++]);
  for (auto& r : relevant) {
    std::size_t extra = rng.index(3);
    while (extra > 0 && next_doc < params.n_docs) {
      r.push_back(doc_order[next_doc++]);
      --extra;
    }
  }

  // Background text. Each document chatters over a small personal subset
  // of the glue vocabulary, which keeps per-word document frequencies low
  // enough that the template words of an NL query carry real weight; a
  // quarter of the corpus is verbose glue-heavy chatter that those words
  // then pull in as noise.
  std::vector<std::vector<Token>> doc_tokens(params.n_docs);
  for (auto& tokens : doc_tokens) {
    const bool verbose = rng.uniform() < 0.25;
    const std::size_t len =
        verbose ? 60 + rng.index(41) : 30 + rng.index(31);
    const double glue_rate = verbose ? 0.7 : 0.3;
    const std::size_t glue_span = verbose ? 12 : 6;
    std::vector<std::string> doc_glue(glue.begin(), glue.end());
    rng.shuffle(doc_glue);
    doc_glue.resize(glue_span);
    tokens.reserve(len + 16);
    for (std::size_t i = 0; i < len; ++i) {
      if (rng.uniform() < glue_rate) {
        tokens.push_back(doc_glue[rng.index(doc_glue.size())]);
      } else {
        tokens.push_back(filler[rng.index(filler.size())]);
      }
    }
  }

  // Plant keywords. A relevant doc carries most (not necessarily all) of
  // its pair's keywords with tf 2-3; distractor docs get single sparse
  // occurrences so the gold query still ranks relevant docs first.
  for (std::size_t k = 0; k < params.n_pairs; ++k) {
    for (std::size_t doc : relevant[k]) {
      bool any = false;
      for (const auto& word : keywords[k]) {
        if (rng.uniform() >= 0.8) continue;
        any = true;
        const std::size_t tf = 2 + rng.index(2);
        for (std::size_t i = 0; i < tf; ++i) doc_tokens[doc].push_back(word);
      }
      if (!any) {
        for (std::size_t i = 0; i < 2; ++i) {
          doc_tokens[doc].push_back(keywords[k][0]);
        }
      }
    }
    for (const auto& word : keywords[k]) {
      std::size_t noise = 2 + rng.index(3);
      while (noise > 0) {
        const std::size_t doc = rng.index(params.n_docs);
        --noise;
        if (std::find(relevant[k].begin(), relevant[k].end(), doc) !=
            relevant[k].end()) {
          continue;
        }
        doc_tokens[doc].push_back(word);
      }
    }
  }

  data.corpus.reserve(params.n_docs);
  char doc_id[32];
  for (std::size_t i = 0; i < params.n_docs; ++i) {
    rng.shuffle(doc_tokens[i]);
    std::snprintf(doc_id, sizeof doc_id, "SYN-%04zu", i);
    data.corpus.push_back({doc_id, std::move(doc_tokens[i])});
  }

  // NL expressions from templates; the gold mask marks exactly the keywords.
  const auto& templates = nl_templates();
  for (std::size_t k = 0; k < params.n_pairs; ++k) {
    const Template& tpl = templates[rng.index(templates.size())];
    std::vector<Token> nl(tpl.before.begin(), tpl.before.end());
    SelectionMask gold(nl.size(), 0);
    auto push_keyword = [&](const std::string& w) {
      nl.push_back(w);
      gold.push_back(1);
    };
    push_keyword(keywords[k][0]);
    for (const auto& g : tpl.middle) {
      nl.push_back(g);
      gold.push_back(0);
    }
    for (std::size_t i = 1; i < keywords[k].size(); ++i) {
      push_keyword(keywords[k][i]);
    }
    for (const auto& g : tpl.after) {
      nl.push_back(g);
      gold.push_back(0);
    }

    PairRecord rec;
    rec.topic_id = std::to_string(k + 1);
    for (std::size_t i = 0; i < nl.size(); ++i) {
      if (i) rec.nl.push_back(' ');
      rec.nl += nl[i];
    }
    for (std::size_t i = 0; i < keywords[k].size(); ++i) {
      if (i) rec.query.push_back(' ');
      rec.query += keywords[k][i];
    }
    for (std::size_t doc : relevant[k]) {
      data.qrels[rec.topic_id].insert(data.corpus[doc].doc_id);
    }
    data.pairs.push_back(std::move(rec));
    data.gold_masks.push_back(std::move(gold));
  }

  // Embeddings: content words cluster opposite glue/filler words along the
  // first coordinate so the selection signal is learnable from vectors.
  data.emb_dim = params.emb_dim;
  auto emit_vectors = [&](const std::vector<std::string>& words, double mu0) {
    for (const auto& w : words) {
      std::vector<double> v(params.emb_dim);
      v[0] = mu0 + 0.25 * rng.gaussian();
      for (std::size_t j = 1; j < params.emb_dim; ++j) {
        v[j] = 0.25 * rng.gaussian();
      }
      data.embeddings.emplace_back(w, std::move(v));
    }
  };
  emit_vectors(glue, -0.9);
  emit_vectors(content, 0.9);
  emit_vectors(filler, -0.9);
  return data;
}

std::string embeddings_to_text(
    const std::vector<std::pair<Token, std::vector<double>>>& vectors,
    std::size_t dim) {
  std::string out = std::to_string(vectors.size()) + " " +
                    std::to_string(dim) + "\n";
  for (const auto& [word, vec] : vectors) {
    out += word;
    for (double x : vec) {
      out += ' ';
      out += format_double(x, 6);
    }
    out += '\n';
  }
  return out;
}

std::string corpus_to_tsv(const std::vector<Document>& corpus) {
  std::string out;
  for (const auto& doc : corpus) {
    out += doc.doc_id;
    out += '\t';
    for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
      if (i) out.push_back(' ');
      out += doc.tokens[i];
    }
    out += '\n';
  }
  return out;
}

std::vector<Document> load_corpus_tsv(const std::string& path,
                                      const Analyzer& analyzer) {
  const std::string text = read_file(path);
  std::vector<Document> corpus;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw FormatError(path + ": line " + std::to_string(lineno) +
                        ": expected \"doc_id<TAB>text\"");
    }
    Document doc;
    doc.doc_id = line.substr(0, tab);
    doc.tokens = analyzer(line.substr(tab + 1));
    corpus.push_back(std::move(doc));
  }
  return corpus;
}

std::string qrels_to_text(const RelevanceJudgments& qrels) {
  std::string out;
  for (const auto& [topic, docs] : qrels) {
    for (const auto& doc : docs) {
      out += topic;
      out += " 0 ";
      out += doc;
      out += " 1\n";
    }
  }
  return out;
}

}  // namespace nlq
