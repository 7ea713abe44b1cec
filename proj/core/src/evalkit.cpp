#include "nlq/evalkit.hpp"

#include <algorithm>
#include <cmath>

#include "nlq/errors.hpp"
#include "nlq/io_util.hpp"

namespace nlq {

const std::vector<BaselineKind>& all_baselines() {
  static const std::vector<BaselineKind> kAll = {
      BaselineKind::NL,     BaselineKind::Q,  BaselineKind::QBIN,
      BaselineKind::RANDOM, BaselineKind::SMT, BaselineKind::RL,
      BaselineKind::SMT_RL};
  return kAll;
}

const char* baseline_name(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::NL: return "NL";
    case BaselineKind::Q: return "Q";
    case BaselineKind::QBIN: return "Q bin";
    case BaselineKind::RANDOM: return "Random";
    case BaselineKind::SMT: return "SMT";
    case BaselineKind::RL: return "RL";
    case BaselineKind::SMT_RL: return "SMT+RL";
  }
  return "?";
}

BaselineKind parse_baseline(const std::string& name) {
  std::string low;
  for (char c : name) {
    if (c == ' ' || c == '_' || c == '-') continue;
    low.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (low == "nl") return BaselineKind::NL;
  if (low == "q") return BaselineKind::Q;
  if (low == "qbin") return BaselineKind::QBIN;
  if (low == "random") return BaselineKind::RANDOM;
  if (low == "smt") return BaselineKind::SMT;
  if (low == "rl") return BaselineKind::RL;
  if (low == "smt+rl" || low == "smtrl") return BaselineKind::SMT_RL;
  throw UsageError("unknown baseline: " + name);
}

std::vector<std::vector<std::size_t>> kfold_split(std::size_t n_items,
                                                  std::size_t k,
                                                  std::uint64_t seed) {
  if (k < 1 || n_items < k) {
    throw Error("kfold_split: need n_items >= k >= 1");
  }
  std::vector<std::size_t> order(n_items);
  for (std::size_t i = 0; i < n_items; ++i) order[i] = i;
  Rng rng(mix64(seed));
  rng.shuffle(order);

  std::vector<std::vector<std::size_t>> folds(k);
  const std::size_t base = n_items / k;
  const std::size_t extra = n_items % k;
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = base + (f < extra ? 1 : 0);
    folds[f].assign(order.begin() + pos, order.begin() + pos + size);
    pos += size;
  }
  return folds;
}

double mean_ap(std::span<const double> aps) {
  if (aps.empty()) throw Error("mean_ap: empty input");
  double sum = 0.0;
  for (double ap : aps) sum += ap;
  return sum / static_cast<double>(aps.size());
}

double pct_change(double ours, double baseline) {
  if (baseline <= 0.0) {
    throw Error("pct_change: baseline MAP must be positive");
  }
  return (ours - baseline) / baseline * 100.0;
}

namespace {

double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// Continued fraction for the incomplete beta (Lentz's method).
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 3e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

double reg_inc_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double bt =
      std::exp(a * std::log(x) + b * std::log1p(-x) - log_beta(a, b));
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return bt * betacf(a, b, x) / a;
  }
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

int stars_for_p(double p) {
  if (p <= 0.001) return 3;
  if (p <= 0.01) return 2;
  if (p <= 0.05) return 1;
  return 0;
}

}  // namespace

double student_t_two_tailed_p(double t, double df) {
  if (!std::isfinite(t)) return 0.0;
  if (t == 0.0) return 1.0;
  return reg_inc_beta(df / 2.0, 0.5, df / (df + t * t));
}

TTestResult paired_t_test(std::span<const double> a,
                          std::span<const double> b) {
  if (a.size() != b.size()) throw Error("paired_t_test: length mismatch");
  const std::size_t n = a.size();
  if (n < 2) throw Error("paired_t_test: need at least 2 pairs");

  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i] - mean;
    ss += d * d;
  }
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));

  TTestResult result;
  if (sd == 0.0) {
    if (mean == 0.0) {
      result.t = 0.0;
      result.p = 1.0;
    } else {
      result.t = mean > 0.0 ? std::numeric_limits<double>::infinity()
                            : -std::numeric_limits<double>::infinity();
      result.p = 0.0;
    }
  } else {
    result.t = mean / (sd / std::sqrt(static_cast<double>(n)));
    result.p = student_t_two_tailed_p(result.t, static_cast<double>(n - 1));
  }
  result.stars = stars_for_p(result.p);
  return result;
}

namespace {

PairSet subset(const PairSet& all, std::span<const std::size_t> idx) {
  PairSet out;
  out.items.reserve(idx.size());
  for (auto i : idx) out.items.push_back(all.items[i]);
  return out;
}

double query_ap(const std::vector<Token>& query, const std::string& topic_id,
                const RewardContext& ctx) {
  auto it = ctx.judgments->find(topic_id);
  if (it == ctx.judgments->end() || it->second.empty()) {
    throw Error("no relevance judgments for topic " + topic_id);
  }
  if (query.empty()) return 0.0;
  return average_precision(search(*ctx.index, query, ctx.rank_depth),
                           it->second);
}

SelectionMask random_mask(const PairItem& item, std::uint64_t seed) {
  const std::size_t n = item.x.tokens.size();
  SelectionMask mask(n, 0);
  if (n <= 3) {
    std::fill(mask.begin(), mask.end(), 1);
    return mask;
  }
  // Reproducible per topic regardless of evaluation order.
  Rng rng(seed_combine(seed, fnv1a64(item.topic_id)));
  std::vector<std::size_t> positions(n);
  for (std::size_t i = 0; i < n; ++i) positions[i] = i;
  rng.shuffle(positions);
  for (std::size_t i = 0; i < 3; ++i) mask[positions[i]] = 1;
  return mask;
}

std::uint64_t kind_tag(BaselineKind kind) {
  return fnv1a64(baseline_name(kind));
}

}  // namespace

std::vector<TopicAp> run_baseline(BaselineKind kind, const PairSet& all,
                                  std::span<const std::size_t> train_idx,
                                  std::span<const std::size_t> test_idx,
                                  const RewardContext& ctx,
                                  const EvalConfig& cfg,
                                  std::uint64_t fold_tag) {
  const bool trained = kind == BaselineKind::SMT || kind == BaselineKind::RL ||
                       kind == BaselineKind::SMT_RL;

  SelectionModel model(cfg.model);
  if (trained) {
    PairSet train = subset(all, train_idx);
    const std::uint64_t run_seed =
        seed_combine(seed_combine(cfg.seed, fold_tag), kind_tag(kind));
    TrainConfig tc = cfg.train;
    tc.seed = run_seed;
    tc.batch_size = std::min(tc.batch_size, train.size());
    model.init_params(seed_combine(run_seed, fnv1a64("init")));
    if (kind == BaselineKind::SMT || kind == BaselineKind::SMT_RL) {
      train_mle(model, train, tc);
    }
    if (kind == BaselineKind::RL || kind == BaselineKind::SMT_RL) {
      train_rl(model, train, ctx, tc);
    }
  }

  std::vector<TopicAp> out;
  out.reserve(test_idx.size());
  for (auto i : test_idx) {
    const PairItem& item = all.items[i];
    std::vector<Token> query;
    switch (kind) {
      case BaselineKind::NL:
        query = item.x.tokens;
        break;
      case BaselineKind::Q:
        query = item.query_tokens;
        break;
      case BaselineKind::QBIN:
        query = project_query(item.x.tokens, item.query_tokens);
        break;
      case BaselineKind::RANDOM:
        query = mask_to_query(
            item.x.tokens,
            random_mask(item, seed_combine(cfg.seed, fnv1a64("random"))));
        break;
      default:
        query = mask_to_query(item.x.tokens, greedy(item.x, model));
        break;
    }
    out.push_back({item.topic_id, query_ap(query, item.topic_id, ctx)});
  }
  return out;
}

EvalReport build_report(const PairSet& all, const RewardContext& ctx,
                        const EvalConfig& cfg) {
  validate_reward_context(all, ctx);

  // Keep the canonical row order whatever order was requested.
  std::vector<BaselineKind> kinds;
  for (BaselineKind kind : all_baselines()) {
    if (std::find(cfg.baselines.begin(), cfg.baselines.end(), kind) !=
        cfg.baselines.end()) {
      kinds.push_back(kind);
    }
  }
  if (kinds.empty()) throw Error("build_report: no baselines requested");

  const auto folds =
      kfold_split(all.size(), cfg.folds, seed_combine(cfg.seed, fnv1a64("folds")));

  EvalReport report;
  report.folds = cfg.folds;
  std::vector<std::vector<double>> pooled(kinds.size());
  report.fold_map.assign(kinds.size(), std::vector<double>(cfg.folds, 0.0));

  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<std::size_t> train_idx;
    for (std::size_t g = 0; g < folds.size(); ++g) {
      if (g == f) continue;
      train_idx.insert(train_idx.end(), folds[g].begin(), folds[g].end());
    }
    for (std::size_t k = 0; k < kinds.size(); ++k) {
      const auto aps = run_baseline(kinds[k], all, train_idx, folds[f], ctx,
                                    cfg, mix64(f + 1));
      std::vector<double> fold_aps;
      fold_aps.reserve(aps.size());
      for (const auto& [topic, ap] : aps) {
        pooled[k].push_back(ap);
        fold_aps.push_back(ap);
      }
      report.fold_map[k][f] = mean_ap(fold_aps);
    }
  }

  const auto it_ref =
      std::find(kinds.begin(), kinds.end(), BaselineKind::SMT_RL);
  const bool has_ref = it_ref != kinds.end();
  const std::size_t ref =
      has_ref ? static_cast<std::size_t>(it_ref - kinds.begin()) : 0;

  for (std::size_t k = 0; k < kinds.size(); ++k) {
    ReportRow row;
    row.kind = kinds[k];
    row.map = mean_ap(pooled[k]);
    if (has_ref && kinds[k] != BaselineKind::SMT_RL) {
      if (row.map > 0.0) {
        row.has_pct = true;
        row.pct_chg = pct_change(mean_ap(pooled[ref]), row.map);
      }
      const auto tt = paired_t_test(pooled[ref], pooled[k]);
      row.has_p = true;
      row.p_value = tt.p;
      row.stars = tt.stars;
    }
    report.rows.push_back(row);
  }

  report.config_echo = {
      "folds=" + std::to_string(cfg.folds),
      "seed=" + std::to_string(cfg.seed),
      "pairs=" + std::to_string(all.size()),
      "rank_depth=" + std::to_string(ctx.rank_depth),
      "batch_size=" + std::to_string(cfg.train.batch_size),
      "mle_iterations=" + std::to_string(cfg.train.mle_iterations),
      "rl_iterations=" + std::to_string(cfg.train.rl_iterations),
      "emb_dim=" + std::to_string(cfg.model.emb_dim),
      "hidden=" + std::to_string(cfg.model.hidden),
      "significance=paired t-test on per-topic APs pooled across folds",
  };
  return report;
}

namespace {

std::string stars_text(int stars) { return std::string(stars, '*'); }

}  // namespace

std::string EvalReport::to_tsv() const {
  std::string out = "baseline\tmap\tpct_chg\tstars\tp_value\n";
  for (const auto& row : rows) {
    out += baseline_name(row.kind);
    out += '\t';
    out += format_double(row.map, 5);
    out += '\t';
    if (row.has_pct) out += format_double(row.pct_chg, 2);
    out += '\t';
    out += stars_text(row.stars);
    out += '\t';
    if (row.has_p) out += format_general(row.p_value, 6);
    out += '\n';
  }
  return out;
}

std::string EvalReport::to_text() const {
  std::string out;
  for (const auto& line : config_echo) {
    out += "# " + line + "\n";
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-10s %10s %12s %-5s %10s\n", "baseline",
                "MAP", "%Chg", "sig", "p");
  out += buf;
  for (const auto& row : rows) {
    std::string pct = "-";
    if (row.has_pct) {
      pct = (row.pct_chg >= 0.0 ? "+" : "") + format_double(row.pct_chg, 2) + "%";
    }
    std::snprintf(buf, sizeof buf, "%-10s %10s %12s %-5s %10s\n",
                  baseline_name(row.kind), format_double(row.map, 5).c_str(),
                  pct.c_str(), stars_text(row.stars).c_str(),
                  row.has_p ? format_general(row.p_value, 4).c_str() : "-");
    out += buf;
  }
  if (!fold_map.empty() && folds > 0) {
    out += "\nper-fold mean AP\n";
    for (std::size_t k = 0; k < rows.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%-10s", baseline_name(rows[k].kind));
      out += buf;
      for (double v : fold_map[k]) {
        out += " " + format_double(v, 4);
      }
      out += '\n';
    }
  }
  return out;
}

}  // namespace nlq
