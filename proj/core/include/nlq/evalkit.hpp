#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nlq/trainers.hpp"

namespace nlq {

enum class BaselineKind { NL, Q, QBIN, RANDOM, SMT, RL, SMT_RL };

// Canonical report order.
const std::vector<BaselineKind>& all_baselines();
const char* baseline_name(BaselineKind kind);
BaselineKind parse_baseline(const std::string& name);

// Seeded shuffle dealt into k folds whose sizes differ by at most one.
std::vector<std::vector<std::size_t>> kfold_split(std::size_t n_items,
                                                  std::size_t k,
                                                  std::uint64_t seed);

struct EvalConfig {
  std::size_t folds = 10;
  std::vector<BaselineKind> baselines = all_baselines();
  TrainConfig train;
  ModelConfig model;
  std::uint64_t seed = 0;
};

struct TopicAp {
  std::string topic_id;
  double ap;
};

// Per-topic average precision of one baseline over the test fold. Trained
// baselines (SMT, RL, SMT+RL) fit on the train fold first; fold_tag keeps
// their seeds distinct across folds.
std::vector<TopicAp> run_baseline(BaselineKind kind, const PairSet& all,
                                  std::span<const std::size_t> train_idx,
                                  std::span<const std::size_t> test_idx,
                                  const RewardContext& ctx,
                                  const EvalConfig& cfg,
                                  std::uint64_t fold_tag);

// Micro-average over per-topic APs pooled across folds.
double mean_ap(std::span<const double> aps);

// (ours - baseline) / baseline * 100. Requires baseline > 0.
double pct_change(double ours, double baseline);

struct TTestResult {
  double t;
  double p;    // two-tailed
  int stars;  // 0-3: p<=0.05 / 0.01 / 0.001 thresholds
};

// Classic paired t-test on d = a - b with df = n - 1; the p-value comes
// from the Student-t distribution via the regularized incomplete beta.
TTestResult paired_t_test(std::span<const double> a,
                          std::span<const double> b);

// Exposed for testing against an independent oracle.
double student_t_two_tailed_p(double t, double df);

struct ReportRow {
  BaselineKind kind;
  double map = 0.0;
  bool has_pct = false;
  double pct_chg = 0.0;
  int stars = 0;
  bool has_p = false;
  double p_value = 0.0;
};

struct EvalReport {
  std::vector<ReportRow> rows;
  std::vector<std::string> config_echo;
  std::vector<std::vector<double>> fold_map;  // rows x folds, mean AP
  std::size_t folds = 0;

  std::string to_tsv() const;
  std::string to_text() const;
};

// The full cross-validated protocol: k folds, every requested baseline,
// MAP plus %Chg and significance stars against the SMT+RL row when it is
// requested. Deterministic in cfg.seed.
EvalReport build_report(const PairSet& all, const RewardContext& ctx,
                        const EvalConfig& cfg);

}  // namespace nlq
