#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nlq/dataset_io.hpp"
#include "nlq/search_core.hpp"
#include "nlq/selector_model.hpp"

namespace nlq {

// One training/evaluation example: the NL expression, the mask derived
// from the reference query, and the reference query itself.
struct PairItem {
  std::string topic_id;
  NLExpression x;
  SelectionMask gold;
  double coverage = 1.0;
  std::vector<Token> query_tokens;
};

struct PairSet {
  std::vector<PairItem> items;

  std::size_t size() const { return items.size(); }
  bool empty() const { return items.empty(); }
};

PairSet build_pair_set(const std::vector<PairRecord>& records,
                       const Analyzer& analyzer, const EmbeddingTable& table);

struct TrainConfig {
  std::size_t batch_size = 12;
  std::size_t mle_iterations = 100;
  std::size_t rl_iterations = 1000;
  AdamConfig adam{};          // lr 1e-3, beta 0.9/0.999, eps 1e-8
  double sgd_lr = 1e-2;
  double baseline_decay = 0.9;
  std::size_t rl_samples = 1;  // sampled masks per expression per epoch
  std::size_t threads = 1;     // reward evaluation concurrency
  std::uint64_t seed = 0;
};

struct RewardContext {
  const Index* index = nullptr;
  const RelevanceJudgments* judgments = nullptr;
  std::size_t rank_depth = 1000;
};

// Checks that every pair's topic has a non-empty relevant set.
void validate_reward_context(const PairSet& pairs, const RewardContext& ctx);

// MAP-style reward of a selection mask: materialize the query, search,
// score average precision against the topic's relevant set. An all-zero
// mask scores 0; a topic without judgments throws.
double reward(const SelectionMask& mask, const NLExpression& x,
              const std::string& topic_id, const RewardContext& ctx);

// Pluggable reward for tests and toy tasks.
using RewardFn =
    std::function<double(std::size_t item_index, const SelectionMask& mask)>;

RewardFn make_map_reward(const PairSet& pairs, const RewardContext& ctx);

// Supervised pretraining: epochs of seeded shuffles, minibatch gradient
// accumulation of the negative log-likelihood, one Adam step per batch.
// Returns the mean NLL per epoch.
std::vector<double> train_mle(SelectionModel& model, const PairSet& pairs,
                              const TrainConfig& cfg);

struct BaselineState {
  double value = 0.0;  // running reward baseline b
};

// One policy-gradient update on a minibatch: samples a mask per
// expression, accumulates the score-function gradient of -(R - b) *
// logprob, refreshes the baseline, then applies one SGD step.
// Returns the mean sampled reward of the batch.
double reinforce_update(SelectionModel& model, const PairSet& pairs,
                        std::span<const std::size_t> batch,
                        const RewardFn& reward_fn, BaselineState& baseline,
                        Sgd& sgd, const TrainConfig& cfg, Rng& sample_rng);

// Policy-gradient fine-tuning with the standard MAP reward. Returns the
// mean sampled reward per epoch.
std::vector<double> train_rl(SelectionModel& model, const PairSet& pairs,
                             const RewardContext& ctx, const TrainConfig& cfg);

// Same loop with an injected reward.
std::vector<double> train_rl_custom(SelectionModel& model,
                                    const PairSet& pairs,
                                    const RewardFn& reward_fn,
                                    const TrainConfig& cfg);

// Line-oriented run manifest: tab-separated records, one key per line.
std::string manifest_text(const std::string& mode, const TrainConfig& cfg,
                          const ModelConfig& model_cfg,
                          const std::string& fold_label,
                          const std::vector<double>& mle_curve,
                          const std::vector<double>& rl_curve);

}  // namespace nlq
