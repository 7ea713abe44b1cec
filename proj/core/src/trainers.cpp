#include "nlq/trainers.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "nlq/errors.hpp"
#include "nlq/io_util.hpp"

namespace nlq {

PairSet build_pair_set(const std::vector<PairRecord>& records,
                       const Analyzer& analyzer, const EmbeddingTable& table) {
  PairSet set;
  set.items.reserve(records.size());
  for (const auto& rec : records) {
    PairItem item;
    item.topic_id = rec.topic_id;
    auto nl_tokens = analyzer(rec.nl);
    if (nl_tokens.empty()) {
      throw FormatError("pair " + rec.topic_id + ": empty NL expression");
    }
    item.query_tokens = analyzer(rec.query);
    auto derived = derive_mask(nl_tokens, item.query_tokens);
    item.gold = std::move(derived.mask);
    item.coverage = derived.coverage;
    item.x = make_expression(std::move(nl_tokens), table);
    set.items.push_back(std::move(item));
  }
  return set;
}

void validate_reward_context(const PairSet& pairs, const RewardContext& ctx) {
  if (ctx.index == nullptr || ctx.judgments == nullptr) {
    throw Error("reward context missing index or judgments");
  }
  for (const auto& item : pairs.items) {
    auto it = ctx.judgments->find(item.topic_id);
    if (it == ctx.judgments->end() || it->second.empty()) {
      throw Error("no relevance judgments for topic " + item.topic_id);
    }
  }
}

double reward(const SelectionMask& mask, const NLExpression& x,
              const std::string& topic_id, const RewardContext& ctx) {
  auto it = ctx.judgments->find(topic_id);
  if (it == ctx.judgments->end() || it->second.empty()) {
    throw Error("no relevance judgments for topic " + topic_id);
  }
  const auto query = mask_to_query(x.tokens, mask);
  if (query.empty()) return 0.0;
  const Ranking ranking = search(*ctx.index, query, ctx.rank_depth);
  return average_precision(ranking, it->second);
}

RewardFn make_map_reward(const PairSet& pairs, const RewardContext& ctx) {
  return [&pairs, ctx](std::size_t idx, const SelectionMask& mask) {
    const PairItem& item = pairs.items[idx];
    return reward(mask, item.x, item.topic_id, ctx);
  };
}

namespace {

std::vector<std::size_t> identity_order(std::size_t n) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  return order;
}

void check_train_config(const PairSet& pairs, const TrainConfig& cfg) {
  if (pairs.empty()) throw Error("training requires a non-empty pair set");
  if (cfg.batch_size < 1) throw Error("batch_size must be >= 1");
  if (cfg.batch_size > pairs.size()) {
    throw Error("batch_size " + std::to_string(cfg.batch_size) +
                " exceeds pair count " + std::to_string(pairs.size()));
  }
  if (cfg.rl_samples < 1) throw Error("rl_samples must be >= 1");
}

// Runs fn(j) for j in [0, n); parallel when threads > 1. Each j writes
// only its own slot, so results do not depend on scheduling.
void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t j = 0; j < n; ++j) fn(j);
    return;
  }
  const std::size_t workers = std::min(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      for (std::size_t j = w; j < n; j += workers) fn(j);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

std::vector<double> train_mle(SelectionModel& model, const PairSet& pairs,
                              const TrainConfig& cfg) {
  check_train_config(pairs, cfg);
  Rng order_rng(seed_combine(cfg.seed, fnv1a64("mle-order")));
  Adam adam(model.params(), cfg.adam);
  auto order = identity_order(pairs.size());

  std::vector<double> curve;
  curve.reserve(cfg.mle_iterations);
  for (std::size_t epoch = 0; epoch < cfg.mle_iterations; ++epoch) {
    order_rng.shuffle(order);
    double nll_sum = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      model.zero_grads();
      for (std::size_t j = start; j < end; ++j) {
        const PairItem& item = pairs.items[order[j]];
        double ll;
        try {
          ll = log_likelihood_backward(item.x, item.gold, model, -1.0);
        } catch (const NumericalError& e) {
          throw NumericalError("train_mle: epoch " + std::to_string(epoch + 1) +
                               ", topic " + item.topic_id + ": " + e.what());
        }
        nll_sum += -ll;
      }
      adam.step();
    }
    curve.push_back(nll_sum / static_cast<double>(pairs.size()));
  }
  return curve;
}

double reinforce_update(SelectionModel& model, const PairSet& pairs,
                        std::span<const std::size_t> batch,
                        const RewardFn& reward_fn, BaselineState& baseline,
                        Sgd& sgd, const TrainConfig& cfg, Rng& sample_rng) {
  const std::size_t k = cfg.rl_samples;
  const std::size_t n_samples = batch.size() * k;

  // Sampling is serial so the RNG stream is schedule-independent.
  std::vector<SelectionMask> masks(n_samples);
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const PairItem& item = pairs.items[batch[j]];
    for (std::size_t s = 0; s < k; ++s) {
      masks[j * k + s] = sample(item.x, model, sample_rng).first;
    }
  }

  // Rewards may be evaluated concurrently; index and judgments are frozen.
  std::vector<double> rewards(n_samples, 0.0);
  parallel_for(n_samples, cfg.threads, [&](std::size_t j) {
    rewards[j] = reward_fn(batch[j / k], masks[j]);
  });

  // Accumulate the score-function gradient against the pre-batch baseline.
  const double b = baseline.value;
  model.zero_grads();
  double reward_sum = 0.0;
  for (std::size_t j = 0; j < n_samples; ++j) {
    const double r = rewards[j];
    if (!std::isfinite(r)) {
      throw NumericalError("reinforce_update: non-finite reward");
    }
    reward_sum += r;
    const double advantage = r - b;
    const PairItem& item = pairs.items[batch[j / k]];
    log_likelihood_backward(item.x, masks[j], model,
                            -advantage / static_cast<double>(k));
  }
  const double mean_reward = reward_sum / static_cast<double>(n_samples);
  baseline.value = cfg.baseline_decay * b +
                   (1.0 - cfg.baseline_decay) * mean_reward;
  sgd.step();
  return mean_reward;
}

std::vector<double> train_rl_custom(SelectionModel& model,
                                    const PairSet& pairs,
                                    const RewardFn& reward_fn,
                                    const TrainConfig& cfg) {
  check_train_config(pairs, cfg);
  Rng order_rng(seed_combine(cfg.seed, fnv1a64("rl-order")));
  Rng sample_rng(seed_combine(cfg.seed, fnv1a64("rl-sample")));
  Sgd sgd(model.params(), cfg.sgd_lr);
  BaselineState baseline;
  auto order = identity_order(pairs.size());

  std::vector<double> curve;
  curve.reserve(cfg.rl_iterations);
  for (std::size_t epoch = 0; epoch < cfg.rl_iterations; ++epoch) {
    order_rng.shuffle(order);
    double epoch_reward = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::span<const std::size_t> batch(order.data() + start, end - start);
      epoch_reward += reinforce_update(model, pairs, batch, reward_fn,
                                       baseline, sgd, cfg, sample_rng) *
                      static_cast<double>(batch.size());
      ++batches;
    }
    curve.push_back(epoch_reward / static_cast<double>(pairs.size()));
  }
  return curve;
}

std::vector<double> train_rl(SelectionModel& model, const PairSet& pairs,
                             const RewardContext& ctx, const TrainConfig& cfg) {
  validate_reward_context(pairs, ctx);
  return train_rl_custom(model, pairs, make_map_reward(pairs, ctx), cfg);
}

std::string manifest_text(const std::string& mode, const TrainConfig& cfg,
                          const ModelConfig& model_cfg,
                          const std::string& fold_label,
                          const std::vector<double>& mle_curve,
                          const std::vector<double>& rl_curve) {
  std::string out;
  auto line = [&out](std::initializer_list<std::string> fields) {
    bool first = true;
    for (const auto& f : fields) {
      if (!first) out += '\t';
      first = false;
      out += f;
    }
    out += '\n';
  };
  line({"manifest_version", "1"});
  line({"mode", mode});
  line({"fold", fold_label});
  line({"seed", std::to_string(cfg.seed)});
  line({"config", "batch_size", std::to_string(cfg.batch_size)});
  line({"config", "mle_iterations", std::to_string(cfg.mle_iterations)});
  line({"config", "rl_iterations", std::to_string(cfg.rl_iterations)});
  line({"config", "adam_lr", format_general(cfg.adam.lr, 12)});
  line({"config", "sgd_lr", format_general(cfg.sgd_lr, 12)});
  line({"config", "baseline_decay", format_general(cfg.baseline_decay, 12)});
  line({"config", "rl_samples", std::to_string(cfg.rl_samples)});
  line({"config", "emb_dim", std::to_string(model_cfg.emb_dim)});
  line({"config", "hidden", std::to_string(model_cfg.hidden)});
  for (std::size_t i = 0; i < mle_curve.size(); ++i) {
    line({"mle_epoch", std::to_string(i + 1),
          format_general(mle_curve[i], 12)});
  }
  for (std::size_t i = 0; i < rl_curve.size(); ++i) {
    line({"rl_epoch", std::to_string(i + 1),
          format_general(rl_curve[i], 12)});
  }
  return out;
}

}  // namespace nlq
