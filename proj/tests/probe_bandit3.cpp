// Scratch diagnostic: continuous 500-update bandit runs across configs.
#include <cstdio>

#include "nlq/trainers.hpp"

using namespace nlq;

namespace {

double run_bandit(std::size_t d, std::size_t hidden, double out_scale,
                  std::size_t samples, std::uint64_t seed) {
  PairSet pairs;
  PairItem item;
  item.topic_id = "t";
  item.x.tokens = {"a"};
  Rng er(seed);
  std::vector<double> v(d);
  for (auto& e : v) e = er.uniform(-1.0, 1.0);
  item.x.embedded = {v};
  item.gold = {1};
  pairs.items.push_back(item);

  ModelConfig mc;
  mc.emb_dim = d;
  mc.hidden = hidden;
  SelectionModel model(mc);
  model.init_params(seed * 100);
  for (auto& w : model.out_w.value) w *= out_scale;

  TrainConfig cfg;
  cfg.batch_size = 1;
  cfg.rl_iterations = 500;
  cfg.sgd_lr = 1e-2;
  cfg.rl_samples = samples;
  cfg.seed = seed;
  train_rl_custom(model, pairs,
                  [](std::size_t, const SelectionMask& m) {
                    return m[0] == 1 ? 1.0 : 0.0;
                  },
                  cfg);
  auto state = decoder_init(model, encode(item.x, model));
  return decode_step(model, state, item.x.embedded[0], kDecisionStart).first;
}

void sweep(const char* label, std::size_t d, std::size_t hidden,
           double out_scale, std::size_t samples) {
  int ok = 0;
  std::printf("%-28s:", label);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const double p = run_bandit(d, hidden, out_scale, samples, seed);
    std::printf(" %.3f", p);
    if (p > 0.95) ++ok;
  }
  std::printf("  -> %d/5\n", ok);
}

}  // namespace

int main() {
  sweep("d8 H100 base", 8, 100, 1.0, 1);
  sweep("d32 H100 base", 32, 100, 1.0, 1);
  sweep("d8 H100 out*2", 8, 100, 2.0, 1);
  sweep("d8 H100 out*3", 8, 100, 3.0, 1);
  sweep("d8 H100 k=4", 8, 100, 1.0, 4);
  sweep("d8 H200 base", 8, 200, 1.0, 1);
  sweep("d32 H200 base", 32, 200, 1.0, 1);
  return 0;
}
