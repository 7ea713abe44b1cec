// Scratch diagnostic: bandit convergence speed vs hidden size.
#include <cstdio>

#include "nlq/trainers.hpp"

using namespace nlq;

int main() {
  for (std::size_t hidden : {16UL, 32UL, 64UL, 100UL}) {
    int success = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      PairSet pairs;
      PairItem item;
      item.topic_id = "t";
      item.x.tokens = {"a"};
      Rng er(seed);
      std::vector<double> v(8);
      for (auto& e : v) e = er.uniform(-1.0, 1.0);
      item.x.embedded = {v};
      item.gold = {1};
      pairs.items.push_back(item);

      ModelConfig mc;
      mc.emb_dim = 8;
      mc.hidden = hidden;
      SelectionModel model(mc);
      model.init_params(seed * 100);

      TrainConfig cfg;
      cfg.batch_size = 1;
      cfg.rl_iterations = 500;
      cfg.sgd_lr = 1e-2;
      cfg.seed = seed;
      train_rl_custom(model, pairs,
                      [](std::size_t, const SelectionMask& m) {
                        return m[0] == 1 ? 1.0 : 0.0;
                      },
                      cfg);
      auto state = decoder_init(model, encode(item.x, model));
      auto [p, next] =
          decode_step(model, state, item.x.embedded[0], kDecisionStart);
      std::printf("H=%zu seed=%llu p=%.4f\n", hidden,
                  (unsigned long long)seed, p);
      if (p > 0.95) ++success;
    }
    std::printf("H=%zu: %d/5 converged\n", hidden, success);
  }
  return 0;
}
