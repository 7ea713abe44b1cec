// Scratch diagnostic: bandit trajectory and sensitivity to init scale.
#include <cstdio>

#include "nlq/trainers.hpp"

using namespace nlq;

namespace {

double selection_prob(const SelectionModel& model, const NLExpression& x) {
  auto state = decoder_init(model, encode(x, model));
  return decode_step(model, state, x.embedded[0], kDecisionStart).first;
}

}  // namespace

int main() {
  for (double boost : {1.0, 2.0, 3.0}) {
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
      mc.hidden = 100;
      SelectionModel model(mc);
      model.init_params(seed * 100);
      for (auto& w : model.out_w.value) w *= boost;

      TrainConfig cfg;
      cfg.batch_size = 1;
      cfg.rl_iterations = 100;
      cfg.sgd_lr = 1e-2;
      cfg.seed = seed;
      std::printf("boost=%.0f seed=%llu:", boost, (unsigned long long)seed);
      for (int block = 0; block < 7; ++block) {
        cfg.seed = seed * 1000 + block;  // fresh sample stream per block
        train_rl_custom(model, pairs,
                        [](std::size_t, const SelectionMask& m) {
                          return m[0] == 1 ? 1.0 : 0.0;
                        },
                        cfg);
        std::printf(" %.3f", selection_prob(model, item.x));
      }
      std::printf("\n");
    }
  }
  return 0;
}
