// Scratch diagnostic (not registered with ctest): prints static-baseline
// MAPs of the synthetic generator across seeds to guide tuning.
#include <cstdio>

#include "nlq/dataset_io.hpp"
#include "nlq/evalkit.hpp"

using namespace nlq;

int main(int argc, char** argv) {
  SynthParams p;
  p.n_docs = argc > 1 ? std::stoul(argv[1]) : 200;
  p.n_pairs = argc > 2 ? std::stoul(argv[2]) : 60;
  p.vocab_size = argc > 3 ? std::stoul(argv[3]) : 400;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    p.seed = seed;
    auto data = synth_generate(p);
    auto index = Index::build(data.corpus);
    RewardContext ctx{&index, &data.qrels, 1000};

    double gold = 0, nl = 0, rnd = 0;
    for (std::size_t i = 0; i < data.pairs.size(); ++i) {
      const auto nltok = tokenize(data.pairs[i].nl);
      const auto goldq = mask_to_query(nltok, data.gold_masks[i]);
      const auto& rel = data.qrels.at(data.pairs[i].topic_id);
      gold += average_precision(search(index, goldq, 1000), rel);
      nl += average_precision(search(index, nltok, 1000), rel);
      // crude random-3 baseline
      Rng rng(seed_combine(seed, fnv1a64(data.pairs[i].topic_id)));
      SelectionMask m(nltok.size(), 0);
      if (nltok.size() <= 3) {
        std::fill(m.begin(), m.end(), 1);
      } else {
        std::vector<std::size_t> pos(nltok.size());
        for (std::size_t j = 0; j < pos.size(); ++j) pos[j] = j;
        rng.shuffle(pos);
        for (int j = 0; j < 3; ++j) m[pos[j]] = 1;
      }
      rnd += average_precision(search(index, mask_to_query(nltok, m), 1000), rel);
    }
    const double n = static_cast<double>(p.n_pairs);
    std::printf("seed %llu: gold %.4f  nl %.4f  random %.4f\n",
                (unsigned long long)seed, gold / n, nl / n, rnd / n);
  }
  return 0;
}
