// Scratch diagnostic: end-to-end ordering probe (Random vs SMT vs RL vs
// SMT+RL) on synthetic data with the scaled schedule, with timing.
#include <chrono>
#include <cstdio>
#include <fstream>

#include "nlq/evalkit.hpp"

using namespace nlq;

int main(int argc, char** argv) {
  const std::uint64_t first_seed = argc > 1 ? std::stoull(argv[1]) : 1;
  const std::uint64_t last_seed = argc > 2 ? std::stoull(argv[2]) : first_seed;
  const std::size_t hidden = argc > 3 ? std::stoul(argv[3]) : 24;
  const std::size_t emb_dim = argc > 4 ? std::stoul(argv[4]) : 16;
  const double sgd_lr = argc > 5 ? std::stod(argv[5]) : 1e-2;

  for (std::uint64_t seed = first_seed; seed <= last_seed; ++seed) {
    const auto t0 = std::chrono::steady_clock::now();
    SynthParams sp;
    sp.seed = seed;
    sp.n_docs = 200;
    sp.n_pairs = 60;
    sp.vocab_size = 400;
    sp.emb_dim = emb_dim;
    auto data = synth_generate(sp);
    auto index = Index::build(data.corpus);
    RewardContext ctx{&index, &data.qrels, 1000};

    const std::string emb_path = "/tmp/nlq_probe_emb.vec";
    {
      std::ofstream out(emb_path);
      out << embeddings_to_text(data.embeddings, data.emb_dim);
    }
    std::vector<std::vector<Token>> seqs;
    for (const auto& rec : data.pairs) seqs.push_back(tokenize(rec.nl));
    auto vocab = Vocab::build(seqs);
    EmbeddingConfig ecfg;
    ecfg.seed = seed;
    auto table = EmbeddingTable::load(emb_path, vocab, ecfg);
    auto pairs = build_pair_set(data.pairs, Analyzer{}, table);

    EvalConfig cfg;
    cfg.seed = seed;
    cfg.folds = 10;
    cfg.baselines = {BaselineKind::NL, BaselineKind::RANDOM, BaselineKind::SMT,
                     BaselineKind::RL, BaselineKind::SMT_RL};
    cfg.model.emb_dim = emb_dim;
    cfg.model.hidden = hidden;
    cfg.train.batch_size = 12;
    cfg.train.mle_iterations = 20;
    cfg.train.rl_iterations = 100;
    cfg.train.sgd_lr = sgd_lr;

    auto report = build_report(pairs, ctx, cfg);
    const auto t1 = std::chrono::steady_clock::now();
    const double secs =
        std::chrono::duration<double>(t1 - t0).count();
    std::printf("seed %llu (H=%zu d=%zu, %.1fs): ",
                (unsigned long long)seed, hidden, emb_dim, secs);
    double map_random = 0, map_smt = 0, map_rl = 0, map_smtrl = 0;
    for (const auto& row : report.rows) {
      std::printf("%s=%.4f ", baseline_name(row.kind), row.map);
      if (row.kind == BaselineKind::RANDOM) map_random = row.map;
      if (row.kind == BaselineKind::SMT) map_smt = row.map;
      if (row.kind == BaselineKind::RL) map_rl = row.map;
      if (row.kind == BaselineKind::SMT_RL) map_smtrl = row.map;
    }
    const bool ok = map_random < map_smtrl && map_smt <= map_smtrl &&
                    map_rl <= map_smtrl;
    std::printf(" -> %s\n", ok ? "OK" : "VIOLATION");
  }
  return 0;
}
