#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nlq/numgrad.hpp"
#include "nlq/textproc.hpp"

namespace nlq {

struct ModelConfig {
  std::size_t emb_dim = 300;
  std::size_t hidden = 100;
  std::size_t decision_dim = 8;
};

// Tokenized information need plus its (frozen) word vectors.
struct NLExpression {
  std::vector<Token> tokens;
  std::vector<std::vector<double>> embedded;
};

NLExpression make_expression(std::vector<Token> tokens,
                             const EmbeddingTable& table);

// Concatenation of the final forward and backward encoder hidden states,
// length 2H.
struct EncoderSummary {
  std::vector<double> h;
};

// Previous-decision rows in the decision embedding table.
inline constexpr int kDecision0 = 0;
inline constexpr int kDecision1 = 1;
inline constexpr int kDecisionStart = 2;

// Word-selection model: a bi-directional encoder summarizes the token
// sequence, a recurrent decoder then emits one Bernoulli keep-probability
// per token, conditioned on the previous decision through a small learned
// decision embedding. Word embeddings are inputs, never updated.
class SelectionModel {
 public:
  explicit SelectionModel(ModelConfig cfg);

  const ModelConfig& config() const { return cfg_; }

  // Glorot-uniform init of every parameter, deterministic in the seed.
  void init_params(std::uint64_t seed);

  // Fixed enumeration order; also the checkpoint serialization order.
  std::vector<Param*> params();
  std::vector<const Param*> params() const;
  void zero_grads();

  ModelConfig cfg_;
  LstmParams enc_fwd, enc_bwd, dec;
  Param init_h_w, init_h_b;  // [H x 2H], [H]
  Param init_c_w, init_c_b;  // [H x 2H], [H]
  Param dec_embed;           // [3 x decision_dim]: rows 0, 1, START
  Param out_w, out_b;        // [H], [1]
};

struct DecoderState {
  LstmState s;
};

EncoderSummary encode(const NLExpression& x, const SelectionModel& model);

DecoderState decoder_init(const SelectionModel& model,
                          const EncoderSummary& summary);

// One decoder step: consumes concat(x_i embedding, decision embedding of
// prev_decision), returns the keep probability and the next state.
std::pair<double, DecoderState> decode_step(const SelectionModel& model,
                                            const DecoderState& state,
                                            std::span<const double> x_emb,
                                            int prev_decision);

// Teacher-forced Bernoulli log-likelihood of mask y given x; always <= 0.
double log_likelihood(const NLExpression& x, const SelectionMask& y,
                      const SelectionModel& model);

// Ancestral sampling; each step is fed the sampled previous decision.
// logprob equals log_likelihood(x, mask) recomputed under teacher forcing.
std::pair<SelectionMask, double> sample(const NLExpression& x,
                                        const SelectionModel& model, Rng& rng);

// Threshold-0.5 decoding with greedy feedback. An all-zero result falls
// back to selecting the single position with maximal probability.
SelectionMask greedy(const NLExpression& x, const SelectionModel& model);

// Forward + backward pass: accumulates scale * d(log_likelihood)/d(theta)
// into the model's gradient buffers and returns the log-likelihood.
double log_likelihood_backward(const NLExpression& x, const SelectionMask& y,
                               SelectionModel& model, double scale);

// ---- checkpointing ----

struct CheckpointMeta {
  ModelConfig model;
  EmbeddingConfig emb;
  std::uint64_t seed = 0;
};

void save_checkpoint(const SelectionModel& model, const CheckpointMeta& meta,
                     const std::string& path);
std::pair<SelectionModel, CheckpointMeta> load_checkpoint(
    const std::string& path);

}  // namespace nlq
