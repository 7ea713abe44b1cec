#include "nlq/selector_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "nlq/io_util.hpp"

namespace nlq {

namespace {

constexpr char kCkptMagic[8] = {'N', 'L', 'Q', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kCkptVersion = 1;
constexpr std::size_t kDecisionRows = 3;

void check_lengths(const NLExpression& x) {
  if (x.tokens.empty()) throw Error("empty NL expression");
  if (x.tokens.size() != x.embedded.size()) {
    throw Error("NLExpression tokens/embeddings length mismatch");
  }
}

}  // namespace

NLExpression make_expression(std::vector<Token> tokens,
                             const EmbeddingTable& table) {
  NLExpression x;
  x.embedded = embed_tokens(tokens, table);
  x.tokens = std::move(tokens);
  return x;
}

SelectionModel::SelectionModel(ModelConfig cfg)
    : cfg_(cfg),
      enc_fwd("enc_fwd", cfg.emb_dim, cfg.hidden),
      enc_bwd("enc_bwd", cfg.emb_dim, cfg.hidden),
      dec("dec", cfg.emb_dim + cfg.decision_dim, cfg.hidden),
      init_h_w("init_h.w", {cfg.hidden, 2 * cfg.hidden}),
      init_h_b("init_h.b", {cfg.hidden}),
      init_c_w("init_c.w", {cfg.hidden, 2 * cfg.hidden}),
      init_c_b("init_c.b", {cfg.hidden}),
      dec_embed("dec_embed", {kDecisionRows, cfg.decision_dim}),
      out_w("out.w", {cfg.hidden}),
      out_b("out.b", {1}) {}

void SelectionModel::init_params(std::uint64_t seed) {
  Rng rng(mix64(seed));
  // Glorot for the recurrent/projection matrices, zero biases, and a wider
  // uniform range for the embedding-like tables and the scalar readout so
  // its logit responds quickly to policy-gradient steps.
  for (Param* p : {&enc_fwd.wx, &enc_fwd.wh, &enc_bwd.wx, &enc_bwd.wh,
                   &dec.wx, &dec.wh, &init_h_w, &init_c_w}) {
    glorot_init(*p, rng);
  }
  for (Param* p : {&enc_fwd.b, &enc_bwd.b, &dec.b, &init_h_b, &init_c_b,
                   &out_b}) {
    std::fill(p->value.begin(), p->value.end(), 0.0);
  }
  for (Param* p : {&dec_embed, &out_w}) {
    for (auto& v : p->value) v = rng.uniform(-0.5, 0.5);
  }
}

std::vector<Param*> SelectionModel::params() {
  return {&enc_fwd.wx, &enc_fwd.wh, &enc_fwd.b,  &enc_bwd.wx, &enc_bwd.wh,
          &enc_bwd.b,  &dec.wx,     &dec.wh,     &dec.b,      &init_h_w,
          &init_h_b,   &init_c_w,   &init_c_b,   &dec_embed,  &out_w,
          &out_b};
}

std::vector<const Param*> SelectionModel::params() const {
  auto mutable_params = const_cast<SelectionModel*>(this)->params();
  return {mutable_params.begin(), mutable_params.end()};
}

void SelectionModel::zero_grads() {
  for (Param* p : params()) p->zero_grad();
}

EncoderSummary encode(const NLExpression& x, const SelectionModel& model) {
  check_lengths(x);
  const std::size_t h = model.cfg_.hidden;
  LstmState fwd = LstmState::zeros(h);
  for (const auto& emb : x.embedded) {
    fwd = lstm_step(model.enc_fwd, fwd, emb);
  }
  LstmState bwd = LstmState::zeros(h);
  for (auto it = x.embedded.rbegin(); it != x.embedded.rend(); ++it) {
    bwd = lstm_step(model.enc_bwd, bwd, *it);
  }
  EncoderSummary summary;
  summary.h.reserve(2 * h);
  summary.h.insert(summary.h.end(), fwd.h.begin(), fwd.h.end());
  summary.h.insert(summary.h.end(), bwd.h.begin(), bwd.h.end());
  return summary;
}

DecoderState decoder_init(const SelectionModel& model,
                          const EncoderSummary& summary) {
  const std::size_t h = model.cfg_.hidden;
  if (summary.h.size() != 2 * h) {
    throw Error("decoder_init: summary length != 2H");
  }
  DecoderState state;
  state.s.h.assign(model.init_h_b.value.begin(), model.init_h_b.value.end());
  matvec(model.init_h_w.value, summary.h, state.s.h, h, 2 * h, true);
  state.s.c.assign(model.init_c_b.value.begin(), model.init_c_b.value.end());
  matvec(model.init_c_w.value, summary.h, state.s.c, h, 2 * h, true);
  for (std::size_t j = 0; j < h; ++j) {
    state.s.h[j] = tanh_open(state.s.h[j]);
    state.s.c[j] = tanh_open(state.s.c[j]);
  }
  return state;
}

namespace {

std::vector<double> decoder_input(const SelectionModel& model,
                                  std::span<const double> x_emb,
                                  int prev_decision) {
  if (prev_decision < 0 || prev_decision >= static_cast<int>(kDecisionRows)) {
    throw Error("invalid previous decision id");
  }
  if (x_emb.size() != model.cfg_.emb_dim) {
    throw Error("decode_step: embedding dim mismatch");
  }
  const std::size_t dd = model.cfg_.decision_dim;
  std::vector<double> in;
  in.reserve(model.cfg_.emb_dim + dd);
  in.insert(in.end(), x_emb.begin(), x_emb.end());
  const double* row =
      model.dec_embed.value.data() + static_cast<std::size_t>(prev_decision) * dd;
  in.insert(in.end(), row, row + dd);
  return in;
}

double output_prob(const SelectionModel& model, const LstmState& s) {
  double z = model.out_b.value[0];
  for (std::size_t j = 0; j < model.cfg_.hidden; ++j) {
    z += model.out_w.value[j] * s.h[j];
  }
  return sigmoid(z);
}

// Shared decode loop: `decide(p, i)` picks the bit fed to the next step.
template <class Decide>
std::pair<SelectionMask, std::vector<double>> decode_sequence(
    const NLExpression& x, const SelectionModel& model, Decide decide) {
  check_lengths(x);
  const std::size_t n = x.tokens.size();
  SelectionMask bits(n, 0);
  std::vector<double> probs(n, 0.0);
  EncoderSummary summary = encode(x, model);
  DecoderState state = decoder_init(model, summary);
  int prev = kDecisionStart;
  for (std::size_t i = 0; i < n; ++i) {
    auto [p, next] = decode_step(model, state, x.embedded[i], prev);
    probs[i] = p;
    bits[i] = decide(p, i);
    prev = bits[i] ? kDecision1 : kDecision0;
    state = std::move(next);
  }
  return {std::move(bits), std::move(probs)};
}

double bernoulli_ll(const SelectionMask& y, const std::vector<double>& probs) {
  double ll = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ll += y[i] ? log_guarded(probs[i]) : log_guarded(1.0 - probs[i]);
  }
  return ll;
}

}  // namespace

std::pair<double, DecoderState> decode_step(const SelectionModel& model,
                                            const DecoderState& state,
                                            std::span<const double> x_emb,
                                            int prev_decision) {
  const auto in = decoder_input(model, x_emb, prev_decision);
  DecoderState next;
  next.s = lstm_step(model.dec, state.s, in);
  return {output_prob(model, next.s), std::move(next)};
}

double log_likelihood(const NLExpression& x, const SelectionMask& y,
                      const SelectionModel& model) {
  check_lengths(x);
  if (y.size() != x.tokens.size()) {
    throw Error("log_likelihood: mask length mismatch");
  }
  auto [bits, probs] =
      decode_sequence(x, model, [&](double, std::size_t i) { return y[i]; });
  return bernoulli_ll(y, probs);
}

std::pair<SelectionMask, double> sample(const NLExpression& x,
                                        const SelectionModel& model,
                                        Rng& rng) {
  auto [bits, probs] = decode_sequence(
      x, model,
      [&](double p, std::size_t) { return rng.uniform() < p ? 1 : 0; });
  const double logprob = bernoulli_ll(bits, probs);
  return {std::move(bits), logprob};
}

SelectionMask greedy(const NLExpression& x, const SelectionModel& model) {
  auto [bits, probs] = decode_sequence(
      x, model, [](double p, std::size_t) { return p >= 0.5 ? 1 : 0; });
  if (std::find(bits.begin(), bits.end(), 1) == bits.end()) {
    const auto best = std::max_element(probs.begin(), probs.end());
    bits[static_cast<std::size_t>(best - probs.begin())] = 1;
  }
  return bits;
}

double log_likelihood_backward(const NLExpression& x, const SelectionMask& y,
                               SelectionModel& model, double scale) {
  check_lengths(x);
  const std::size_t n = x.tokens.size();
  if (y.size() != n) throw Error("log_likelihood_backward: length mismatch");
  const std::size_t h = model.cfg_.hidden;
  const std::size_t d = model.cfg_.emb_dim;
  const std::size_t dd = model.cfg_.decision_dim;

  // Forward with caches. Encoder first.
  std::vector<LstmCache> fwd_caches(n), bwd_caches(n);
  LstmState fwd = LstmState::zeros(h);
  for (std::size_t i = 0; i < n; ++i) {
    fwd = lstm_step(model.enc_fwd, fwd, x.embedded[i], &fwd_caches[i]);
  }
  LstmState bwd = LstmState::zeros(h);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t pos = n - 1 - i;
    bwd = lstm_step(model.enc_bwd, bwd, x.embedded[pos], &bwd_caches[i]);
  }
  std::vector<double> h_n;
  h_n.reserve(2 * h);
  h_n.insert(h_n.end(), fwd.h.begin(), fwd.h.end());
  h_n.insert(h_n.end(), bwd.h.begin(), bwd.h.end());

  // Decoder init projections (tanh-affine).
  std::vector<double> h0_pre(model.init_h_b.value), c0_pre(model.init_c_b.value);
  matvec(model.init_h_w.value, h_n, h0_pre, h, 2 * h, true);
  matvec(model.init_c_w.value, h_n, c0_pre, h, 2 * h, true);
  LstmState dec_state = LstmState::zeros(h);
  for (std::size_t j = 0; j < h; ++j) {
    dec_state.h[j] = tanh_open(h0_pre[j]);
    dec_state.c[j] = tanh_open(c0_pre[j]);
  }
  const LstmState dec_initial = dec_state;

  // Teacher-forced decoder pass.
  std::vector<LstmCache> dec_caches(n);
  std::vector<double> probs(n);
  std::vector<int> prev_rows(n);
  int prev = kDecisionStart;
  for (std::size_t i = 0; i < n; ++i) {
    prev_rows[i] = prev;
    const auto in = decoder_input(model, x.embedded[i], prev);
    dec_state = lstm_step(model.dec, dec_state, in, &dec_caches[i]);
    probs[i] = output_prob(model, dec_state);
    prev = y[i] ? kDecision1 : kDecision0;
  }
  const double ll = bernoulli_ll(y, probs);
  if (!std::isfinite(ll)) {
    throw NumericalError("log_likelihood_backward: non-finite loss");
  }

  // Backward. d(ll)/d(logit_i) = y_i - p_i; everything scales by `scale`.
  std::vector<double> dh(h, 0.0), dc(h, 0.0), dh_prev, dc_prev, dx;
  for (std::size_t i = n; i-- > 0;) {
    const double dz = scale * (static_cast<double>(y[i]) - probs[i]);
    const LstmCache& cache = dec_caches[i];
    // Output layer; the step's hidden state is in cache.o * cache.hc.
    for (std::size_t j = 0; j < h; ++j) {
      const double h_ij = cache.o[j] * cache.hc[j];
      model.out_w.grad[j] += dz * h_ij;
      dh[j] += dz * model.out_w.value[j];
    }
    model.out_b.grad[0] += dz;

    lstm_step_backward(model.dec, cache, dh, dc, dh_prev, dc_prev, dx);
    // Embedding slice of dx is dropped (frozen vectors); the decision
    // slice flows into the decision embedding row used at this step.
    double* row = model.dec_embed.grad.data() +
                  static_cast<std::size_t>(prev_rows[i]) * dd;
    for (std::size_t j = 0; j < dd; ++j) row[j] += dx[d + j];
    dh = std::move(dh_prev);
    dc = std::move(dc_prev);
  }

  // Through the init projections into the encoder summary.
  std::vector<double> dh_n(2 * h, 0.0);
  std::vector<double> dpre(h);
  for (std::size_t j = 0; j < h; ++j) {
    dpre[j] = dh[j] * (1.0 - dec_initial.h[j] * dec_initial.h[j]);
  }
  outer_acc(model.init_h_w.grad, dpre, h_n, h, 2 * h);
  for (std::size_t j = 0; j < h; ++j) model.init_h_b.grad[j] += dpre[j];
  matvec_transposed_acc(model.init_h_w.value, dpre, dh_n, h, 2 * h);
  for (std::size_t j = 0; j < h; ++j) {
    dpre[j] = dc[j] * (1.0 - dec_initial.c[j] * dec_initial.c[j]);
  }
  outer_acc(model.init_c_w.grad, dpre, h_n, h, 2 * h);
  for (std::size_t j = 0; j < h; ++j) model.init_c_b.grad[j] += dpre[j];
  matvec_transposed_acc(model.init_c_w.value, dpre, dh_n, h, 2 * h);

  // Encoder BPTT, each direction seeded with its final-state gradient.
  std::vector<double> dhe(dh_n.begin(), dh_n.begin() + h);
  std::vector<double> dce(h, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    lstm_step_backward(model.enc_fwd, fwd_caches[i], dhe, dce, dh_prev,
                       dc_prev, dx);
    dhe = std::move(dh_prev);
    dce = std::move(dc_prev);
  }
  dhe.assign(dh_n.begin() + h, dh_n.end());
  dce.assign(h, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    lstm_step_backward(model.enc_bwd, bwd_caches[i], dhe, dce, dh_prev,
                       dc_prev, dx);
    dhe = std::move(dh_prev);
    dce = std::move(dc_prev);
  }
  return ll;
}

// ---- checkpointing ----

namespace {

std::string meta_block(const CheckpointMeta& meta) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(meta.model.emb_dim));
  w.u32(static_cast<std::uint32_t>(meta.model.hidden));
  w.u32(static_cast<std::uint32_t>(meta.model.decision_dim));
  w.u8(static_cast<std::uint8_t>(meta.emb.policy));
  w.u64(meta.emb.seed);
  w.f64(meta.emb.scale);
  w.u64(meta.seed);
  return w.bytes();
}

}  // namespace

void save_checkpoint(const SelectionModel& model, const CheckpointMeta& meta,
                     const std::string& path) {
  ByteWriter w;
  w.raw(kCkptMagic, sizeof kCkptMagic);
  w.u32(kCkptVersion);
  const std::string block = meta_block(meta);
  w.u64(fnv1a64(block));
  w.str(block);
  const auto params = model.params();
  w.u64(params.size());
  for (const Param* p : params) {
    w.str(p->name);
    w.u32(static_cast<std::uint32_t>(p->shape.size()));
    for (auto dim : p->shape) w.u64(dim);
    w.raw(p->value.data(), p->value.size() * sizeof(double));
  }
  atomic_write_file(path, w.bytes());
}

std::pair<SelectionModel, CheckpointMeta> load_checkpoint(
    const std::string& path) {
  const std::string bytes = read_file(path);
  ByteReader r(bytes);
  char magic[8];
  for (char& c : magic) c = static_cast<char>(r.u8());
  if (std::string_view(magic, 8) != std::string_view(kCkptMagic, 8)) {
    throw FormatError("not a checkpoint file: " + path);
  }
  const auto version = r.u32();
  if (version != kCkptVersion) {
    throw FormatError("unsupported checkpoint version " +
                      std::to_string(version) + " in " + path);
  }
  const auto stored_hash = r.u64();
  const std::string block = r.str();
  if (fnv1a64(block) != stored_hash) {
    throw FormatError("checkpoint config hash mismatch: " + path);
  }
  ByteReader br(block);
  CheckpointMeta meta;
  meta.model.emb_dim = br.u32();
  meta.model.hidden = br.u32();
  meta.model.decision_dim = br.u32();
  meta.emb.policy = static_cast<OovPolicy>(br.u8());
  meta.emb.seed = br.u64();
  meta.emb.scale = br.f64();
  meta.seed = br.u64();

  SelectionModel model(meta.model);
  const auto n_params = r.u64();
  auto params = model.params();
  if (n_params != params.size()) {
    throw FormatError("checkpoint parameter count mismatch: " + path);
  }
  for (Param* p : params) {
    const std::string name = r.str();
    if (name != p->name) {
      throw FormatError("checkpoint parameter order mismatch at " + name);
    }
    const auto ndims = r.u32();
    std::vector<std::size_t> shape(ndims);
    for (auto& dim : shape) dim = r.u64();
    if (shape != p->shape) {
      throw FormatError("checkpoint shape mismatch at " + name);
    }
    for (auto& x : p->value) x = r.f64();
  }
  if (!r.at_end()) {
    throw FormatError("trailing bytes in checkpoint: " + path);
  }
  return {std::move(model), meta};
}

}  // namespace nlq
