#include "nlq/numgrad.hpp"

#include <algorithm>

namespace nlq {

Param::Param(std::string n, std::vector<std::size_t> s)
    : name(std::move(n)), shape(std::move(s)) {
  std::size_t total = 1;
  for (auto d : shape) total *= d;
  value.assign(total, 0.0);
  grad.assign(total, 0.0);
}

double sigmoid(double z) {
  double s;
  if (z >= 0.0) {
    s = 1.0 / (1.0 + std::exp(-z));
  } else {
    const double e = std::exp(z);
    s = e / (1.0 + e);
  }
  // Keep the output strictly inside (0,1) even for saturating inputs.
  const double hi = 1.0 - 1.1102230246251565e-16;  // nextafter(1,0)
  return std::clamp(s, 4.9406564584124654e-324, hi);
}

double tanh_open(double z) {
  const double hi = 1.0 - 1.1102230246251565e-16;
  return std::clamp(std::tanh(z), -hi, hi);
}

double log_guarded(double p) {
  return std::log(std::clamp(p, 1e-12, 1.0 - 1e-12));
}

void matvec(std::span<const double> w, std::span<const double> x,
            std::span<double> y, std::size_t rows, std::size_t cols,
            bool accumulate) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* wr = w.data() + r * cols;
    double acc = accumulate ? y[r] : 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
    y[r] = acc;
  }
}

void matvec_transposed_acc(std::span<const double> w, std::span<const double> d,
                           std::span<double> y, std::size_t rows,
                           std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* wr = w.data() + r * cols;
    const double dr = d[r];
    if (dr == 0.0) continue;
    for (std::size_t c = 0; c < cols; ++c) y[c] += wr[c] * dr;
  }
}

void outer_acc(std::span<double> w, std::span<const double> d,
               std::span<const double> x, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    double* wr = w.data() + r * cols;
    const double dr = d[r];
    if (dr == 0.0) continue;
    for (std::size_t c = 0; c < cols; ++c) wr[c] += dr * x[c];
  }
}

LstmParams::LstmParams(const std::string& prefix, std::size_t in,
                       std::size_t h)
    : input_size(in),
      hidden(h),
      wx(prefix + ".wx", {4 * h, in}),
      wh(prefix + ".wh", {4 * h, h}),
      b(prefix + ".b", {4 * h}) {}

LstmState lstm_step(const LstmParams& params, const LstmState& state,
                    std::span<const double> x, LstmCache* cache) {
  const std::size_t h = params.hidden;
  if (x.size() != params.input_size || state.h.size() != h ||
      state.c.size() != h) {
    throw Error("lstm_step: dimension mismatch");
  }

  std::vector<double> a(params.b.value);  // pre-activations, 4H
  matvec(params.wx.value, x, a, 4 * h, params.input_size, true);
  matvec(params.wh.value, state.h, a, 4 * h, h, true);

  LstmState next = LstmState::zeros(h);
  std::vector<double> gi(h), gf(h), gg(h), go(h), hc(h);
  for (std::size_t j = 0; j < h; ++j) {
    gi[j] = sigmoid(a[j]);
    gf[j] = sigmoid(a[h + j]);
    gg[j] = tanh_open(a[2 * h + j]);
    go[j] = sigmoid(a[3 * h + j]);
    next.c[j] = gf[j] * state.c[j] + gi[j] * gg[j];
    hc[j] = tanh_open(next.c[j]);
    next.h[j] = go[j] * hc[j];
  }

  if (cache != nullptr) {
    cache->x.assign(x.begin(), x.end());
    cache->h_prev = state.h;
    cache->c_prev = state.c;
    cache->i = std::move(gi);
    cache->f = std::move(gf);
    cache->g = std::move(gg);
    cache->o = std::move(go);
    cache->c = next.c;
    cache->hc = std::move(hc);
  }
  return next;
}

void lstm_step_backward(LstmParams& params, const LstmCache& cache,
                        std::span<const double> dh, std::span<const double> dc,
                        std::vector<double>& dh_prev,
                        std::vector<double>& dc_prev, std::vector<double>& dx) {
  const std::size_t h = params.hidden;
  std::vector<double> da(4 * h);
  dc_prev.assign(h, 0.0);
  for (std::size_t j = 0; j < h; ++j) {
    const double dho = dh[j];
    const double d_o = dho * cache.hc[j];
    const double d_hc = dho * cache.o[j];
    const double d_c = dc[j] + d_hc * (1.0 - cache.hc[j] * cache.hc[j]);
    const double d_i = d_c * cache.g[j];
    const double d_g = d_c * cache.i[j];
    const double d_f = d_c * cache.c_prev[j];
    dc_prev[j] = d_c * cache.f[j];
    da[j] = d_i * cache.i[j] * (1.0 - cache.i[j]);
    da[h + j] = d_f * cache.f[j] * (1.0 - cache.f[j]);
    da[2 * h + j] = d_g * (1.0 - cache.g[j] * cache.g[j]);
    da[3 * h + j] = d_o * cache.o[j] * (1.0 - cache.o[j]);
  }

  outer_acc(params.wx.grad, da, cache.x, 4 * h, params.input_size);
  outer_acc(params.wh.grad, da, cache.h_prev, 4 * h, h);
  for (std::size_t r = 0; r < 4 * h; ++r) params.b.grad[r] += da[r];

  dx.assign(params.input_size, 0.0);
  matvec_transposed_acc(params.wx.value, da, dx, 4 * h, params.input_size);
  dh_prev.assign(h, 0.0);
  matvec_transposed_acc(params.wh.value, da, dh_prev, 4 * h, h);
}

double grad_check(const std::function<double()>& loss,
                  std::span<Param* const> params, double eps) {
  if (eps <= 0.0) throw Error("grad_check: eps must be positive");
  double worst = 0.0;
  for (Param* p : params) {
    for (std::size_t i = 0; i < p->size(); ++i) {
      const double orig = p->value[i];
      p->value[i] = orig + eps;
      const double lp = loss();
      p->value[i] = orig - eps;
      const double lm = loss();
      p->value[i] = orig;
      if (!std::isfinite(lp) || !std::isfinite(lm)) {
        throw NumericalError("grad_check: non-finite loss at " + p->name);
      }
      const double numeric = (lp - lm) / (2.0 * eps);
      const double analytic = p->grad[i];
      const double denom =
          std::max(1e-8, std::fabs(analytic) + std::fabs(numeric));
      worst = std::max(worst, std::fabs(analytic - numeric) / denom);
    }
  }
  return worst;
}

Adam::Adam(std::vector<Param*> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (Param* p : params_) {
    m_.emplace_back(p->size(), 0.0);
    v_.emplace_back(p->size(), 0.0);
  }
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Param* p = params_[k];
    for (std::size_t i = 0; i < p->size(); ++i) {
      const double g = p->grad[i];
      m_[k][i] = cfg_.beta1 * m_[k][i] + (1.0 - cfg_.beta1) * g;
      v_[k][i] = cfg_.beta2 * v_[k][i] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m_[k][i] / bc1;
      const double vhat = v_[k][i] / bc2;
      p->value[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

void Sgd::step() {
  for (Param* p : params_) {
    for (std::size_t i = 0; i < p->size(); ++i) {
      p->value[i] -= lr_ * p->grad[i];
    }
  }
}

void glorot_init(Param& p, Rng& rng) {
  const std::size_t fan_out = p.shape.empty() ? 1 : p.shape[0];
  const std::size_t fan_in = p.shape.size() > 1 ? p.shape[1] : 1;
  const double r = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& x : p.value) x = rng.uniform(-r, r);
}

}  // namespace nlq
