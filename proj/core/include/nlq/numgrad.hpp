#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nlq/errors.hpp"
#include "nlq/rng.hpp"

namespace nlq {

// Named dense parameter with a same-shape gradient accumulator.
// Accumulation is explicit: zero_grad -> accumulate -> optimizer step.
struct Param {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> value;
  std::vector<double> grad;

  Param() = default;
  Param(std::string n, std::vector<std::size_t> s);

  std::size_t size() const { return value.size(); }
  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
};

// Numerically stable sigmoid, output clamped to the open interval (0,1).
double sigmoid(double z);
// tanh clamped to the open interval (-1,1).
double tanh_open(double z);
// log(clamp(p, 1e-12, 1 - 1e-12)); guards Bernoulli log-likelihoods.
double log_guarded(double p);

// y = W x (+ y0), W row-major [rows x cols].
void matvec(std::span<const double> w, std::span<const double> x,
            std::span<double> y, std::size_t rows, std::size_t cols,
            bool accumulate);
// y += W^T d, W row-major [rows x cols], d length rows, y length cols.
void matvec_transposed_acc(std::span<const double> w, std::span<const double> d,
                           std::span<double> y, std::size_t rows,
                           std::size_t cols);
// W += outer(d, x); W row-major [rows x cols].
void outer_acc(std::span<double> w, std::span<const double> d,
               std::span<const double> x, std::size_t rows, std::size_t cols);

// Long short-term memory cell, gates ordered [input, forget, candidate,
// output] in the stacked weight matrices.
struct LstmParams {
  std::size_t input_size = 0;
  std::size_t hidden = 0;
  Param wx;  // [4H x input_size]
  Param wh;  // [4H x H]
  Param b;   // [4H]

  LstmParams() = default;
  LstmParams(const std::string& prefix, std::size_t input_size,
             std::size_t hidden);
};

struct LstmState {
  std::vector<double> h;
  std::vector<double> c;

  static LstmState zeros(std::size_t hidden) {
    return {std::vector<double>(hidden, 0.0), std::vector<double>(hidden, 0.0)};
  }
};

// Forward intermediates one backward step needs.
struct LstmCache {
  std::vector<double> x, h_prev, c_prev;
  std::vector<double> i, f, g, o, c, hc;
};

// cell' = f*cell + i*g, hidden' = o*tanh(cell').
LstmState lstm_step(const LstmParams& params, const LstmState& state,
                    std::span<const double> x, LstmCache* cache = nullptr);

// Accumulates parameter gradients for one step; dh/dc are gradients w.r.t.
// the step's outputs, dh_prev/dc_prev/dx receive input-side gradients.
void lstm_step_backward(LstmParams& params, const LstmCache& cache,
                        std::span<const double> dh, std::span<const double> dc,
                        std::vector<double>& dh_prev,
                        std::vector<double>& dc_prev, std::vector<double>& dx);

// Central finite differences against accumulated analytic gradients.
// Expects params[*]->grad to already hold the analytic gradient of `loss`.
// Returns the worst relative error |a - n| / max(1e-8, |a| + |n|).
double grad_check(const std::function<double()>& loss,
                  std::span<Param* const> params, double eps);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(std::vector<Param*> params, AdamConfig cfg);
  void step();

 private:
  std::vector<Param*> params_;
  AdamConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  std::int64_t t_ = 0;
};

class Sgd {
 public:
  Sgd(std::vector<Param*> params, double lr) : params_(std::move(params)), lr_(lr) {}
  void step();

 private:
  std::vector<Param*> params_;
  double lr_;
};

// Uniform Glorot initialization for a 2-d (fan_out x fan_in) or 1-d param.
void glorot_init(Param& p, Rng& rng);

}  // namespace nlq
