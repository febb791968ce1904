#pragma once

// Reference implementations used only by tests. Each one is written from the
// defining formula, independently of the library code it checks.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "dualpath/dpn.hpp"
#include "dualpath/nn/tape.hpp"
#include "dualpath/sigcore.hpp"

namespace oracle {

using dualpath::Complex;
using CVec = std::vector<Complex>;
inline constexpr double kPi = std::numbers::pi;

inline double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

// Gray-free QPSK symbol error probability for a given Es/N0 (linear).
inline double qpsk_ser(double es_n0) {
  const double q = q_function(std::sqrt(es_n0));
  return 2.0 * q - q * q;
}

// Root raised cosine, unit energy per symbol, t in symbol periods.
inline double rrc(double t, double beta) {
  if (std::abs(t) < 1e-12) return 1.0 - beta + 4.0 * beta / kPi;
  if (beta > 0.0 && std::abs(std::abs(t) - 1.0 / (4.0 * beta)) < 1e-12) {
    return beta / std::sqrt(2.0) *
           ((1.0 + 2.0 / kPi) * std::sin(kPi / (4.0 * beta)) + (1.0 - 2.0 / kPi) * std::cos(kPi / (4.0 * beta)));
  }
  const double num = std::sin(kPi * t * (1.0 - beta)) + 4.0 * beta * t * std::cos(kPi * t * (1.0 + beta));
  const double den = kPi * t * (1.0 - 16.0 * beta * beta * t * t);
  return num / den;
}

// Numerical convolution of two RRC pulses at lag t (midpoint rule).
inline double rrc_cascade(double t, double beta, double half_span = 24.0, int steps_per_symbol = 400) {
  const double dt = 1.0 / steps_per_symbol;
  double acc = 0.0;
  for (double u = -half_span + dt / 2; u < half_span; u += dt) acc += rrc(u, beta) * rrc(t - u, beta);
  return acc * dt;
}

// Full linear convolution, then the K/2-delayed window of length N.
inline CVec fir_same(const CVec& x, const CVec& h) {
  const std::size_t n = x.size(), k = h.size();
  CVec full(n + k - 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) full[i + j] += x[i] * h[j];
  }
  return CVec(full.begin() + static_cast<long>(k / 2), full.begin() + static_cast<long>(k / 2 + n));
}

inline CVec derotate(const CVec& x, double f) {
  CVec out(x.size());
  for (std::size_t n = 0; n < x.size(); ++n) out[n] = x[n] * std::polar(1.0, -2.0 * kPi * f * static_cast<double>(n));
  return out;
}

inline double mean_sq_err(const CVec& a, const CVec& b, double phi) {
  const Complex r = std::polar(1.0, phi);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::norm(r * a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

// min over phi of mean |e^{j phi} a - b|^2: coarse grid, then golden-section
// refinement around the best cell.
inline double phase_grid_min(const CVec& a, const CVec& b, int grid = 3600) {
  const double step = 2.0 * kPi / grid;
  int best = 0;
  double best_v = mean_sq_err(a, b, 0.0);
  for (int i = 1; i < grid; ++i) {
    const double v = mean_sq_err(a, b, i * step);
    if (v < best_v) best_v = v, best = i;
  }
  double lo = (best - 1) * step, hi = (best + 1) * step;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 200; ++it) {
    const double m1 = hi - g * (hi - lo), m2 = lo + g * (hi - lo);
    if (mean_sq_err(a, b, m1) < mean_sq_err(a, b, m2)) hi = m2;
    else lo = m1;
  }
  return std::min(best_v, mean_sq_err(a, b, 0.5 * (lo + hi)));
}

// Binary cross-entropy with probabilities clamped to [eps, 1 - eps].
inline double bce(const std::vector<std::uint8_t>& t, const std::vector<double>& p, double eps) {
  double s = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double q = std::clamp(p[i], eps, 1.0 - eps);
    s -= t[i] ? std::log(q) : std::log(1.0 - q);
  }
  return s / static_cast<double>(t.size());
}

inline CVec random_complex(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  CVec v(n);
  for (auto& x : v) x = {d(rng), d(rng)};
  return v;
}

inline dualpath::nn::Tensor random_tensor(dualpath::nn::Shape shape, std::mt19937_64& rng, double lo = -1.0,
                                          double hi = 1.0) {
  dualpath::nn::Tensor t(shape);
  std::uniform_real_distribution<double> d(lo, hi);
  for (auto& v : t.data) v = d(rng);
  return t;
}

// ---- finite differences ----

using GraphFn =
    std::function<dualpath::nn::Var(dualpath::nn::Tape&, const std::vector<dualpath::nn::Var>& inputs)>;

inline constexpr double kFdStep = 1e-5;
inline constexpr double kFdFloor = 1e-6;

// Scalarizes f with fixed random weights r (L = sum r * f), then compares the
// reverse-mode gradient of L with central differences for every input entry.
// Returns the largest |analytic - numeric| / max(|analytic|, |numeric|, floor).
inline double gradcheck(const GraphFn& f, const std::vector<dualpath::nn::Tensor>& inputs, std::mt19937_64& rng,
                        double h = kFdStep) {
  using namespace dualpath::nn;
  ParameterStore store;
  for (std::size_t i = 0; i < inputs.size(); ++i) store.add("in" + std::to_string(i), inputs[i]);

  std::vector<double> r;
  const auto scalar_value = [&](Tape& tape) {
    std::vector<Var> vars;
    for (std::size_t i = 0; i < store.size(); ++i) vars.push_back(tape.param(store, i));
    const Var out = f(tape, vars);
    const auto& v = out.value().data;
    if (r.empty()) {
      std::uniform_real_distribution<double> d(0.5, 1.5);
      for (std::size_t i = 0; i < v.size(); ++i) r.push_back(d(rng) * (i % 2 ? -1.0 : 1.0));
    }
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += r[i] * v[i];
    return std::pair{out, s};
  };

  Tape tape;
  auto [out, value] = scalar_value(tape);
  const std::vector<double> weights = r;
  const Var root = tape.record(Tensor::scalar(value), {out}, [&tape, out, weights](const Tensor& g) {
    auto& go = tape.grad(out).data;
    for (std::size_t i = 0; i < go.size(); ++i) go[i] += g.data[0] * weights[i];
  });
  tape.backward(root);
  Gradients grads = Gradients::zeros_like(store);
  tape.accumulate_parameter_grads(store, grads);

  double worst = 0.0;
  for (std::size_t p = 0; p < store.size(); ++p) {
    auto& data = store[p].value.data;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double keep = data[i];
      data[i] = keep + h;
      Tape tp(false);
      const double up = scalar_value(tp).second;
      data[i] = keep - h;
      Tape tm(false);
      const double down = scalar_value(tm).second;
      data[i] = keep;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = grads.grads[p].data[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), kFdFloor});
      worst = std::max(worst, std::abs(analytic - numeric) / denom);
    }
  }
  return worst;
}

// ---- layer-by-layer FLOP sheet ----

struct FlopLine {
  const char* layer;
  std::uint64_t flops;
};

// Spells out every layer of a forward pass on an n-sample input.
inline std::vector<FlopLine> flop_sheet(const dualpath::dpn::DpnConfig& c, std::uint64_t n) {
  std::vector<FlopLine> s;
  const std::uint64_t C = c.feature_channels, K = c.kernel_size, H = c.head_units;
  const auto extractor = [&] {
    s.push_back({"conv in", 2 * 2 * C * K * n + C * n});
    for (std::size_t b = 0; b < c.n_residual_blocks; ++b) {
      s.push_back({"res conv a", 2 * C * C * K * n + C * n});
      s.push_back({"res conv b", 2 * C * C * K * n + C * n});
    }
  };
  const auto pool = [&] { s.push_back({"gap", C * n}); };
  const auto dense = [&](std::uint64_t i, std::uint64_t o) { s.push_back({"dense", 2 * i * o + o}); };
  const auto lstm = [&](std::uint64_t din, std::uint64_t units) {
    // four gates: matrix products on input and state, biases, then
    // 3 sigmoid/tanh-gated products and 2 state updates per unit
    s.push_back({"lstm", n * (4 * units * (2 * din + 2 * units) + 4 * units + 5 * units)});
  };
  if (c.stages.noise) extractor(), pool(), dense(C, 128);
  if (c.stages.cfo && !c.freq_lags.empty()) {
    extractor(), pool();
    const std::uint64_t F = c.freq_lags.size();
    // u = x^p by repeated complex products, 6 FLOPs each
    s.push_back({"power", 6 * static_cast<std::uint64_t>(c.freq_power - 1) * n});
    for (std::size_t l : c.freq_lags) {
      // u[k] conj(u[k-L]): 4 mul + 2 add, accumulated with 2 adds; then arg and scale
      s.push_back({"lag product", 8 * (n - l)});
      s.push_back({"atan2 + scale", 2});
    }
    dense(C + F, H), dense(H + F, 1);
  } else if (c.stages.cfo) {
    extractor(), pool(), dense(C, H), dense(H, 1);
  }
  if (c.stages.eqmf) extractor(), pool(), dense(C, 130);
  if (c.stages.timing) {
    extractor();
    lstm(C, c.lstm1_units);
    lstm(c.timing_input == dualpath::dpn::TimingInput::kConstant ? 1 : C, c.lstm2_units);
    for (std::uint64_t t = 0; t < n; ++t) dense(c.lstm2_units, 1);
  }
  // classifier on the features of the last enabled stage's output, which
  // the timing stage already computed when it is on
  const bool shared = c.classifier_input == dualpath::dpn::ClassifierInput::kZ3 && c.stages.timing;
  if (!shared) extractor();
  pool(), dense(C, H), dense(H, c.class_count);
  return s;
}

}  // namespace oracle
