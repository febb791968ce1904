#include "dualpath/losses.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "dualpath/errors.hpp"
#include "dualpath/nn/ops.hpp"

namespace dualpath::losses {
namespace {

using nn::Tape;
using nn::Tensor;
using nn::Var;

std::size_t complex_len(Var v, std::size_t expected) {
  const auto& s = v.shape();
  if (s.size() != 2 || s[0] != 2 || s[1] != expected) {
    fail(ErrorKind::kDimension, "prediction " + nn::shape_string(s) + " does not match a target of length " +
                                    std::to_string(expected));
  }
  if (expected == 0) fail(ErrorKind::kEmptyInput, "empty signal");
  return expected;
}

// (|a|^2 + |b|^2 - 2|a^H b|) / norm, with a the prediction; `mask` (if
// non-empty) restricts both signals to the marked samples.
Var phase_insensitive_masked(Var a, std::span<const Complex> b, std::span<const std::uint8_t> mask, double norm) {
  const std::size_t n = complex_len(a, b.size());
  const auto& av = a.value().data;
  const auto keep = [&](std::size_t k) { return mask.empty() || mask[k] != 0; };
  double ea = 0.0, eb = 0.0;
  Complex c{};
  for (std::size_t k = 0; k < n; ++k) {
    if (!keep(k)) continue;
    const Complex ak(av[k], av[n + k]);
    ea += std::norm(ak);
    eb += std::norm(b[k]);
    c += std::conj(ak) * b[k];
  }
  const double mag = std::abs(c);
  const double value = std::max(0.0, (ea + eb - 2.0 * mag) / norm);

  std::vector<Complex> target(b.begin(), b.end());
  std::vector<std::uint8_t> m(mask.begin(), mask.end());
  return a.tape->record(Tensor::scalar(value), {a}, [a, target, m, c, mag, norm, n](const Tensor& g) {
    // dL/da = (2a - 2 b conj(c)/|c|) / norm; subgradient 0 for the |c| term at c = 0
    const auto& av = a.value().data;
    auto& ga = a.tape->grad(a).data;
    const Complex rot = mag > 0.0 ? std::conj(c) / mag : Complex{};
    const double s = g.data[0] / norm;
    for (std::size_t k = 0; k < n; ++k) {
      if (!m.empty() && m[k] == 0) continue;
      const Complex d = 2.0 * Complex(av[k], av[n + k]) - 2.0 * target[k] * rot;
      ga[k] += s * d.real();
      ga[n + k] += s * d.imag();
    }
  });
}

double bce(std::span<const std::uint8_t> z4, std::span<const double> p, bool inverted) {
  double s = 0.0;
  for (std::size_t k = 0; k < z4.size(); ++k) {
    const double q = std::clamp(p[k], kProbEps, 1.0 - kProbEps);
    const bool one = (z4[k] != 0) != inverted;
    s -= one ? std::log(q) : std::log(1.0 - q);
  }
  return s / static_cast<double>(z4.size());
}

template <typename F>
double evaluate(F build) {
  Tape tape(false);
  return build(tape).value().item();
}

}  // namespace

void LossWeights::validate() const {
  bool positive = false;
  for (double v : w) {
    if (!(v >= 0.0) || !std::isfinite(v)) fail(ErrorKind::kInvalidArgument, "loss weights must be finite and >= 0");
    positive = positive || v > 0.0;
  }
  if (!positive) fail(ErrorKind::kInvalidArgument, "at least one loss weight must be positive");
}

LossWeights weights_from_json(const nlohmann::json& j) {
  LossWeights lw;
  for (std::size_t i = 0; i < 5; ++i) lw.w[i] = j.value("w" + std::to_string(i + 1), 1.0);
  lw.validate();
  return lw;
}

Var mse(Var z_hat, std::span<const Complex> z) {
  const std::size_t n = complex_len(z_hat, z.size());
  const Var d = nn::sub(z_hat, z_hat.tape->constant(nn::planar_tensor(z)));
  return nn::scale(nn::sum(nn::mul(d, d)), 1.0 / static_cast<double>(n));
}

Var phase_insensitive(Var z_hat, std::span<const Complex> z) {
  return phase_insensitive_masked(z_hat, z, {}, static_cast<double>(z.size()));
}

Var sampled_phase_insensitive(Var z3_hat, std::span<const Complex> z3, std::span<const std::uint8_t> z4) {
  if (z4.size() != z3.size()) fail(ErrorKind::kDimension, "timing signal length differs from the signal");
  std::vector<std::uint8_t> mask(z4.size(), 0);
  for (std::size_t i : transition_indices(z4)) mask[i] = 1;
  return phase_insensitive_masked(z3_hat, z3, mask, static_cast<double>(z3.size()));
}

Var timing(Var z4_hat, std::span<const std::uint8_t> z4) {
  if (z4_hat.shape() != nn::Shape{z4.size()}) fail(ErrorKind::kDimension, "timing prediction length mismatch");
  if (z4.empty()) fail(ErrorKind::kEmptyInput, "empty timing signal");
  const auto& p = z4_hat.value().data;
  const double direct = bce(z4, p, false);
  const double flipped = bce(z4, p, true);
  const bool inverted = flipped < direct;
  const double value = std::min(direct, flipped);
  std::vector<std::uint8_t> target(z4.begin(), z4.end());
  return z4_hat.tape->record(Tensor::scalar(value), {z4_hat}, [z4_hat, target, inverted](const Tensor& g) {
    const auto& p = z4_hat.value().data;
    auto& gp = z4_hat.tape->grad(z4_hat).data;
    const double s = g.data[0] / static_cast<double>(target.size());
    for (std::size_t k = 0; k < target.size(); ++k) {
      if (p[k] < kProbEps || p[k] > 1.0 - kProbEps) continue;
      const bool one = (target[k] != 0) != inverted;
      gp[k] += s * (one ? -1.0 / p[k] : 1.0 / (1.0 - p[k]));
    }
  });
}

Var classification(Var z5_hat, std::span<const double> z5) {
  if (z5_hat.shape() != nn::Shape{z5.size()}) fail(ErrorKind::kDimension, "class prediction length mismatch");
  const auto& p = z5_hat.value().data;
  double value = 0.0;
  for (std::size_t k = 0; k < z5.size(); ++k) {
    if (z5[k] != 0.0) value -= z5[k] * std::log(std::clamp(p[k], kProbEps, 1.0 - kProbEps));
  }
  std::vector<double> target(z5.begin(), z5.end());
  return z5_hat.tape->record(Tensor::scalar(value), {z5_hat}, [z5_hat, target](const Tensor& g) {
    const auto& p = z5_hat.value().data;
    auto& gp = z5_hat.tape->grad(z5_hat).data;
    for (std::size_t k = 0; k < target.size(); ++k) {
      if (target[k] == 0.0 || p[k] < kProbEps || p[k] > 1.0 - kProbEps) continue;
      gp[k] -= g.data[0] * target[k] / p[k];
    }
  });
}

Var total(const std::array<Var, 5>& components, const LossWeights& weights) {
  weights.validate();
  Var acc = nn::scale(components[0], weights.w[0]);
  for (std::size_t i = 1; i < 5; ++i) acc = nn::add(acc, nn::scale(components[i], weights.w[i]));
  return acc;
}

double loss_mse(std::span<const Complex> z_hat, std::span<const Complex> z) {
  if (z_hat.size() != z.size()) fail(ErrorKind::kDimension, "length mismatch");
  return evaluate([&](Tape& t) { return mse(t.constant(nn::planar_tensor(z_hat)), z); });
}

double loss_phase_insensitive(std::span<const Complex> z_hat, std::span<const Complex> z) {
  if (z_hat.size() != z.size()) fail(ErrorKind::kDimension, "length mismatch");
  return evaluate([&](Tape& t) { return phase_insensitive(t.constant(nn::planar_tensor(z_hat)), z); });
}

double loss_sampled_phase_insensitive(std::span<const Complex> z3_hat, std::span<const Complex> z3,
                                      std::span<const std::uint8_t> z4) {
  if (z3_hat.size() != z3.size()) fail(ErrorKind::kDimension, "length mismatch");
  return evaluate([&](Tape& t) { return sampled_phase_insensitive(t.constant(nn::planar_tensor(z3_hat)), z3, z4); });
}

double loss_timing(std::span<const std::uint8_t> z4, std::span<const double> z4_hat) {
  return evaluate([&](Tape& t) {
    return timing(t.constant(Tensor({z4_hat.size()}, std::vector<double>(z4_hat.begin(), z4_hat.end()))), z4);
  });
}

double loss_classification(std::span<const double> z5, std::span<const double> z5_hat) {
  return evaluate([&](Tape& t) {
    return classification(t.constant(Tensor({z5_hat.size()}, std::vector<double>(z5_hat.begin(), z5_hat.end()))),
                          z5);
  });
}

double loss_total(const Components& components, const LossWeights& weights) {
  weights.validate();
  double s = 0.0;
  for (std::size_t i = 0; i < 5; ++i) s += weights.w[i] * components[i];
  return s;
}

}  // namespace dualpath::losses
