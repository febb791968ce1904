#include "dualpath/nn/adam.hpp"

#include <cmath>

#include "dualpath/errors.hpp"

namespace dualpath::nn {

OptimizerState make_optimizer(const ParameterStore& store, AdamConfig config) {
  OptimizerState s;
  s.config = config;
  for (std::size_t i = 0; i < store.size(); ++i) {
    s.m.emplace_back(store[i].value.shape);
    s.v.emplace_back(store[i].value.shape);
  }
  return s;
}

double adam_step(ParameterStore& store, Gradients& grads, OptimizerState& state) {
  if (grads.grads.size() != store.size() || state.m.size() != store.size()) {
    fail(ErrorKind::kDimension, "optimizer state does not match the parameter store");
  }
  const double norm = grads.global_norm();
  if (!std::isfinite(norm)) fail(ErrorKind::kTrainingFault, "non-finite gradient");

  const AdamConfig& c = state.config;
  if (c.clip_norm > 0.0 && norm > c.clip_norm) grads.scale(c.clip_norm / norm);

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t p = 0; p < store.size(); ++p) {
    auto& w = store[p].value.data;
    const auto& g = grads.grads[p].data;
    auto& m = state.m[p].data;
    auto& v = state.v[p].data;
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g[k];
      v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g[k] * g[k];
      w[k] -= c.lr * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + c.eps);
    }
  }
  return norm;
}

}  // namespace dualpath::nn
