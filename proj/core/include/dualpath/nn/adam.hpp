#pragma once

#include <cstdint>
#include <vector>

#include "dualpath/nn/tape.hpp"

namespace dualpath::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 1.0;  // <= 0 disables clipping
};

struct OptimizerState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
};

OptimizerState make_optimizer(const ParameterStore& store, AdamConfig config = {});

// Clips `grads` to the global norm, then applies one bias-corrected ADAM
// update. Returns the pre-clip global norm. Non-finite gradients raise
// kTrainingFault before anything is modified.
double adam_step(ParameterStore& store, Gradients& grads, OptimizerState& state);

}  // namespace dualpath::nn
