#pragma once

#include <array>
#include <cstdint>
#include <span>

#include <nlohmann/json_fwd.hpp>

#include "dualpath/nn/tape.hpp"
#include "dualpath/sigcore.hpp"

namespace dualpath::losses {

inline constexpr double kProbEps = 1e-7;

struct LossWeights {
  std::array<double, 5> w{1.0, 1.0, 1.0, 1.0, 1.0};

  void validate() const;
};

// Accepts {"w1": .., ..., "w5": ..}; missing keys keep 1.
LossWeights weights_from_json(const nlohmann::json& j);

using Components = std::array<double, 5>;

// Differentiable forms. Complex predictions are 2xN tensors; targets are
// constants.
nn::Var mse(nn::Var z_hat, std::span<const Complex> z);
nn::Var phase_insensitive(nn::Var z_hat, std::span<const Complex> z);
nn::Var sampled_phase_insensitive(nn::Var z3_hat, std::span<const Complex> z3, std::span<const std::uint8_t> z4);
// z4_hat: [N] probabilities.
nn::Var timing(nn::Var z4_hat, std::span<const std::uint8_t> z4);
// z5_hat: [C] probabilities.
nn::Var classification(nn::Var z5_hat, std::span<const double> z5);
nn::Var total(const std::array<nn::Var, 5>& components, const LossWeights& weights);

// Value-only forms.
double loss_mse(std::span<const Complex> z_hat, std::span<const Complex> z);
double loss_phase_insensitive(std::span<const Complex> z_hat, std::span<const Complex> z);
double loss_sampled_phase_insensitive(std::span<const Complex> z3_hat, std::span<const Complex> z3,
                                      std::span<const std::uint8_t> z4);
double loss_timing(std::span<const std::uint8_t> z4, std::span<const double> z4_hat);
double loss_classification(std::span<const double> z5, std::span<const double> z5_hat);
double loss_total(const Components& components, const LossWeights& weights);

}  // namespace dualpath::losses
