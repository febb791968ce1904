#pragma once

// Finite-difference cases for every differentiable op, shared by the unit
// tests and the acceptance run.

#include <ostream>
#include <string>
#include <vector>

#include "dualpath/losses.hpp"
#include "dualpath/nn/lstm.hpp"
#include "dualpath/nn/ops.hpp"
#include "oracles.hpp"

namespace oracle {

struct Trial {
  std::vector<dualpath::nn::Tensor> inputs;
  GraphFn fn;
};

struct GradCase {
  std::string name;
  double tolerance;
  std::function<Trial(std::mt19937_64&)> make;

  friend void PrintTo(const GradCase& c, std::ostream* os) { *os << c.name; }
};

inline constexpr double kGradTol = 1e-4;
inline constexpr double kLstmGradTol = 1e-3;
inline constexpr int kGradTrials = 100;

// Values bounded away from the ReLU kink.
inline dualpath::nn::Tensor off_kink(dualpath::nn::Shape s, std::mt19937_64& rng) {
  auto t = random_tensor(s, rng);
  for (auto& v : t.data) v = (v < 0 ? -1.0 : 1.0) * (0.1 + 0.9 * std::abs(v));
  return t;
}

inline std::vector<GradCase> grad_cases() {
  namespace nn = dualpath::nn;
  namespace L = dualpath::losses;
  using nn::Shape;
  using nn::Var;
  using V = std::vector<Var>;
  std::vector<GradCase> c;
  const auto rt = [](Shape s, std::mt19937_64& r) { return random_tensor(s, r); };

  c.push_back({"add", kGradTol, [=](auto& r) {
                 return Trial{{rt({3, 4}, r), rt({3, 4}, r)}, [](nn::Tape&, const V& v) { return nn::add(v[0], v[1]); }};
               }});
  c.push_back({"sub", kGradTol, [=](auto& r) {
                 return Trial{{rt({5}, r), rt({5}, r)}, [](nn::Tape&, const V& v) { return nn::sub(v[0], v[1]); }};
               }});
  c.push_back({"mul", kGradTol, [=](auto& r) {
                 return Trial{{rt({2, 6}, r), rt({2, 6}, r)}, [](nn::Tape&, const V& v) { return nn::mul(v[0], v[1]); }};
               }});
  c.push_back({"scale", kGradTol, [=](auto& r) {
                 return Trial{{rt({7}, r)}, [](nn::Tape&, const V& v) { return nn::scale(v[0], -2.5); }};
               }});
  c.push_back({"relu", kGradTol, [](auto& r) {
                 return Trial{{off_kink({9}, r)}, [](nn::Tape&, const V& v) { return nn::relu(v[0]); }};
               }});
  c.push_back({"sigmoid", kGradTol, [=](auto& r) {
                 return Trial{{rt({8}, r)}, [](nn::Tape&, const V& v) { return nn::sigmoid(v[0]); }};
               }});
  c.push_back({"tanh", kGradTol, [=](auto& r) {
                 return Trial{{rt({8}, r)}, [](nn::Tape&, const V& v) { return nn::tanh(v[0]); }};
               }});
  c.push_back({"sum", kGradTol, [=](auto& r) {
                 return Trial{{rt({3, 3}, r)}, [](nn::Tape&, const V& v) { return nn::sum(v[0]); }};
               }});
  c.push_back({"mean", kGradTol, [=](auto& r) {
                 return Trial{{rt({4, 2}, r)}, [](nn::Tape&, const V& v) { return nn::mean(v[0]); }};
               }});
  c.push_back({"reshape", kGradTol, [=](auto& r) {
                 return Trial{{rt({2, 6}, r)}, [](nn::Tape&, const V& v) { return nn::reshape(v[0], {3, 4}); }};
               }});
  c.push_back({"slice", kGradTol, [=](auto& r) {
                 return Trial{{rt({10}, r)}, [](nn::Tape&, const V& v) { return nn::slice(v[0], 3, {2, 2}); }};
               }});
  c.push_back({"concat", kGradTol, [=](auto& r) {
                 return Trial{{rt({3}, r), rt({2, 2}, r)},
                              [](nn::Tape&, const V& v) { return nn::concat(v[0], v[1]); }};
               }});
  c.push_back({"transpose", kGradTol, [=](auto& r) {
                 return Trial{{rt({3, 5}, r)}, [](nn::Tape&, const V& v) { return nn::transpose(v[0]); }};
               }});
  c.push_back({"conv1d", kGradTol, [=](auto& r) {
                 return Trial{{rt({2, 11}, r), rt({3, 2, 5}, r), rt({3}, r)},
                              [](nn::Tape&, const V& v) { return nn::conv1d(v[0], v[1], v[2]); }};
               }});
  c.push_back({"linear_vec", kGradTol, [=](auto& r) {
                 return Trial{{rt({4}, r), rt({3, 4}, r), rt({3}, r)},
                              [](nn::Tape&, const V& v) { return nn::linear(v[0], v[1], v[2]); }};
               }});
  c.push_back({"linear_rows", kGradTol, [=](auto& r) {
                 return Trial{{rt({5, 4}, r), rt({2, 4}, r), rt({2}, r)},
                              [](nn::Tape&, const V& v) { return nn::linear(v[0], v[1], v[2]); }};
               }});
  c.push_back({"global_avg_pool", kGradTol, [=](auto& r) {
                 return Trial{{rt({3, 7}, r)}, [](nn::Tape&, const V& v) { return nn::global_avg_pool(v[0]); }};
               }});
  c.push_back({"softmax", kGradTol, [=](auto& r) {
                 return Trial{{rt({6}, r)}, [](nn::Tape&, const V& v) { return nn::softmax(v[0]); }};
               }});
  c.push_back({"complex_mul", kGradTol, [=](auto& r) {
                 return Trial{{rt({2, 6}, r), rt({2, 6}, r)},
                              [](nn::Tape&, const V& v) { return nn::complex_mul(v[0], v[1]); }};
               }});
  c.push_back({"complex_fir", kGradTol, [=](auto& r) {
                 return Trial{{rt({2, 16}, r), rt({2, 5}, r)},
                              [](nn::Tape&, const V& v) { return nn::complex_fir(v[0], v[1]); }};
               }});
  c.push_back({"complex_fir_even", kGradTol, [=](auto& r) {
                 return Trial{{rt({2, 12}, r), rt({2, 4}, r)},
                              [](nn::Tape&, const V& v) { return nn::complex_fir(v[0], v[1]); }};
               }});
  c.push_back({"frequency_shift", kGradTol, [=](auto& r) {
                 return Trial{{rt({2, 20}, r), random_tensor({1}, r, -0.02, 0.02)},
                              [](nn::Tape&, const V& v) { return nn::frequency_shift(v[0], v[1]); }};
               }});
  c.push_back({"power_lag_phase", kGradTol, [=](auto& r) {
                 return Trial{{rt({2, 12}, r)},
                              [](nn::Tape&, const V& v) { return nn::power_lag_phase(v[0], 1, {1}); }};
               }});
  c.push_back({"power_lag_phase_4th", kGradTol, [=](auto& r) {
                 return Trial{{rt({2, 12}, r)},
                              [](nn::Tape&, const V& v) { return nn::power_lag_phase(v[0], 4, {1, 3, 7}); }};
               }});
  c.push_back({"lstm_8_steps", kLstmGradTol, [=](auto& r) {
                 const std::size_t d = 3, h = 4;
                 return Trial{{rt({8, d}, r), rt({4 * h, d}, r), rt({4 * h, h}, r), rt({4 * h}, r), rt({h}, r),
                               rt({h}, r)},
                              [](nn::Tape&, const V& v) {
                                const auto res = nn::lstm_scan(v[0], {v[1], v[2], v[3]}, v[4], v[5]);
                                return nn::concat(nn::concat(res.outputs, res.h), res.c);
                              }};
               }});
  // losses against random constant targets
  c.push_back({"loss_mse", kGradTol, [=](auto& r) {
                 const auto z = random_complex(9, r);
                 return Trial{{rt({2, 9}, r)}, [z](nn::Tape&, const V& v) { return L::mse(v[0], z); }};
               }});
  c.push_back({"loss_phase_insensitive", kGradTol, [=](auto& r) {
                 const auto z = random_complex(9, r);
                 return Trial{{rt({2, 9}, r)}, [z](nn::Tape&, const V& v) { return L::phase_insensitive(v[0], z); }};
               }});
  c.push_back({"loss_sampled", kGradTol, [=](auto& r) {
                 const auto z = random_complex(12, r);
                 const dualpath::TimingSignal z4{0, 0, 1, 1, 1, 0, 0, 0, 1, 1, 0, 0};
                 return Trial{{rt({2, 12}, r)},
                              [z, z4](nn::Tape&, const V& v) { return L::sampled_phase_insensitive(v[0], z, z4); }};
               }});
  c.push_back({"loss_timing", kGradTol, [=](auto& r) {
                 dualpath::TimingSignal z4(10);
                 for (auto& b : z4) b = static_cast<std::uint8_t>(r() & 1U);
                 return Trial{{random_tensor({10}, r, 0.05, 0.95)},
                              [z4](nn::Tape&, const V& v) { return L::timing(v[0], z4); }};
               }});
  c.push_back({"loss_classification", kGradTol, [=](auto& r) {
                 std::vector<double> z5(5, 0.0);
                 z5[r() % 5] = 1.0;
                 return Trial{{random_tensor({5}, r, 0.05, 0.95)},
                              [z5](nn::Tape&, const V& v) { return L::classification(v[0], z5); }};
               }});
  return c;
}

}  // namespace oracle
