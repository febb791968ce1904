#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "dualpath/errors.hpp"
#include "dualpath/nn/adam.hpp"
#include "dualpath/nn/checkpoint.hpp"
#include "dualpath/nn/ops.hpp"
#include "dualpath/sigpath.hpp"
#include "gradcheck_cases.hpp"

using namespace dualpath;
using namespace dualpath::nn;

class GradCheck : public ::testing::TestWithParam<oracle::GradCase> {};

TEST_P(GradCheck, MatchesCentralDifferences) {
  const auto& gc = GetParam();
  std::mt19937_64 rng(std::hash<std::string>{}(gc.name));
  for (int t = 0; t < oracle::kGradTrials; ++t) {
    auto trial = gc.make(rng);
    const double err = oracle::gradcheck(trial.fn, trial.inputs, rng);
    ASSERT_LT(err, gc.tolerance) << gc.name << " trial " << t;
  }
}

INSTANTIATE_TEST_SUITE_P(AllOps, GradCheck, ::testing::ValuesIn(oracle::grad_cases()),
                         [](const auto& info) { return info.param.name; });

TEST(Tape, StopGradientBlocksExactly) {
  ParameterStore store;
  store.add("a", Tensor({3}, {0.5, -1.0, 2.0}));
  Tape tape;
  const Var a = tape.param(store, 0);
  const Var y = sum(mul(stop_gradient(a), a));
  tape.backward(y);
  Gradients g = Gradients::zeros_like(store);
  tape.accumulate_parameter_grads(store, g);
  // only the unblocked factor contributes: d/da (c * a) = c
  EXPECT_EQ(g.grads[0].data, (std::vector<double>{0.5, -1.0, 2.0}));
}

TEST(Tape, GradDisabledRecordsNoBackward) {
  ParameterStore store;
  store.add("a", Tensor({2}, {1.0, 2.0}));
  Tape tape(false);
  const Var y = sum(tape.param(store, 0));
  EXPECT_FALSE(tape.requires_grad(y));
  EXPECT_DOUBLE_EQ(y.value().item(), 3.0);
}

TEST(Tape, BackwardNeedsScalarRoot) {
  Tape tape;
  const Var v = tape.constant(Tensor({2}, {1.0, 2.0}));
  EXPECT_THROW(tape.backward(v), Error);
}

TEST(Ops, ShapeMismatchRaisesDimension) {
  Tape tape;
  const Var a = tape.constant(Tensor({2}));
  const Var b = tape.constant(Tensor({3}));
  try {
    add(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDimension);
  }
}

TEST(Ops, ComplexFirForwardIsTheSignalPathKernel) {
  std::mt19937_64 rng(3);
  const auto x = oracle::random_complex(70, rng);
  const auto h = oracle::random_complex(65, rng);
  Tape tape(false);
  const Var y = complex_fir(tape.constant(planar_tensor(x)), tape.constant(planar_tensor(h)));
  EXPECT_EQ(complex_from(y.value()), sigpath::fir_same(x, h));
}

TEST(Ops, SoftmaxSumsToOne) {
  Tape tape(false);
  const Var p = softmax(tape.constant(Tensor({4}, {1000.0, 999.0, -5.0, 0.0})));
  double s = 0.0;
  for (double v : p.value().data) s += v;
  EXPECT_NEAR(s, 1.0, 1e-15);
}

TEST(Ops, PowerLagPhaseOfToneIsItsRotation) {
  const double f = 0.0031;
  ComplexSequence x(64);
  for (std::size_t k = 0; k < x.size(); ++k) x[k] = std::polar(0.7, 2.0 * 3.141592653589793 * f * k + 0.4);
  Tape tape(false);
  const Var a = power_lag_phase(tape.constant(planar_tensor(x)), 4, {1, 5, 9});
  const double want[] = {1, 5, 9};
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(a.value().data[i], 2.0 * 3.141592653589793 * 4 * want[i] * f, 1e-12);
  EXPECT_THROW(power_lag_phase(tape.constant(planar_tensor(x)), 4, {64}), Error);
}

TEST(Adam, FirstStepMatchesHandComputation) {
  ParameterStore store;
  store.add("w", Tensor({2}, {1.0, -1.0}));
  AdamConfig cfg;
  cfg.lr = 0.1;
  cfg.clip_norm = 0.0;
  auto state = make_optimizer(store, cfg);
  Gradients g = Gradients::zeros_like(store);
  g.grads[0].data = {0.3, -4.0};
  adam_step(store, g, state);
  // bias-corrected first step moves each weight by lr * sign(g) (up to eps)
  for (std::size_t i = 0; i < 2; ++i) {
    const double gi = i == 0 ? 0.3 : -4.0;
    const double m = (1 - 0.9) * gi / (1 - 0.9), v = (1 - 0.999) * gi * gi / (1 - 0.999);
    const double expect = (i == 0 ? 1.0 : -1.0) - 0.1 * m / (std::sqrt(v) + 1e-8);
    EXPECT_NEAR(store[0].value.data[i], expect, 1e-15);
  }
}

TEST(Adam, ClipsToGlobalNorm) {
  ParameterStore store;
  store.add("w", Tensor({2}));
  AdamConfig cfg;
  cfg.clip_norm = 1.0;
  auto state = make_optimizer(store, cfg);
  Gradients g = Gradients::zeros_like(store);
  g.grads[0].data = {3.0, 4.0};
  EXPECT_DOUBLE_EQ(adam_step(store, g, state), 5.0);
  EXPECT_NEAR(g.global_norm(), 1.0, 1e-12);
}

TEST(Adam, NonFiniteGradientIsTrainingFault) {
  ParameterStore store;
  store.add("w", Tensor({1}, {2.0}));
  auto state = make_optimizer(store);
  Gradients g = Gradients::zeros_like(store);
  g.grads[0].data = {std::nan("")};
  try {
    adam_step(store, g, state);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kTrainingFault);
  }
  EXPECT_EQ(store[0].value.data[0], 2.0);
}

TEST(Checkpoint, RoundTripIsExact) {
  std::mt19937_64 rng(9);
  ParameterStore a, b;
  a.add("x", oracle::random_tensor({3, 4}, rng));
  a.add("y", oracle::random_tensor({5}, rng));
  b.add("x", Tensor({3, 4}));
  b.add("y", Tensor({5}));
  const auto dir = std::filesystem::temp_directory_path() / "dualpath_ckpt_test";
  save_checkpoint(dir, a, {{"note", "t"}});
  const auto meta = load_checkpoint(dir, b);
  EXPECT_EQ(meta.at("note"), "t");
  EXPECT_EQ(a[0].value.data, b[0].value.data);
  EXPECT_EQ(a[1].value.data, b[1].value.data);

  ParameterStore wrong;
  wrong.add("x", Tensor({4, 3}));
  wrong.add("y", Tensor({5}));
  EXPECT_THROW(load_checkpoint(dir, wrong), Error);
  std::filesystem::remove_all(dir);
}
