#include <gtest/gtest.h>

#include <nlohmann/json.hpp>
#include <numeric>

#include "dualpath/dpn.hpp"
#include "dualpath/errors.hpp"
#include "dualpath/harness.hpp"
#include "dualpath/losses.hpp"
#include "dualpath/sigpath.hpp"
#include "dualpath/waveform.hpp"
#include "oracles.hpp"

using namespace dualpath;
using namespace dualpath::dpn;

namespace {

DpnConfig small(std::size_t classes) {
  DpnConfig c;
  c.feature_channels = 6;
  c.n_residual_blocks = 1;
  c.head_units = 8;
  c.lstm1_units = 5;
  c.lstm2_units = 5;
  c.class_count = classes;
  return c;
}

LabeledSample sample_for(std::size_t classes, std::uint64_t seed) {
  auto spec = waveform::dataset2();
  spec.universe.resize(classes);
  waveform::Rng rng(seed);
  return waveform::generate_sample(spec, rng);
}

bool has_prefix(const std::string& s, const std::string& p) { return s.rfind(p, 0) == 0; }

nn::Gradients grads_of(const DpnModel& m, const LabeledSample& s, const losses::LossWeights& w) {
  auto g = nn::Gradients::zeros_like(m.params());
  accumulate_gradients(m, s, w, nullptr, g);
  return g;
}

}  // namespace

TEST(Dpn, DefaultModelIsDeskScale) {
  const DpnModel m{DpnConfig{}};
  EXPECT_GT(m.parameter_count(), 10000U);
  EXPECT_LE(m.parameter_count(), 200000U);
}

TEST(Dpn, UntrainedOutputsAreFiniteAndValid) {
  const DpnModel m(small(5));
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto s = sample_for(5, seed);
    const auto r = infer(m, s.y);
    EXPECT_TRUE(all_finite(r.z3_hat));
    EXPECT_NO_THROW(r.rx.validate());
    EXPECT_EQ(r.rx.noise_taps.size(), 64U);
    EXPECT_EQ(r.rx.eqmf_taps.size(), 65U);
    EXPECT_NEAR(std::accumulate(r.rx.class_scores.begin(), r.rx.class_scores.end(), 0.0), 1.0, 1e-12);
    for (double p : r.z4_prob) EXPECT_TRUE(p >= 0.0 && p <= 1.0);
  }
}

TEST(Dpn, DisabledStagesPassInputThrough) {
  DpnConfig c = small(3);
  c.stages = StageMask::ablation(0);
  const DpnModel m(c);
  const auto s = sample_for(3, 1);
  const auto r = infer(m, s.y);
  EXPECT_EQ(r.z1_hat, s.y);
  EXPECT_EQ(r.z2_hat, s.y);
  EXPECT_EQ(r.z3_hat, s.y);
  EXPECT_FALSE(m.params().contains("noise.w"));
  EXPECT_FALSE(m.params().contains("timing.lstm1.wx"));
  EXPECT_EQ(StageMask::ablation(3).level(), 3);
  EXPECT_THROW(StageMask::ablation(5), Error);
}

TEST(Dpn, RxParamsReproduceInGraphOutputBitExactly) {
  const DpnModel m(small(4));
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto s = sample_for(4, seed);
    const auto r = infer(m, s.y);
    const auto path = sigpath::run_signal_path(s.y, r.rx, ModulationScheme::kQpsk);
    EXPECT_EQ(path.z1_hat, r.z1_hat);
    EXPECT_EQ(path.z2_hat, r.z2_hat);
    EXPECT_EQ(path.z3_hat, r.z3_hat);
  }
}

TEST(Dpn, StopGradientIsolatesNoiseEstimatorFromLaterLosses) {
  const DpnModel m(small(4));
  losses::LossWeights only3, only1;
  only3.w = {0, 0, 1, 0, 0};
  only1.w = {1, 0, 0, 0, 0};
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto s = sample_for(4, seed);
    const auto g3 = grads_of(m, s, only3);
    const auto g1 = grads_of(m, s, only1);
    double n1 = 0.0;
    for (std::size_t i = 0; i < m.params().size(); ++i) {
      if (!has_prefix(m.params()[i].name, "noise.")) continue;
      for (double v : g3.grads[i].data) ASSERT_EQ(v, 0.0);
      for (double v : g1.grads[i].data) n1 += std::abs(v);
    }
    EXPECT_GT(n1, 0.0);
  }
}

TEST(Dpn, NoiseEstimatorGradientMatchesFiniteDifferences) {
  DpnModel m(small(3));
  losses::LossWeights only1;
  only1.w = {1, 0, 0, 0, 0};
  const auto s = sample_for(3, 7);
  const auto g = grads_of(m, s, only1);
  const std::size_t idx = m.params().index_of("noise.b");
  auto& data = m.params()[idx].value.data;
  const auto loss = [&] {
    nn::Tape t(false);
    StepResult r;
    training_forward(m, s, only1, t, nullptr, r);
    return r.total;
  };
  for (std::size_t k : {0U, 31U, 32U, 100U}) {
    const double keep = data[k];
    data[k] = keep + 1e-6;
    const double up = loss();
    data[k] = keep - 1e-6;
    const double down = loss();
    data[k] = keep;
    const double numeric = (up - down) / 2e-6;
    EXPECT_NEAR(g.grads[idx].data[k], numeric, 1e-4 * std::max(1.0, std::abs(numeric)));
  }
}

TEST(Dpn, DisabledStageLossesAreZeroAndClassLossCounts) {
  DpnConfig c = small(3);
  c.stages = StageMask::ablation(0);
  const DpnModel m(c);
  nn::Tape t(false);
  StepResult r;
  training_forward(m, sample_for(3, 2), {}, t, nullptr, r);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(r.components[i], 0.0);
  EXPECT_GT(r.components[4], 0.0);
}

TEST(Dpn, OracleTargetsGiveZeroLosses) {
  const auto s = sample_for(3, 3);
  EXPECT_EQ(losses::loss_mse(s.z1, s.z1), 0.0);
  EXPECT_NEAR(losses::loss_phase_insensitive(s.z2, s.z2), 0.0, 1e-12);
  EXPECT_NEAR(losses::loss_sampled_phase_insensitive(s.z3, s.z3, s.z4), 0.0, 1e-12);
  const std::vector<double> p(s.z4.begin(), s.z4.end());
  EXPECT_LE(losses::loss_timing(s.z4, p), -std::log(1.0 - losses::kProbEps) + 1e-15);
  EXPECT_LE(losses::loss_classification(s.z5, s.z5), -std::log(1.0 - losses::kProbEps) + 1e-15);
}

TEST(Dpn, ClassCountMismatchIsDimensionError) {
  const DpnModel m(small(4));
  nn::Tape t(false);
  StepResult r;
  EXPECT_THROW(training_forward(m, sample_for(3, 0), {}, t, nullptr, r), Error);
}

TEST(Dpn, NanInputIsRejected) {
  const DpnModel m(small(2));
  ComplexSequence y(128, Complex(1, 0));
  y[5] = Complex(std::nan(""), 0);
  EXPECT_THROW(infer(m, y), Error);
}

TEST(Dpn, NoiseInjectionIsSeededAndOnlyInTraining) {
  DpnConfig c = small(3);
  c.inject_noise_before_eqmf = true;
  const DpnModel m(c);
  const auto s = sample_for(3, 4);
  const auto run = [&](std::uint64_t seed) {
    waveform::Rng rng(seed);
    nn::Tape t(false);
    return complex_from(m.forward(t, s.y, &rng).z3_hat.value());
  };
  EXPECT_EQ(run(1), run(1));
  EXPECT_NE(run(1), run(2));
  EXPECT_EQ(infer(m, s.y).z3_hat, infer(m, s.y).z3_hat);
}

TEST(Dpn, ConfigJsonRoundTrip) {
  DpnConfig c = small(7);
  c.timing_input = TimingInput::kFeatures;
  c.classifier_input = ClassifierInput::kZ2;
  c.stages = StageMask::ablation(2);
  c.freq_lags = {3, 6};
  const nlohmann::json j = c;
  const auto back = j.get<DpnConfig>();
  EXPECT_EQ(back.stages, c.stages);
  EXPECT_EQ(back.timing_input, c.timing_input);
  EXPECT_EQ(back.classifier_input, c.classifier_input);
  EXPECT_EQ(back.class_count, 7U);
  EXPECT_EQ(back.freq_lags, c.freq_lags);
  EXPECT_THROW((nlohmann::json{{"timing_input", "bogus"}}.get<DpnConfig>()), Error);
}

TEST(Flops, ClosedFormLayers) {
  DpnConfig c;
  c.stages = StageMask::ablation(0);
  c.feature_channels = 4;
  c.n_residual_blocks = 0;
  c.kernel_size = 5;
  c.head_units = 3;
  c.class_count = 2;
  // conv 2->4, K=5, L=128; pooling; two dense layers
  const std::uint64_t conv = 2 * (2 * 4 * 5 * 128) + 4 * 128;
  EXPECT_EQ(count_nn_flops(c, 128), conv + 4 * 128 + (2 * 4 * 3 + 3) + (2 * 3 * 2 + 2));
}

TEST(Flops, DefaultModelMatchesLayerSheet) {
  for (int level = 0; level <= 4; ++level) {
    DpnConfig c;
    c.stages = StageMask::ablation(level);
    std::uint64_t sheet = 0;
    for (const auto& line : oracle::flop_sheet(c, 128)) sheet += line.flops;
    EXPECT_EQ(count_nn_flops(c, 128), sheet) << "level " << level;
  }
  DpnConfig f;
  f.timing_input = TimingInput::kFeatures;
  std::uint64_t sheet = 0;
  for (const auto& line : oracle::flop_sheet(f, 128)) sheet += line.flops;
  EXPECT_EQ(count_nn_flops(f, 128), sheet);
}
