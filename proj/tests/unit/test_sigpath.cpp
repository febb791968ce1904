#include <gtest/gtest.h>

#include "dualpath/errors.hpp"
#include "dualpath/harness.hpp"
#include "dualpath/losses.hpp"
#include "dualpath/sigpath.hpp"
#include "dualpath/waveform.hpp"
#include "oracles.hpp"

using namespace dualpath;
using namespace dualpath::sigpath;

namespace {

waveform::DatasetSpec awgn_qpsk(double snr_db, std::size_t n_r) {
  waveform::DatasetSpec s = waveform::dataset1();
  s.universe = {ModulationScheme::kQpsk};
  s.multipath = false;
  s.f0_range = {0.0, 0.0};
  s.phi0_range = {0.0, 0.0};
  s.t0_range = {0.0, 0.0};
  s.sps_range = {8.0, 8.0};
  s.rolloff_set = {0.35};
  s.snr_range_db = {snr_db, snr_db};
  s.n_r = n_r;
  return s;
}

}  // namespace

TEST(Fir, SameModeMatchesFullConvolutionOracle) {
  std::mt19937_64 rng(31);
  for (std::size_t k : {1U, 2U, 4U, 5U, 64U, 65U}) {
    const auto x = oracle::random_complex(100, rng);
    const auto h = oracle::random_complex(k, rng);
    const auto got = fir_same(x, h);
    const auto want = oracle::fir_same(x, h);
    for (std::size_t i = 0; i < x.size(); ++i) ASSERT_LT(std::abs(got[i] - want[i]), 1e-12) << k << " " << i;
  }
}

TEST(Fir, SignalPathFiltersNeed64Or65Taps) {
  const ComplexSequence x(128, Complex(1, 0));
  EXPECT_NO_THROW(apply_fir(x, ComplexSequence(64)));
  EXPECT_NO_THROW(apply_fir(x, ComplexSequence(65)));
  try {
    apply_fir(x, ComplexSequence(63));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDimension);
  }
  EXPECT_THROW(apply_fir(ComplexSequence(32), ComplexSequence(64)), Error);
}

TEST(Cfo, CorrectionMatchesDerotationOracle) {
  std::mt19937_64 rng(32);
  const auto x = oracle::random_complex(300, rng);
  const auto got = correct_cfo(x, 0.0037);
  const auto want = oracle::derotate(x, 0.0037);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_LT(std::abs(got[i] - want[i]), 1e-12);
}

TEST(Demap, ConstellationPointsMapToThemselves) {
  for (auto s : all_schemes()) {
    if (!is_linear(s)) continue;
    const auto& c = constellation(s);
    const auto labels = demap_min_distance(c, s);
    for (std::size_t i = 0; i < c.size(); ++i) EXPECT_EQ(labels[i], static_cast<int>(i));
  }
}

TEST(Phase, AmbiguityGroupUndoesQuarterTurn) {
  const auto& c = constellation(ModulationScheme::kQpsk);
  ComplexSequence ref{c[0], c[1], c[2], c[3], c[1]};
  ComplexSequence rotated(ref);
  for (auto& v : rotated) v *= std::polar(1.0, oracle::kPi / 2);
  const auto a = align_phase(rotated, ref, ModulationScheme::kQpsk);
  for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_LT(std::abs(a.aligned[i] - ref[i]), 1e-12);
  const auto b = align_phase(rotated, ref, ModulationScheme::kQpsk, PhaseSearch::kContinuous);
  EXPECT_NEAR(std::remainder(b.rotation + oracle::kPi / 2, 2 * oracle::kPi), 0.0, 1e-12);
}

TEST(Flops, PathAccountingIdentity) {
  const auto f = signal_path_flops(128);
  EXPECT_EQ(f.complex_ops, 16512U);
  EXPECT_EQ(f.real_flops, 99072U);
  EXPECT_EQ(signal_path_flops(256).complex_ops, 2 * 16512U);
}

TEST(Pipeline, IdentityParamsPassSignalThrough) {
  std::mt19937_64 rng(33);
  const auto y = oracle::random_complex(128, rng);
  const auto r = run_signal_path(y, RxParams::identity(128, 0), ModulationScheme::kQpsk);
  EXPECT_EQ(r.z3_hat, y);
  EXPECT_EQ(r.flops.real_flops, 99072U);
}

TEST(Pipeline, OracleParamsRecoverZ2AndDecodeCleanly) {
  auto spec = waveform::dataset1();
  spec.multipath = false;
  spec.noiseless = true;
  // fractional sps puts decisions up to half a sample off the instant, which
  // only the sparser constellations absorb
  spec.universe = {ModulationScheme::kBpsk, ModulationScheme::kQpsk, ModulationScheme::kPsk8,
                   ModulationScheme::kQam16, ModulationScheme::kApsk16, ModulationScheme::kAsk4,
                   ModulationScheme::kOok};
  const waveform::EpochStream stream(spec, 200, 34);
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const auto s = stream.at(i);
    const RxParams p = harness::oracle_rx_params(s, spec.universe.size());
    const auto ref = reference_from_sample(s);
    const auto r = run_signal_path(s.y, p, s.params.scheme, &ref);
    EXPECT_LT(losses::loss_phase_insensitive(r.z2_hat, s.z2), 1e-10);
    ASSERT_TRUE(r.ser.has_value());
    EXPECT_EQ(r.symbol_errors, 0U) << scheme_name(s.params.scheme);
    EXPECT_GT(r.symbols_scored, 0U);
  }
}

TEST(Pipeline, ReferenceGuardExcludesEdges) {
  SerReference ref;
  ref.indices = {3, 20, 60, 120};
  ref.labels = {0, 1, 2, 3};
  ref.symbols = ComplexSequence(4);
  ref.guard = 16;
  const std::vector<std::size_t> idx{3, 20, 60, 120};
  const std::vector<int> dec{9, 1, 0, 9};
  const auto c = count_symbol_errors(idx, dec, ref, 128);
  EXPECT_EQ(c.total, 2U);
  EXPECT_EQ(c.errors, 1U);
}

TEST(Baseline, AwgnQpskNearTheory) {
  const double es_n0_db = 10.0;
  const auto spec = awgn_qpsk(es_n0_db - 10.0 * std::log10(8.0), 1024);
  const waveform::EpochStream stream(spec, 1000, 35);
  SerCount c;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const auto r = baseline_genie_dsp(stream.at(i));
    c += {r.symbol_errors, r.symbols_scored};
  }
  const double theory = oracle::qpsk_ser(std::pow(10.0, es_n0_db / 10.0));
  EXPECT_NEAR(theory, 1.57e-3, 1e-5);
  EXPECT_GT(c.rate(), theory / 2.0);
  EXPECT_LT(c.rate(), theory * 2.0);
}

TEST(Baseline, RejectsContinuousPhase) {
  auto spec = waveform::dataset1();
  spec.universe = {ModulationScheme::kGmsk};
  waveform::Rng rng(1);
  const auto s = waveform::generate_sample(spec, rng);
  try {
    baseline_genie_dsp(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUnsupportedScheme);
  }
}
