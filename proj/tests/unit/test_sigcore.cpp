#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "dualpath/errors.hpp"
#include "dualpath/sigcore.hpp"

using namespace dualpath;

TEST(Schemes, NamesRoundTrip) {
  ASSERT_EQ(all_schemes().size(), kSchemeCount);
  for (auto s : all_schemes()) EXPECT_EQ(parse_scheme(scheme_name(s)), s);
  EXPECT_THROW(parse_scheme("QAM7"), Error);
}

TEST(Schemes, ConstellationsHaveUnitEnergyAndDistinctPoints) {
  for (auto s : all_schemes()) {
    if (!is_linear(s)) continue;
    const auto& c = constellation(s);
    ASSERT_EQ(static_cast<int>(c.size()), scheme_order(s)) << scheme_name(s);
    double e = 0.0;
    for (const auto& p : c) e += std::norm(p);
    EXPECT_NEAR(e / static_cast<double>(c.size()), 1.0, 1e-12) << scheme_name(s);
    for (std::size_t i = 0; i < c.size(); ++i) {
      for (std::size_t j = i + 1; j < c.size(); ++j) EXPECT_GT(std::abs(c[i] - c[j]), 1e-3);
    }
  }
}

TEST(Schemes, AmbiguityRotationsMapConstellationOntoItself) {
  for (auto s : all_schemes()) {
    if (!is_linear(s)) continue;
    const auto& c = constellation(s);
    for (double r : ambiguity_rotations(s)) {
      for (const auto& p : c) {
        const Complex q = p * std::polar(1.0, r);
        double best = 1e9;
        for (const auto& o : c) best = std::min(best, std::abs(q - o));
        EXPECT_LT(best, 1e-9) << scheme_name(s) << " rotation " << r;
      }
    }
  }
  EXPECT_EQ(ambiguity_rotations(ModulationScheme::kBpsk).size(), 2U);
  EXPECT_EQ(ambiguity_rotations(ModulationScheme::kQpsk).size(), 4U);
}

TEST(Timing, TogglesOncePerSymbol) {
  for (double sps : {3.0, 7.3, 8.0, 16.0}) {
    for (double t0 : {0.0, 0.25, 0.5}) {
      const auto z4 = timing_signal(128, sps, t0);
      const auto tr = transition_indices(z4);
      ASSERT_GE(tr.size(), 2U);
      for (std::size_t i = 1; i < tr.size(); ++i) {
        EXPECT_LE(std::abs(static_cast<double>(tr[i] - tr[i - 1]) - sps), 1.0);
      }
      // transition i means z4[i] != z4[i+1]; the toggle sample rounds the instant
      for (std::size_t i : tr) {
        const double m = (static_cast<double>(i + 1) - t0 * sps) / sps;
        EXPECT_NEAR(m, std::round(m), 0.5 / sps + 1e-12);
      }
    }
  }
}

TEST(Timing, InvalidArguments) {
  EXPECT_THROW(timing_signal(0, 8, 0), Error);
  EXPECT_THROW(timing_signal(16, 0.5, 0), Error);
  EXPECT_THROW(timing_signal(16, 8, 0.7), Error);
}

TEST(Timing, SymbolPositionLeadsByOneSample) {
  EXPECT_DOUBLE_EQ(symbol_position(0, 8.0, 0.0), -1.0);
  EXPECT_DOUBLE_EQ(symbol_position(3, 8.0, 0.5), 27.0);
}

TEST(Labels, OneHotAndUnknownClass) {
  const std::vector<ModulationScheme> u{ModulationScheme::kBpsk, ModulationScheme::kQpsk};
  EXPECT_EQ(one_hot(ModulationScheme::kQpsk, u), (std::vector<double>{0, 1}));
  try {
    one_hot(ModulationScheme::kGmsk, u);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUnknownClass);
  }
}

TEST(Params, BlockRoundTrip) {
  SignalParams p;
  p.scheme = ModulationScheme::kQam16;
  p.n_symbols = 17;
  p.sps = 7.5;
  p.rolloff = 0.55;
  p.t0 = 0.3;
  p.f0 = 0.001;
  p.phi0 = 2.0;
  p.channel_taps = {Complex(1, 0), Complex(0.2, -0.1), Complex(0.01, 0.02)};
  p.delay_spread = 2.5;
  p.snr_db = 12.0;
  const auto back = params_from_block(params_block(p));
  EXPECT_EQ(back.scheme, p.scheme);
  EXPECT_EQ(back.n_symbols, p.n_symbols);
  EXPECT_EQ(back.channel_taps, p.channel_taps);
  EXPECT_EQ(back.snr_db, p.snr_db);
  EXPECT_FALSE(back.noiseless);
}

TEST(RxParamsTest, ValidateChecksTapCountsAndScores) {
  RxParams p = RxParams::identity(32, 3);
  EXPECT_NO_THROW(p.validate());
  p.noise_taps.pop_back();
  EXPECT_THROW(p.validate(), Error);
  p = RxParams::identity(32, 3);
  p.class_scores = {0.5, 0.6, -0.1};
  EXPECT_THROW(p.validate(), Error);
  p = RxParams::identity(32, 0);
  p.f0_hat = std::nan("");
  EXPECT_THROW(p.validate(), Error);
}

TEST(Sequences, PlanarRoundTripAndFinite) {
  const ComplexSequence x{{1, 2}, {-3, 4}};
  EXPECT_EQ(from_planar(to_planar(x)), x);
  EXPECT_TRUE(all_finite(x));
  const ComplexSequence bad{{std::nan(""), 0}};
  EXPECT_FALSE(all_finite(bad));
  EXPECT_THROW(validate_sequence(ComplexSequence{}), Error);
}

TEST(Sequences, SampleAtTransitionsKeepsOnlyInstants) {
  const ComplexSequence x{{1, 0}, {2, 0}, {3, 0}, {4, 0}};
  const TimingSignal z4{0, 1, 1, 0};
  EXPECT_EQ(sample_at_transitions(x, z4), (ComplexSequence{{1, 0}, {0, 0}, {3, 0}, {0, 0}}));
}
