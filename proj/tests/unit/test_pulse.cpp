#include <gtest/gtest.h>

#include <numeric>

#include "dualpath/pulse.hpp"
#include "oracles.hpp"

using namespace dualpath;

TEST(Pulse, RrcMatchesClosedForm) {
  for (double beta : {0.15, 0.35, 0.55}) {
    for (double t = -4.0; t <= 4.0; t += 0.01) EXPECT_NEAR(rrc_pulse(t, beta), oracle::rrc(t, beta), 1e-9) << t;
    // singular points of the closed form
    const double ts = 1.0 / (4.0 * beta);
    EXPECT_NEAR(rrc_pulse(ts, beta), oracle::rrc(ts, beta), 1e-9);
    EXPECT_NEAR(rrc_pulse(-ts, beta), oracle::rrc(-ts, beta), 1e-9);
  }
}

TEST(Pulse, RaisedCosineIsRrcCascade) {
  for (double beta : {0.15, 0.35, 0.55}) {
    for (double t : {0.0, 0.25, 0.5, 1.0, 1.3, 2.0, 3.7}) {
      EXPECT_NEAR(raised_cosine(t, beta), oracle::rrc_cascade(t, beta), 2e-3) << beta << " " << t;
    }
    EXPECT_DOUBLE_EQ(raised_cosine(0.0, beta), 1.0);
    for (int k = 1; k < 6; ++k) EXPECT_NEAR(raised_cosine(k, beta), 0.0, 1e-15);
  }
}

TEST(Pulse, RrcFilterIsSymmetricWithUnitEnergy) {
  const RrcFilter f(0.35, 8.0);
  const auto& h = f.taps();
  ASSERT_EQ(h.size() % 2, 1U);
  for (std::size_t i = 0; i < h.size(); ++i) EXPECT_DOUBLE_EQ(h[i], h[h.size() - 1 - i]);
  const double e = std::inner_product(h.begin(), h.end(), h.begin(), 0.0);
  EXPECT_NEAR(e, 1.0, 1e-3);
  EXPECT_EQ(f.pulse(4.5), 0.0);
  EXPECT_DOUBLE_EQ(f.pulse(0.3), rrc_pulse(0.3, 0.35));
}

TEST(Pulse, MatchedFilterHasUnitGainAtSymbolInstant) {
  for (double sps : {7.0, 8.0, 8.6}) {
    const auto mf = matched_filter_taps(0.35, sps, 65);
    ASSERT_EQ(mf.size(), 65U);
    // cascade with the continuous pulse sampled at the filter's own taps
    double peak = 0.0;
    for (std::size_t k = 0; k < mf.size(); ++k) {
      const double t = (static_cast<double>(k) - 32.0) / sps;
      peak += mf[k] * rrc_pulse(t, 0.35);
    }
    EXPECT_NEAR(peak, 1.0, 1e-9) << sps;
  }
}

TEST(Pulse, LowpassHasUnitDcGainAndRejectsStopband) {
  const auto h = lowpass_taps(0.1, 64);
  ASSERT_EQ(h.size(), 64U);
  EXPECT_NEAR(std::accumulate(h.begin(), h.end(), 0.0), 1.0, 1e-12);
  Complex stop{};
  for (std::size_t k = 0; k < h.size(); ++k) stop += h[k] * std::polar(1.0, -2 * oracle::kPi * 0.3 * k);
  EXPECT_LT(std::abs(stop), 0.01);
}
