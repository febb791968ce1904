#include "dualpath/pulse.hpp"

#include <cmath>
#include <numbers>

#include "dualpath/errors.hpp"

namespace dualpath {
namespace {

constexpr double kPi = std::numbers::pi;

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  return std::sin(kPi * x) / (kPi * x);
}

}  // namespace

double rrc_pulse(double t, double rolloff) {
  const double b = rolloff;
  if (b <= 0.0) return sinc(t);
  if (std::abs(t) < 1e-12) return 1.0 - b + 4.0 * b / kPi;
  const double singular = 1.0 / (4.0 * b);
  if (std::abs(std::abs(t) - singular) < 1e-9) {
    return b / std::sqrt(2.0) *
           ((1.0 + 2.0 / kPi) * std::sin(kPi / (4.0 * b)) + (1.0 - 2.0 / kPi) * std::cos(kPi / (4.0 * b)));
  }
  const double num = std::sin(kPi * t * (1.0 - b)) + 4.0 * b * t * std::cos(kPi * t * (1.0 + b));
  const double den = kPi * t * (1.0 - (4.0 * b * t) * (4.0 * b * t));
  return num / den;
}

double raised_cosine(double t, double rolloff) {
  const double b = rolloff;
  if (b > 0.0 && std::abs(std::abs(t) - 1.0 / (2.0 * b)) < 1e-9) {
    return kPi / 4.0 * sinc(1.0 / (2.0 * b));
  }
  return sinc(t) * std::cos(kPi * b * t) / (1.0 - (2.0 * b * t) * (2.0 * b * t));
}

RrcFilter::RrcFilter(double rolloff, double sps, int span_symbols)
    : rolloff_(rolloff), sps_(sps), span_(span_symbols) {
  if (!(rolloff >= 0.0 && rolloff <= 1.0)) fail(ErrorKind::kInvalidArgument, "rolloff must lie in [0, 1]");
  if (!(sps >= 1.0)) fail(ErrorKind::kInvalidArgument, "samples per symbol must be >= 1");
  if (span_symbols < 1) fail(ErrorKind::kInvalidArgument, "RRC span must be positive");

  const auto half = static_cast<long>(std::floor(span_ * sps_ / 2.0));
  taps_.resize(static_cast<std::size_t>(2 * half + 1));
  double e = 0.0;
  for (long n = -half; n <= half; ++n) {
    const double v = rrc_pulse(static_cast<double>(n) / sps_, rolloff_);
    taps_[static_cast<std::size_t>(n + half)] = v;
    e += v * v;
  }
  const double scale = 1.0 / std::sqrt(e);
  for (auto& t : taps_) t *= scale;
}

double RrcFilter::pulse(double t) const {
  if (std::abs(t) > span_ / 2.0) return 0.0;
  return rrc_pulse(t, rolloff_);
}

std::vector<double> matched_filter_taps(double rolloff, double sps, std::size_t n_taps, int span_symbols) {
  if (n_taps == 0) fail(ErrorKind::kEmptyInput, "matched filter needs at least one tap");
  const RrcFilter shape(rolloff, sps, span_symbols);
  const auto center = static_cast<long>(n_taps / 2);
  std::vector<double> taps(n_taps, 0.0);
  double e = 0.0;
  for (long n = 0; n < static_cast<long>(n_taps); ++n) {
    const double v = shape.pulse(static_cast<double>(n - center) / sps);
    taps[static_cast<std::size_t>(n)] = v;
    e += v * v;
  }
  for (auto& t : taps) t /= e;
  return taps;
}

std::vector<double> lowpass_taps(double cutoff, std::size_t n_taps) {
  if (n_taps == 0) fail(ErrorKind::kEmptyInput, "low-pass filter needs at least one tap");
  if (!(cutoff > 0.0 && cutoff <= 0.5)) fail(ErrorKind::kInvalidArgument, "cutoff must lie in (0, 0.5]");
  const auto center = static_cast<long>(n_taps / 2);
  const double half_span = static_cast<double>(center) + 1.0;
  std::vector<double> taps(n_taps);
  double sum = 0.0;
  for (long n = 0; n < static_cast<long>(n_taps); ++n) {
    const double o = static_cast<double>(n - center);
    const double window = 0.54 + 0.46 * std::cos(kPi * o / half_span);
    const double v = 2.0 * cutoff * sinc(2.0 * cutoff * o) * window;
    taps[static_cast<std::size_t>(n)] = v;
    sum += v;
  }
  for (auto& t : taps) t /= sum;
  return taps;
}

}  // namespace dualpath
