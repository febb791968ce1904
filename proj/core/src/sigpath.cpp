#include "dualpath/sigpath.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "dualpath/errors.hpp"
#include "dualpath/pulse.hpp"

namespace dualpath::sigpath {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace

ComplexSequence fir_same(std::span<const Complex> x, std::span<const Complex> taps) {
  const auto n = static_cast<long>(x.size());
  const auto k_len = static_cast<long>(taps.size());
  const long center = k_len / 2;
  ComplexSequence out(x.size(), Complex{});
  for (long k = 0; k < k_len; ++k) {
    const Complex t = taps[static_cast<std::size_t>(k)];
    const long offset = center - k;  // out[i] += t * x[i + offset]
    const long lo = std::max(0L, -offset);
    const long hi = std::min(n, n - offset);
    for (long i = lo; i < hi; ++i) {
      out[static_cast<std::size_t>(i)] += t * x[static_cast<std::size_t>(i + offset)];
    }
  }
  return out;
}

ComplexSequence apply_fir(std::span<const Complex> x, std::span<const Complex> taps) {
  if (taps.size() != RxParams::kNoiseTaps && taps.size() != RxParams::kEqmfTaps) {
    fail(ErrorKind::kDimension, "signal-path filters have 64 or 65 taps");
  }
  if (x.size() < taps.size()) fail(ErrorKind::kDimension, "input shorter than the filter");
  return fir_same(x, taps);
}

ComplexSequence correct_cfo(std::span<const Complex> x, double f0_hat) {
  ComplexSequence out(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double phase = -kTwoPi * f0_hat * static_cast<double>(k);
    out[k] = x[k] * Complex(std::cos(phase), std::sin(phase));
  }
  return out;
}

std::vector<int> demap_min_distance(std::span<const Complex> points, ModulationScheme scheme) {
  const auto& table = constellation(scheme);
  std::vector<int> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int best_index = 0;
    for (std::size_t c = 0; c < table.size(); ++c) {
      const double d = std::norm(points[i] - table[c]);
      if (d < best) {
        best = d;
        best_index = static_cast<int>(c);
      }
    }
    out[i] = best_index;
  }
  return out;
}

PhaseAlignment align_phase(std::span<const Complex> decoded, std::span<const Complex> reference,
                           ModulationScheme scheme, PhaseSearch search) {
  if (decoded.size() != reference.size()) fail(ErrorKind::kDimension, "decoded and reference lengths differ");

  double rotation = 0.0;
  if (search == PhaseSearch::kContinuous) {
    Complex corr{};
    for (std::size_t i = 0; i < decoded.size(); ++i) corr += reference[i] * std::conj(decoded[i]);
    rotation = std::abs(corr) > 0.0 ? std::arg(corr) : 0.0;
  } else {
    double best = std::numeric_limits<double>::infinity();
    for (double r : ambiguity_rotations(scheme)) {
      const Complex w = std::polar(1.0, r);
      double cost = 0.0;
      for (std::size_t i = 0; i < decoded.size(); ++i) cost += std::norm(decoded[i] * w - reference[i]);
      if (cost < best - 1e-12) {
        best = cost;
        rotation = r;
      }
    }
  }

  PhaseAlignment result;
  result.rotation = rotation;
  const Complex w = std::polar(1.0, rotation);
  result.aligned.resize(decoded.size());
  for (std::size_t i = 0; i < decoded.size(); ++i) result.aligned[i] = decoded[i] * w;
  return result;
}

FlopReport signal_path_flops(std::size_t n, std::size_t noise_taps, std::size_t eqmf_taps) {
  FlopReport r;
  const auto even = [](std::size_t k) { return k - (k % 2); };
  r.complex_ops = n * even(noise_taps) + n + n * even(eqmf_taps);
  r.real_flops = 6 * r.complex_ops;
  return r;
}

SerReference reference_from_sample(const LabeledSample& sample, std::size_t guard) {
  SerReference ref;
  ref.indices = transition_indices(sample.z4);
  ref.symbols = sample.symbols;
  ref.labels = sample.symbol_labels;
  ref.guard = guard;
  if (ref.indices.size() != ref.symbols.size()) {
    fail(ErrorKind::kDimension, "sample symbols are not aligned with its timing signal");
  }
  return ref;
}

SerCount count_symbol_errors(std::span<const std::size_t> indices, std::span<const int> decoded,
                             const SerReference& reference, std::size_t n_samples) {
  SerCount count;
  std::size_t r = 0;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const std::size_t at = indices[i];
    while (r < reference.indices.size() && reference.indices[r] < at) ++r;
    if (r == reference.indices.size()) break;
    if (reference.indices[r] != at) continue;
    if (at < reference.guard || at + reference.guard >= n_samples) continue;
    ++count.total;
    if (decoded[i] != reference.labels[r]) ++count.errors;
  }
  return count;
}

namespace {

// Samples z3 at the transitions of `timing`, applies the genie phase (when a
// reference is supplied) and demaps.
void decide(const ComplexSequence& z3, std::span<const std::uint8_t> timing, ModulationScheme scheme,
            const SerReference* reference, DemodReport& report) {
  const ComplexSequence sampled = sample_at_transitions(z3, timing);
  const auto indices = transition_indices(timing);
  ComplexSequence points(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) points[i] = sampled[indices[i]];

  if (reference != nullptr && !points.empty()) {
    // Align on the instants present in both streams.
    ComplexSequence common_points, common_ref;
    std::size_t r = 0;
    for (std::size_t i = 0; i < indices.size(); ++i) {
      while (r < reference->indices.size() && reference->indices[r] < indices[i]) ++r;
      if (r < reference->indices.size() && reference->indices[r] == indices[i]) {
        common_points.push_back(points[i]);
        common_ref.push_back(reference->symbols[r]);
      }
    }
    if (!common_points.empty()) {
      const double rotation = align_phase(common_points, common_ref, scheme, reference->phase).rotation;
      const Complex w = std::polar(1.0, rotation);
      for (auto& p : points) p *= w;
    }
  }

  report.decoded_symbols = demap_min_distance(points, scheme);
  if (reference != nullptr) {
    const SerCount c = count_symbol_errors(indices, report.decoded_symbols, *reference, z3.size());
    report.symbol_errors = c.errors;
    report.symbols_scored = c.total;
    report.ser = c.rate();
  }
}

}  // namespace

DemodReport run_signal_path(std::span<const Complex> y, const RxParams& p, ModulationScheme scheme,
                            const SerReference* reference) {
  p.validate();
  if (p.timing.size() != y.size()) fail(ErrorKind::kDimension, "timing vector length differs from input");

  DemodReport report;
  report.predicted_scheme = scheme;
  report.z1_hat = apply_fir(y, p.noise_taps);
  report.z2_hat = correct_cfo(report.z1_hat, p.f0_hat);
  report.z3_hat = apply_fir(report.z2_hat, p.eqmf_taps);
  if (is_linear(scheme)) decide(report.z3_hat, p.timing, scheme, reference, report);
  report.flops = signal_path_flops(y.size(), p.noise_taps.size(), p.eqmf_taps.size());
  report.rx_params = p;
  return report;
}

DemodReport baseline_genie_dsp(const LabeledSample& sample, const BaselineConfig& config) {
  const SignalParams& params = sample.params;
  if (!is_linear(params.scheme)) {
    fail(ErrorKind::kUnsupportedScheme, "the genie baseline decodes linear modulations only");
  }

  const auto lpf_real = lowpass_taps(0.5 / config.min_sps, config.lpf_taps);
  const ComplexSequence lpf(lpf_real.begin(), lpf_real.end());

  auto mf_len = static_cast<std::size_t>(std::floor(config.mf_span_symbols * params.sps));
  mf_len += (mf_len % 2 == 0) ? 1 : 0;
  const auto mf_real = matched_filter_taps(params.rolloff, params.sps, mf_len, config.mf_span_symbols);
  const ComplexSequence mf(mf_real.begin(), mf_real.end());

  DemodReport report;
  report.predicted_scheme = params.scheme;
  report.z1_hat = fir_same(sample.y, lpf);
  report.z2_hat = correct_cfo(report.z1_hat, params.f0);
  report.z3_hat = fir_same(report.z2_hat, mf);

  SerReference reference = reference_from_sample(sample, config.guard);
  decide(report.z3_hat, sample.z4, params.scheme, &reference, report);

  const std::size_t n = sample.y.size();
  report.flops.complex_ops = n * lpf.size() + n + n * mf.size();
  report.flops.real_flops = 6 * report.flops.complex_ops;
  report.rx_params.noise_taps = lpf;
  report.rx_params.f0_hat = params.f0;
  report.rx_params.eqmf_taps = mf;
  report.rx_params.timing = sample.z4;
  return report;
}

}  // namespace dualpath::sigpath
