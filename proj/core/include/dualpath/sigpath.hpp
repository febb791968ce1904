#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "dualpath/sigcore.hpp"

namespace dualpath::sigpath {

// Centered "same" convolution with zero padding:
// out[n] = sum_k taps[k] x[n - k + K/2]. No length restrictions.
ComplexSequence fir_same(std::span<const Complex> x, std::span<const Complex> taps);

// Signal-path filter: 64 (noise) or 65 (Eq+MF) taps, len(x) >= len(taps).
ComplexSequence apply_fir(std::span<const Complex> x, std::span<const Complex> taps);

// out[k] = x[k] exp(-j 2 pi f0_hat k).
ComplexSequence correct_cfo(std::span<const Complex> x, double f0_hat);

// Nearest constellation point per input; ties go to the lowest index.
std::vector<int> demap_min_distance(std::span<const Complex> points, ModulationScheme scheme);

enum class PhaseSearch {
  kAmbiguityGroup,  // rotations mapping the constellation onto itself
  kContinuous,      // least-squares rotation (genie phase recovery)
};

struct PhaseAlignment {
  ComplexSequence aligned;
  double rotation = 0.0;  // radians applied to the input
};

// Rotates `decoded` to minimize the total squared distance to `reference`.
PhaseAlignment align_phase(std::span<const Complex> decoded, std::span<const Complex> reference,
                           ModulationScheme scheme, PhaseSearch search = PhaseSearch::kAmbiguityGroup);

// Complex-operation accounting of the signal path for an n-sample input.
// Each filter stage is charged n * (even part of its tap count), the
// frequency correction n, and every complex operation six real flops.
FlopReport signal_path_flops(std::size_t n_samples, std::size_t noise_taps = RxParams::kNoiseTaps,
                             std::size_t eqmf_taps = RxParams::kEqmfTaps);

// Ground truth used to score decoded symbols. Only instants present in both
// streams and at least `guard` samples away from either window edge count.
struct SerReference {
  std::vector<std::size_t> indices;  // sample index of each symbol instant
  ComplexSequence symbols;
  std::vector<int> labels;
  std::size_t guard = 16;
  PhaseSearch phase = PhaseSearch::kContinuous;
};

// Reference built from a labeled sample's own timing and symbols.
SerReference reference_from_sample(const LabeledSample& sample, std::size_t guard = 16);

// noise FIR -> frequency correction -> Eq+MF FIR -> sampling at the
// transitions of p.timing -> (optional genie phase) -> demapping.
DemodReport run_signal_path(std::span<const Complex> y, const RxParams& p, ModulationScheme scheme,
                            const SerReference* reference = nullptr);

struct BaselineConfig {
  double min_sps = 3.0;          // smallest samples/symbol of the dataset
  std::size_t lpf_taps = 64;
  std::size_t guard = 16;
  int mf_span_symbols = 8;
};

// Genie DSP receiver: fixed low-pass, exact CFO removal, matched filter with
// the true rolloff, true timing and phase, no equalization.
DemodReport baseline_genie_dsp(const LabeledSample& sample, const BaselineConfig& config = {});

struct SerCount {
  std::size_t errors = 0;
  std::size_t total = 0;

  double rate() const { return total == 0 ? 0.0 : static_cast<double>(errors) / static_cast<double>(total); }
  SerCount& operator+=(const SerCount& o) {
    errors += o.errors;
    total += o.total;
    return *this;
  }
};

// Scores decoded symbols at `indices` against the reference.
SerCount count_symbol_errors(std::span<const std::size_t> indices, std::span<const int> decoded,
                             const SerReference& reference, std::size_t n_samples);

}  // namespace dualpath::sigpath
