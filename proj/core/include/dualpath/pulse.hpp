#pragma once

#include <cstddef>
#include <vector>

namespace dualpath {

// Root-raised-cosine pulse with unit energy per symbol period; t in symbols.
double rrc_pulse(double t, double rolloff);

// Raised-cosine (RRC cascaded with its matched copy); unit peak, zero at
// nonzero integer t.
double raised_cosine(double t, double rolloff);

// Sampled, truncated root-raised-cosine shaping filter.
class RrcFilter {
 public:
  RrcFilter(double rolloff, double sps, int span_symbols = 8);

  double rolloff() const { return rolloff_; }
  double sps() const { return sps_; }
  int span_symbols() const { return span_; }

  // Symmetric, unit-energy taps sampled at sps, centered on the middle tap.
  const std::vector<double>& taps() const { return taps_; }

  // Continuous pulse (t in symbols), zero outside the span.
  double pulse(double t) const;

 private:
  double rolloff_;
  double sps_;
  int span_;
  std::vector<double> taps_;
};

// Matched-filter taps (odd length n_taps, centered) whose cascade with the
// sampled RRC pulse has unit gain at the symbol instant.
std::vector<double> matched_filter_taps(double rolloff, double sps, std::size_t n_taps,
                                        int span_symbols = 8);

// Windowed-sinc low-pass filter (Hamming window), unit DC gain.
std::vector<double> lowpass_taps(double cutoff_cycles_per_sample, std::size_t n_taps);

}  // namespace dualpath
