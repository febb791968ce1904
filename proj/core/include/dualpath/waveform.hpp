#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dualpath/pulse.hpp"
#include "dualpath/sigcore.hpp"

namespace dualpath::waveform {

using Rng = std::mt19937_64;

// SplitMix64 mix of a base seed and a stream index; used to give every
// sample and epoch its own independent generator.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool valid() const { return lo <= hi; }
  double draw(Rng& rng) const;
};

// Parameter ranges from which samples are drawn.
struct DatasetSpec {
  std::vector<ModulationScheme> universe;
  Interval f0_range{0.0, 0.005};         // cycles/sample
  Interval snr_range_db{-10.0, 40.0};
  Interval sps_range{3.0, 16.0};
  std::vector<double> rolloff_set{0.15, 0.35, 0.55};
  Interval t0_range{0.0, 0.5};           // symbol periods
  Interval phi0_range{0.0, 6.283185307179586};
  Interval delay_spread_range{0.5, 4.0};  // samples
  std::array<double, 2> nlos_mean_mags{0.5, 0.1};
  bool multipath = true;
  bool noiseless = false;
  std::size_t n_r = 128;
  std::uint64_t seed = 0;

  void validate() const;
};

// The two dataset definitions (8 and 19 classes).
DatasetSpec dataset1();
DatasetSpec dataset2();

void to_json(nlohmann::json& j, const DatasetSpec& spec);
void from_json(const nlohmann::json& j, DatasetSpec& spec);

// Pulse train sum_j s_j p(t - t_j) sampled at out[k] = x(start_sample + k),
// with symbol j peaking at symbol_position(first_index + j, sps, t0).
// n_out == 0 selects n_received(symbols.size(), sps).
ComplexSequence modulate_linear(std::span<const Complex> symbols, const RrcFilter& filter, double sps,
                                double t0, std::size_t n_out = 0, long first_index = 0,
                                double start_sample = 0.0);

// Continuous-phase modulation (GMSK with BT = 0.3, CPFSK with h = 0.5). Bit
// m's frequency pulse starts at its symbol position; bit 0 maps to -1.
ComplexSequence modulate_cpm(std::span<const std::uint8_t> bits, ModulationScheme scheme, double sps,
                             double t0 = 0.0, std::size_t n_out = 0, long first_index = 0,
                             double start_sample = 0.0);

inline constexpr double kGmskBt = 0.3;
inline constexpr double kCpmIndex = 0.5;

// Tap delays (samples) of the sparse 3-tap channel: 0, spread/2, spread.
std::array<double, 3> channel_delays(double delay_spread);

// Causal multipath with fractional delays (linear interpolation); output is
// truncated to len(x).
ComplexSequence apply_channel(std::span<const Complex> x, std::span<const Complex> taps, double delay_spread);

// out[k] = x[k] exp(j(2 pi f0 k + phi0)).
ComplexSequence apply_cfo_phase(std::span<const Complex> x, double f0, double phi0);

// Circular complex Gaussian noise at the given SNR relative to the measured
// power of x. snr_db = +inf returns x unchanged.
ComplexSequence add_awgn(std::span<const Complex> x, double snr_db, Rng& rng);

// Draws SignalParams from the spec and runs the full impairment chain.
LabeledSample generate_sample(const DatasetSpec& spec, Rng& rng);

// Generation with fixed, caller-chosen parameters.
LabeledSample synthesize(const DatasetSpec& spec, const SignalParams& params, Rng& rng);

// Deterministic lazy stream of n samples. Sample i depends only on
// (seed, i), so any subset can be produced in any order.
class EpochStream {
 public:
  EpochStream(DatasetSpec spec, std::size_t n, std::uint64_t seed);

  std::size_t size() const { return n_; }
  LabeledSample at(std::size_t index) const;
  // Next sample in order, or nullopt when exhausted.
  std::optional<LabeledSample> next();

 private:
  DatasetSpec spec_;
  std::size_t n_;
  std::uint64_t seed_;
  std::size_t cursor_ = 0;
};

EpochStream stream_epoch(const DatasetSpec& spec, std::size_t n, std::uint64_t seed);

}  // namespace dualpath::waveform
