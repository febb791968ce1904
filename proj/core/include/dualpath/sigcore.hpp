#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dualpath {

using Complex = std::complex<double>;

// Complex baseband samples (I/Q). The whole pipeline exchanges these.
using ComplexSequence = std::vector<Complex>;

// Binary timing waveform, one entry per sample.
using TimingSignal = std::vector<std::uint8_t>;

enum class ModulationScheme : std::uint8_t {
  kOok,
  kAsk4,
  kAsk8,
  kBpsk,
  kQpsk,
  kPsk8,
  kPsk16,
  kPsk32,
  kApsk16,
  kApsk32,
  kApsk64,
  kApsk128,
  kQam16,
  kQam32,
  kQam64,
  kQam128,
  kQam256,
  kGmsk,
  kCpfsk,
};

enum class ModulationKind { kLinear, kContinuousPhase };

inline constexpr std::size_t kSchemeCount = 19;

std::string_view scheme_name(ModulationScheme scheme);
ModulationScheme parse_scheme(std::string_view name);
ModulationKind scheme_kind(ModulationScheme scheme);
bool is_linear(ModulationScheme scheme);
// Constellation size for linear schemes, 2 for the binary continuous-phase ones.
int scheme_order(ModulationScheme scheme);
const std::vector<ModulationScheme>& all_schemes();

// Unit-mean-energy constellation, indexed by symbol label. Throws
// kUnsupportedScheme for continuous-phase schemes.
const std::vector<Complex>& constellation(ModulationScheme scheme);

// Rotations under which the constellation maps onto itself (phase ambiguity).
std::vector<double> ambiguity_rotations(ModulationScheme scheme);

// Ground-truth generation parameters of one sample.
struct SignalParams {
  ModulationScheme scheme = ModulationScheme::kBpsk;
  std::size_t n_symbols = 0;      // symbols visible inside the window
  double sps = 8.0;               // samples per symbol
  double rolloff = 0.35;
  double t0 = 0.0;                // sampling phase offset, in symbol periods
  double f0 = 0.0;                // carrier frequency offset, cycles/sample
  double phi0 = 0.0;              // phase offset, radians
  std::array<Complex, 3> channel_taps{Complex{1.0, 0.0}, Complex{}, Complex{}};
  double delay_spread = 0.0;      // samples
  double snr_db = 0.0;
  bool noiseless = false;
};

inline constexpr std::size_t kParamsBlockSize = 15;
// Flattened params in declared field order (scheme as its enum index,
// taps as re/im pairs). Used by the dataset file format.
std::array<double, kParamsBlockSize> params_block(const SignalParams& p);
SignalParams params_from_block(std::span<const double, kParamsBlockSize> block);

// One training record: input y and the five reference outputs.
struct LabeledSample {
  ComplexSequence y;
  ComplexSequence z1;  // noise removed
  ComplexSequence z2;  // frequency corrected
  ComplexSequence z3;  // recovered (channel-free, matched-filtered) signal
  TimingSignal z4;
  std::vector<double> z5;
  std::size_t class_index = 0;
  SignalParams params;
  // Symbols whose sampling instants fall inside the window, in order of the
  // transitions of z4. Continuous-phase samples carry bits (as +/-1) instead.
  ComplexSequence symbols;
  std::vector<int> symbol_labels;
  std::vector<std::uint8_t> bits;
};

// Estimated receiver parameters: the reusable product of one inference.
struct RxParams {
  static constexpr std::size_t kNoiseTaps = 64;
  static constexpr std::size_t kEqmfTaps = 65;

  ComplexSequence noise_taps;
  double f0_hat = 0.0;
  ComplexSequence eqmf_taps;
  TimingSignal timing;
  std::vector<double> class_scores;

  // Throws kDimension / kInvalidArgument when an invariant does not hold.
  void validate() const;
  // Delta filters, zero offset: the signal path becomes the identity.
  static RxParams identity(std::size_t n_samples, std::size_t n_classes);
};

struct FlopReport {
  std::uint64_t complex_ops = 0;
  std::uint64_t real_flops = 0;
  std::uint64_t nn_flops = 0;

  FlopReport& operator+=(const FlopReport& other);
};

struct DemodReport {
  ModulationScheme predicted_scheme = ModulationScheme::kBpsk;
  std::vector<int> decoded_symbols;
  std::optional<double> ser;
  std::size_t symbol_errors = 0;
  std::size_t symbols_scored = 0;
  RxParams rx_params;
  FlopReport flops;
  // Stage outputs of the linear path.
  ComplexSequence z1_hat;
  ComplexSequence z2_hat;
  ComplexSequence z3_hat;
};

bool all_finite(std::span<const Complex> x);
// Throws kEmptyInput or kInvalidArgument when the sequence breaks its invariant.
void validate_sequence(std::span<const Complex> x);

// Row-major 2xN real array: I row followed by Q row.
std::vector<double> to_planar(std::span<const Complex> x);
ComplexSequence from_planar(std::span<const double> planar);

double energy(std::span<const Complex> x);

// Fractional sample index at which symbol m peaks. The one-sample lead makes
// the i / i+1 transition test of sample_at_transitions pick the sample
// nearest to each peak.
double symbol_position(long m, double sps, double t0);

// Toggles at round(t0*sps + m*sps), m = 0, 1, ...; starts at 0. A toggle at
// index 0 is absorbed by the start value.
TimingSignal timing_signal(std::size_t n_samples, double sps, double t0);

// Indices i with z4[i] != z4[i+1].
std::vector<std::size_t> transition_indices(std::span<const std::uint8_t> z4);

std::vector<double> one_hot(ModulationScheme scheme, std::span<const ModulationScheme> universe);
std::size_t class_index(ModulationScheme scheme, std::span<const ModulationScheme> universe);

// Keeps x[i] where the timing signal changes between i and i+1, zero elsewhere.
ComplexSequence sample_at_transitions(std::span<const Complex> x, std::span<const std::uint8_t> z4);

std::size_t n_received(std::size_t n_symbols, double sps);

}  // namespace dualpath
