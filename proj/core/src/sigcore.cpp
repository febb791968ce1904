#include "dualpath/sigcore.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dualpath/errors.hpp"

namespace dualpath {
namespace {

constexpr double kPi = std::numbers::pi;

struct SchemeInfo {
  ModulationScheme scheme;
  std::string_view name;
  ModulationKind kind;
  int order;
};

constexpr std::array<SchemeInfo, kSchemeCount> kSchemes{{
    {ModulationScheme::kOok, "OOK", ModulationKind::kLinear, 2},
    {ModulationScheme::kAsk4, "ASK4", ModulationKind::kLinear, 4},
    {ModulationScheme::kAsk8, "ASK8", ModulationKind::kLinear, 8},
    {ModulationScheme::kBpsk, "BPSK", ModulationKind::kLinear, 2},
    {ModulationScheme::kQpsk, "QPSK", ModulationKind::kLinear, 4},
    {ModulationScheme::kPsk8, "PSK8", ModulationKind::kLinear, 8},
    {ModulationScheme::kPsk16, "PSK16", ModulationKind::kLinear, 16},
    {ModulationScheme::kPsk32, "PSK32", ModulationKind::kLinear, 32},
    {ModulationScheme::kApsk16, "APSK16", ModulationKind::kLinear, 16},
    {ModulationScheme::kApsk32, "APSK32", ModulationKind::kLinear, 32},
    {ModulationScheme::kApsk64, "APSK64", ModulationKind::kLinear, 64},
    {ModulationScheme::kApsk128, "APSK128", ModulationKind::kLinear, 128},
    {ModulationScheme::kQam16, "QAM16", ModulationKind::kLinear, 16},
    {ModulationScheme::kQam32, "QAM32", ModulationKind::kLinear, 32},
    {ModulationScheme::kQam64, "QAM64", ModulationKind::kLinear, 64},
    {ModulationScheme::kQam128, "QAM128", ModulationKind::kLinear, 128},
    {ModulationScheme::kQam256, "QAM256", ModulationKind::kLinear, 256},
    {ModulationScheme::kGmsk, "GMSK", ModulationKind::kContinuousPhase, 2},
    {ModulationScheme::kCpfsk, "CPFSK", ModulationKind::kContinuousPhase, 2},
}};

const SchemeInfo& info(ModulationScheme scheme) {
  const auto index = static_cast<std::size_t>(scheme);
  if (index >= kSchemes.size()) fail(ErrorKind::kInvalidArgument, "invalid modulation scheme");
  return kSchemes[index];
}

unsigned gray(unsigned v) { return v ^ (v >> 1); }

void normalize_energy(std::vector<Complex>& points) {
  double mean = 0.0;
  for (const auto& p : points) mean += std::norm(p);
  mean /= static_cast<double>(points.size());
  const double scale = 1.0 / std::sqrt(mean);
  for (auto& p : points) p *= scale;
}

std::vector<Complex> make_pam(int order) {
  std::vector<Complex> points(order);
  for (int pos = 0; pos < order; ++pos) {
    points[gray(pos)] = Complex(2.0 * pos - (order - 1), 0.0);
  }
  return points;
}

std::vector<Complex> make_psk(int order) {
  std::vector<Complex> points(order);
  // QPSK sits on the diagonals; the other orders start on the real axis.
  const double offset = order == 4 ? kPi / 4.0 : 0.0;
  for (int pos = 0; pos < order; ++pos) {
    points[gray(pos)] = std::polar(1.0, offset + 2.0 * kPi * pos / order);
  }
  return points;
}

std::vector<Complex> make_square_qam(int order) {
  const int side = static_cast<int>(std::lround(std::sqrt(order)));
  const int bits = static_cast<int>(std::lround(std::log2(side)));
  std::vector<Complex> points(order);
  for (int pi = 0; pi < side; ++pi) {
    for (int pq = 0; pq < side; ++pq) {
      const unsigned label = (gray(pi) << bits) | gray(pq);
      points[label] = Complex(2.0 * pi - (side - 1), 2.0 * pq - (side - 1));
    }
  }
  return points;
}

// Cross constellations: a square grid with the corner blocks removed.
std::vector<Complex> make_cross_qam(int order) {
  const int side = order == 32 ? 6 : 12;
  const int corner = order == 32 ? 1 : 2;
  std::vector<Complex> points;
  points.reserve(order);
  for (int i = 0; i < side; ++i) {
    for (int q = 0; q < side; ++q) {
      const bool in_i_edge = i < corner || i >= side - corner;
      const bool in_q_edge = q < corner || q >= side - corner;
      if (in_i_edge && in_q_edge) continue;
      points.emplace_back(2.0 * i - (side - 1), 2.0 * q - (side - 1));
    }
  }
  return points;
}

std::vector<Complex> make_apsk(std::span<const int> ring_sizes, std::span<const double> radii,
                               std::span<const double> offsets) {
  std::vector<Complex> points;
  for (std::size_t r = 0; r < ring_sizes.size(); ++r) {
    for (int n = 0; n < ring_sizes[r]; ++n) {
      points.push_back(std::polar(radii[r], offsets[r] + 2.0 * kPi * n / ring_sizes[r]));
    }
  }
  return points;
}

std::vector<Complex> make_ring_apsk(int order) {
  const int rings = order / 16;
  std::vector<int> sizes(rings, 16);
  std::vector<double> radii(rings), offsets(rings);
  for (int r = 0; r < rings; ++r) {
    radii[r] = r + 1.0;
    offsets[r] = (r % 2 == 0) ? 0.0 : kPi / 16.0;
  }
  return make_apsk(sizes, radii, offsets);
}

std::vector<Complex> build_constellation(ModulationScheme scheme) {
  std::vector<Complex> points;
  switch (scheme) {
    case ModulationScheme::kOok: points = {Complex(0.0, 0.0), Complex(1.0, 0.0)}; break;
    case ModulationScheme::kAsk4: points = make_pam(4); break;
    case ModulationScheme::kAsk8: points = make_pam(8); break;
    case ModulationScheme::kBpsk: points = {Complex(1.0, 0.0), Complex(-1.0, 0.0)}; break;
    case ModulationScheme::kQpsk: points = make_psk(4); break;
    case ModulationScheme::kPsk8: points = make_psk(8); break;
    case ModulationScheme::kPsk16: points = make_psk(16); break;
    case ModulationScheme::kPsk32: points = make_psk(32); break;
    case ModulationScheme::kApsk16: {
      // DVB-S2 style 4+12 rings.
      const std::array<int, 2> sizes{4, 12};
      const std::array<double, 2> radii{1.0, 2.7};
      const std::array<double, 2> offsets{kPi / 4.0, kPi / 12.0};
      points = make_apsk(sizes, radii, offsets);
      break;
    }
    case ModulationScheme::kApsk32: {
      // DVB-S2 style 4+12+16 rings.
      const std::array<int, 3> sizes{4, 12, 16};
      const std::array<double, 3> radii{1.0, 2.84, 5.27};
      const std::array<double, 3> offsets{kPi / 4.0, kPi / 12.0, 0.0};
      points = make_apsk(sizes, radii, offsets);
      break;
    }
    case ModulationScheme::kApsk64: points = make_ring_apsk(64); break;
    case ModulationScheme::kApsk128: points = make_ring_apsk(128); break;
    case ModulationScheme::kQam16: points = make_square_qam(16); break;
    case ModulationScheme::kQam32: points = make_cross_qam(32); break;
    case ModulationScheme::kQam64: points = make_square_qam(64); break;
    case ModulationScheme::kQam128: points = make_cross_qam(128); break;
    case ModulationScheme::kQam256: points = make_square_qam(256); break;
    case ModulationScheme::kGmsk:
    case ModulationScheme::kCpfsk:
      fail(ErrorKind::kUnsupportedScheme,
           std::string(scheme_name(scheme)) + " is continuous-phase and has no constellation");
  }
  normalize_energy(points);
  return points;
}

}  // namespace

std::string_view scheme_name(ModulationScheme scheme) { return info(scheme).name; }

ModulationScheme parse_scheme(std::string_view name) {
  for (const auto& s : kSchemes) {
    if (s.name == name) return s.scheme;
  }
  // Common aliases.
  if (name == "PSK4") return ModulationScheme::kQpsk;
  if (name == "PSK2") return ModulationScheme::kBpsk;
  fail(ErrorKind::kUnknownClass, "unknown modulation scheme '" + std::string(name) + "'");
}

ModulationKind scheme_kind(ModulationScheme scheme) { return info(scheme).kind; }

bool is_linear(ModulationScheme scheme) { return scheme_kind(scheme) == ModulationKind::kLinear; }

int scheme_order(ModulationScheme scheme) { return info(scheme).order; }

const std::vector<ModulationScheme>& all_schemes() {
  static const std::vector<ModulationScheme> schemes = [] {
    std::vector<ModulationScheme> out;
    for (const auto& s : kSchemes) out.push_back(s.scheme);
    return out;
  }();
  return schemes;
}

const std::vector<Complex>& constellation(ModulationScheme scheme) {
  if (!is_linear(scheme)) {
    fail(ErrorKind::kUnsupportedScheme,
         std::string(scheme_name(scheme)) + " is continuous-phase and has no constellation");
  }
  static const auto tables = [] {
    std::array<std::vector<Complex>, kSchemeCount> out;
    for (const auto& s : kSchemes) {
      if (s.kind == ModulationKind::kLinear) out[static_cast<std::size_t>(s.scheme)] = build_constellation(s.scheme);
    }
    return out;
  }();
  return tables[static_cast<std::size_t>(scheme)];
}

std::vector<double> ambiguity_rotations(ModulationScheme scheme) {
  int fold = 1;
  switch (scheme) {
    case ModulationScheme::kOok: fold = 1; break;
    case ModulationScheme::kAsk4:
    case ModulationScheme::kAsk8:
    case ModulationScheme::kBpsk: fold = 2; break;
    case ModulationScheme::kQpsk: fold = 4; break;
    case ModulationScheme::kPsk8: fold = 8; break;
    case ModulationScheme::kPsk16: fold = 16; break;
    case ModulationScheme::kPsk32: fold = 32; break;
    case ModulationScheme::kApsk16:
    case ModulationScheme::kApsk32:
    case ModulationScheme::kQam16:
    case ModulationScheme::kQam32:
    case ModulationScheme::kQam64:
    case ModulationScheme::kQam128:
    case ModulationScheme::kQam256: fold = 4; break;
    case ModulationScheme::kApsk64:
    case ModulationScheme::kApsk128: fold = 16; break;
    case ModulationScheme::kGmsk:
    case ModulationScheme::kCpfsk:
      fail(ErrorKind::kUnsupportedScheme, "continuous-phase schemes have no ambiguity group");
  }
  std::vector<double> out(fold);
  for (int i = 0; i < fold; ++i) out[i] = 2.0 * kPi * i / fold;
  return out;
}

std::array<double, kParamsBlockSize> params_block(const SignalParams& p) {
  return {static_cast<double>(p.scheme),
          static_cast<double>(p.n_symbols),
          p.sps,
          p.rolloff,
          p.t0,
          p.f0,
          p.phi0,
          p.channel_taps[0].real(),
          p.channel_taps[0].imag(),
          p.channel_taps[1].real(),
          p.channel_taps[1].imag(),
          p.channel_taps[2].real(),
          p.channel_taps[2].imag(),
          p.delay_spread,
          p.snr_db};
}

SignalParams params_from_block(std::span<const double, kParamsBlockSize> b) {
  SignalParams p;
  const auto scheme_index = static_cast<std::size_t>(b[0]);
  if (scheme_index >= kSchemeCount) fail(ErrorKind::kIo, "corrupt params block: scheme index");
  p.scheme = static_cast<ModulationScheme>(scheme_index);
  p.n_symbols = static_cast<std::size_t>(b[1]);
  p.sps = b[2];
  p.rolloff = b[3];
  p.t0 = b[4];
  p.f0 = b[5];
  p.phi0 = b[6];
  p.channel_taps = {Complex(b[7], b[8]), Complex(b[9], b[10]), Complex(b[11], b[12])};
  p.delay_spread = b[13];
  p.snr_db = b[14];
  p.noiseless = std::isinf(p.snr_db);
  return p;
}

void RxParams::validate() const {
  if (noise_taps.size() != kNoiseTaps) fail(ErrorKind::kDimension, "RxParams needs 64 noise taps");
  if (eqmf_taps.size() != kEqmfTaps) fail(ErrorKind::kDimension, "RxParams needs 65 Eq+MF taps");
  if (!std::isfinite(f0_hat)) fail(ErrorKind::kInvalidArgument, "RxParams f0_hat is not finite");
  if (!all_finite(noise_taps) || !all_finite(eqmf_taps)) {
    fail(ErrorKind::kInvalidArgument, "RxParams taps are not finite");
  }
  double total = 0.0;
  for (double s : class_scores) {
    if (!(s >= 0.0)) fail(ErrorKind::kInvalidArgument, "RxParams class scores must be non-negative");
    total += s;
  }
  if (!class_scores.empty() && std::abs(total - 1.0) > 1e-6) {
    fail(ErrorKind::kInvalidArgument, "RxParams class scores must sum to 1");
  }
}

RxParams RxParams::identity(std::size_t n_samples, std::size_t n_classes) {
  RxParams p;
  p.noise_taps.assign(kNoiseTaps, Complex{});
  p.noise_taps[kNoiseTaps / 2] = 1.0;
  p.eqmf_taps.assign(kEqmfTaps, Complex{});
  p.eqmf_taps[kEqmfTaps / 2] = 1.0;
  p.timing.assign(n_samples, 0);
  if (n_classes > 0) p.class_scores.assign(n_classes, 1.0 / static_cast<double>(n_classes));
  return p;
}

FlopReport& FlopReport::operator+=(const FlopReport& other) {
  complex_ops += other.complex_ops;
  real_flops += other.real_flops;
  nn_flops += other.nn_flops;
  return *this;
}

bool all_finite(std::span<const Complex> x) {
  return std::all_of(x.begin(), x.end(),
                     [](const Complex& c) { return std::isfinite(c.real()) && std::isfinite(c.imag()); });
}

void validate_sequence(std::span<const Complex> x) {
  if (x.empty()) fail(ErrorKind::kEmptyInput, "sequence is empty");
  if (!all_finite(x)) fail(ErrorKind::kInvalidArgument, "sequence contains NaN or Inf");
}

std::vector<double> to_planar(std::span<const Complex> x) {
  const std::size_t n = x.size();
  std::vector<double> out(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = x[i].real();
    out[n + i] = x[i].imag();
  }
  return out;
}

ComplexSequence from_planar(std::span<const double> planar) {
  if (planar.size() % 2 != 0) fail(ErrorKind::kDimension, "planar array must have two rows");
  const std::size_t n = planar.size() / 2;
  ComplexSequence out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = Complex(planar[i], planar[n + i]);
  return out;
}

double energy(std::span<const Complex> x) {
  double e = 0.0;
  for (const auto& c : x) e += std::norm(c);
  return e;
}

double symbol_position(long m, double sps, double t0) {
  return (t0 + static_cast<double>(m)) * sps - 1.0;
}

TimingSignal timing_signal(std::size_t n_samples, double sps, double t0) {
  if (n_samples == 0) fail(ErrorKind::kEmptyInput, "timing signal of zero length");
  if (!(sps >= 1.0)) fail(ErrorKind::kInvalidArgument, "samples per symbol must be >= 1");
  if (!(t0 >= 0.0 && t0 <= 0.5)) fail(ErrorKind::kInvalidArgument, "t0 must lie in [0, 0.5]");

  std::vector<std::uint8_t> toggles(n_samples, 0);
  for (long m = 0;; ++m) {
    const double instant = t0 * sps + static_cast<double>(m) * sps;
    const auto index = static_cast<long>(std::floor(instant + 0.5));
    if (index >= static_cast<long>(n_samples)) break;
    toggles[static_cast<std::size_t>(index)] = 1;
  }
  TimingSignal z4(n_samples, 0);
  for (std::size_t i = 1; i < n_samples; ++i) z4[i] = z4[i - 1] ^ toggles[i];
  return z4;
}

std::vector<std::size_t> transition_indices(std::span<const std::uint8_t> z4) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i + 1 < z4.size(); ++i) {
    if (z4[i] != z4[i + 1]) out.push_back(i);
  }
  return out;
}

std::size_t class_index(ModulationScheme scheme, std::span<const ModulationScheme> universe) {
  const auto it = std::find(universe.begin(), universe.end(), scheme);
  if (it == universe.end()) {
    fail(ErrorKind::kUnknownClass, std::string(scheme_name(scheme)) + " is not in the class universe");
  }
  return static_cast<std::size_t>(it - universe.begin());
}

std::vector<double> one_hot(ModulationScheme scheme, std::span<const ModulationScheme> universe) {
  std::vector<double> out(universe.size(), 0.0);
  out[class_index(scheme, universe)] = 1.0;
  return out;
}

ComplexSequence sample_at_transitions(std::span<const Complex> x, std::span<const std::uint8_t> z4) {
  if (x.size() != z4.size()) fail(ErrorKind::kDimension, "signal and timing vector lengths differ");
  ComplexSequence out(x.size(), Complex{});
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    if (z4[i] != z4[i + 1]) out[i] = x[i];
  }
  return out;
}

std::size_t n_received(std::size_t n_symbols, double sps) {
  if (n_symbols == 0) fail(ErrorKind::kEmptyInput, "need at least one symbol");
  if (!(sps >= 1.0)) fail(ErrorKind::kInvalidArgument, "samples per symbol must be >= 1");
  return n_symbols * static_cast<std::size_t>(std::ceil(sps));
}

}  // namespace dualpath
