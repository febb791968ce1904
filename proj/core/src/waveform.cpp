#include "dualpath/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <nlohmann/json.hpp>

#include "dualpath/errors.hpp"
#include "dualpath/sigpath.hpp"

namespace dualpath::waveform {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kSpan = 8;          // RRC span, symbols
constexpr double kRcReach = 8.0;  // raised-cosine tails kept in z3, symbols

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double std_normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(kTwoPi); }

// Integral of the Gaussian-filtered rectangular frequency pulse (area 1/2),
// v in symbols relative to the pulse center.
double gmsk_phase_pulse(double v) {
  const double c = kTwoPi * kGmskBt / std::sqrt(std::log(2.0));
  const auto antiderivative = [c](double s) { return s * std_normal_cdf(c * s) + std_normal_pdf(c * s) / c; };
  return 0.5 * (antiderivative(v + 0.5) - antiderivative(v - 0.5));
}

// Phase pulse q(u), u in symbols from the start of the bit; rises 0 -> 1/2.
// `settle` is the u beyond which q is 1/2 to double precision.
struct PhasePulse {
  ModulationScheme scheme;
  double settle;
  double lead;  // q is zero for u < -lead

  double operator()(double u) const {
    if (scheme == ModulationScheme::kCpfsk) return 0.5 * std::clamp(u, 0.0, 1.0);
    return gmsk_phase_pulse(u - 0.5);
  }
};

PhasePulse phase_pulse(ModulationScheme scheme) {
  if (scheme == ModulationScheme::kCpfsk) return {scheme, 1.0, 0.0};
  if (scheme == ModulationScheme::kGmsk) return {scheme, 4.0, 3.0};
  fail(ErrorKind::kUnsupportedScheme, std::string(scheme_name(scheme)) + " is not a continuous-phase scheme");
}

double rayleigh(double mean, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  const double scale = mean / std::sqrt(kPi / 2.0);
  const double a = n(rng);
  const double b = n(rng);
  return scale * std::sqrt(a * a + b * b);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  auto mix = [](std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  };
  return mix(mix(base) ^ index);
}

double Interval::draw(Rng& rng) const {
  if (lo == hi) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

void DatasetSpec::validate() const {
  if (universe.empty()) fail(ErrorKind::kEmptyInput, "dataset universe is empty");
  for (const Interval* r : {&f0_range, &snr_range_db, &sps_range, &t0_range, &phi0_range, &delay_spread_range}) {
    if (!r->valid()) fail(ErrorKind::kInvalidArgument, "dataset range is empty");
  }
  if (rolloff_set.empty()) fail(ErrorKind::kEmptyInput, "rolloff set is empty");
  for (double b : rolloff_set) {
    if (!(b >= 0.0 && b <= 1.0)) fail(ErrorKind::kInvalidArgument, "rolloff must lie in [0, 1]");
  }
  if (sps_range.lo < 1.0) fail(ErrorKind::kInvalidArgument, "samples per symbol must be >= 1");
  if (t0_range.lo < 0.0 || t0_range.hi > 0.5) fail(ErrorKind::kInvalidArgument, "t0 must lie in [0, 0.5]");
  if (multipath && delay_spread_range.lo < 0.0) fail(ErrorKind::kInvalidArgument, "delay spread must be >= 0");
  if (n_r == 0) fail(ErrorKind::kInvalidArgument, "window length must be positive");
}

DatasetSpec dataset1() {
  DatasetSpec s;
  using M = ModulationScheme;
  s.universe = {M::kBpsk, M::kQpsk, M::kPsk8, M::kQam16, M::kQam64, M::kGmsk, M::kCpfsk, M::kAsk4};
  s.f0_range = {0.0, 0.0025};
  s.snr_range_db = {-20.0, 20.0};
  s.sps_range = {7.0, 9.0};
  return s;
}

DatasetSpec dataset2() {
  DatasetSpec s;
  s.universe = all_schemes();
  s.f0_range = {0.0, 0.005};
  s.snr_range_db = {-10.0, 40.0};
  s.sps_range = {3.0, 16.0};
  return s;
}

namespace {

nlohmann::json interval_json(const Interval& r) { return nlohmann::json::array({r.lo, r.hi}); }

Interval interval_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) fail(ErrorKind::kInvalidArgument, "interval must be [lo, hi]");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

void to_json(nlohmann::json& j, const DatasetSpec& spec) {
  std::vector<std::string> names;
  for (auto s : spec.universe) names.emplace_back(scheme_name(s));
  j = nlohmann::json{
      {"universe", names},
      {"f0_range", interval_json(spec.f0_range)},
      {"snr_range_db", interval_json(spec.snr_range_db)},
      {"sps_range", interval_json(spec.sps_range)},
      {"rolloff_set", spec.rolloff_set},
      {"t0_range", interval_json(spec.t0_range)},
      {"phi0_range", interval_json(spec.phi0_range)},
      {"delay_spread_range", interval_json(spec.delay_spread_range)},
      {"nlos_mean_mags", spec.nlos_mean_mags},
      {"multipath", spec.multipath},
      {"noiseless", spec.noiseless},
      {"n_r", spec.n_r},
      {"seed", spec.seed},
  };
}

void from_json(const nlohmann::json& j, DatasetSpec& spec) {
  // Missing keys keep the Dataset 2 defaults; "base": "dataset1" starts from
  // the smaller definition instead.
  spec = j.value("base", std::string("dataset2")) == "dataset1" ? dataset1() : dataset2();
  try {
    if (j.contains("universe")) {
      spec.universe.clear();
      for (const auto& n : j.at("universe")) spec.universe.push_back(parse_scheme(n.get<std::string>()));
    }
    if (j.contains("f0_range")) spec.f0_range = interval_from(j.at("f0_range"));
    if (j.contains("snr_range_db")) spec.snr_range_db = interval_from(j.at("snr_range_db"));
    if (j.contains("sps_range")) spec.sps_range = interval_from(j.at("sps_range"));
    if (j.contains("rolloff_set")) spec.rolloff_set = j.at("rolloff_set").get<std::vector<double>>();
    if (j.contains("t0_range")) spec.t0_range = interval_from(j.at("t0_range"));
    if (j.contains("phi0_range")) spec.phi0_range = interval_from(j.at("phi0_range"));
    if (j.contains("delay_spread_range")) spec.delay_spread_range = interval_from(j.at("delay_spread_range"));
    if (j.contains("nlos_mean_mags")) spec.nlos_mean_mags = j.at("nlos_mean_mags").get<std::array<double, 2>>();
    spec.multipath = j.value("multipath", spec.multipath);
    spec.noiseless = j.value("noiseless", spec.noiseless);
    spec.n_r = j.value("n_r", spec.n_r);
    spec.seed = j.value("seed", spec.seed);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kInvalidArgument, std::string("bad dataset spec: ") + e.what());
  }
  spec.validate();
}

ComplexSequence modulate_linear(std::span<const Complex> symbols, const RrcFilter& filter, double sps,
                                double t0, std::size_t n_out, long first_index, double start_sample) {
  if (symbols.empty()) fail(ErrorKind::kEmptyInput, "no symbols to modulate");
  if (!(sps >= 1.0)) fail(ErrorKind::kInvalidArgument, "samples per symbol must be >= 1");
  if (n_out == 0) n_out = n_received(symbols.size(), sps);

  ComplexSequence out(n_out, Complex{});
  const double reach = filter.span_symbols() / 2.0 * sps;
  for (std::size_t j = 0; j < symbols.size(); ++j) {
    const double center = symbol_position(first_index + static_cast<long>(j), sps, t0) - start_sample;
    const auto lo = std::max(0L, static_cast<long>(std::ceil(center - reach)));
    const auto hi = std::min(static_cast<long>(n_out) - 1, static_cast<long>(std::floor(center + reach)));
    for (long k = lo; k <= hi; ++k) {
      out[static_cast<std::size_t>(k)] += symbols[j] * filter.pulse((static_cast<double>(k) - center) / sps);
    }
  }
  return out;
}

ComplexSequence modulate_cpm(std::span<const std::uint8_t> bits, ModulationScheme scheme, double sps, double t0,
                             std::size_t n_out, long first_index, double start_sample) {
  const PhasePulse q = phase_pulse(scheme);
  if (bits.empty()) fail(ErrorKind::kEmptyInput, "no bits to modulate");
  if (!(sps >= 1.0)) fail(ErrorKind::kInvalidArgument, "samples per symbol must be >= 1");
  if (n_out == 0) n_out = n_received(bits.size(), sps);

  const double gain = kTwoPi * kCpmIndex;
  std::vector<double> phase(n_out, 0.0);
  std::vector<double> settled(n_out + 1, 0.0);  // difference array of finished bits
  for (std::size_t j = 0; j < bits.size(); ++j) {
    const double a = bits[j] ? 1.0 : -1.0;
    const double start = symbol_position(first_index + static_cast<long>(j), sps, t0) - start_sample;
    const double lo_t = start - q.lead * sps;
    const double hi_t = start + q.settle * sps;
    const auto lo = std::max(0L, static_cast<long>(std::ceil(lo_t)));
    const auto hi = static_cast<long>(std::floor(hi_t));
    for (long k = lo; k <= std::min(hi, static_cast<long>(n_out) - 1); ++k) {
      phase[static_cast<std::size_t>(k)] += gain * a * q((static_cast<double>(k) - start) / sps);
    }
    const long from = std::max(0L, hi + 1);
    if (from < static_cast<long>(n_out)) settled[static_cast<std::size_t>(from)] += gain * a * 0.5;
  }
  ComplexSequence out(n_out);
  double acc = 0.0;
  for (std::size_t k = 0; k < n_out; ++k) {
    acc += settled[k];
    out[k] = std::polar(1.0, phase[k] + acc);
  }
  return out;
}

std::array<double, 3> channel_delays(double delay_spread) { return {0.0, delay_spread / 2.0, delay_spread}; }

ComplexSequence apply_channel(std::span<const Complex> x, std::span<const Complex> taps, double delay_spread) {
  if (taps.size() != 3) fail(ErrorKind::kDimension, "channel has exactly 3 taps");
  if (!(delay_spread >= 0.0)) fail(ErrorKind::kInvalidArgument, "delay spread must be >= 0");
  const auto delays = channel_delays(delay_spread);
  const auto n = static_cast<long>(x.size());
  ComplexSequence out(x.size(), Complex{});
  for (std::size_t i = 0; i < 3; ++i) {
    if (taps[i] == Complex{}) continue;
    const auto whole = static_cast<long>(std::floor(delays[i]));
    const double frac = delays[i] - static_cast<double>(whole);
    // out[k] += h (1 - frac) x[k - whole] + h frac x[k - whole - 1]
    const Complex w0 = taps[i] * (1.0 - frac);
    const Complex w1 = taps[i] * frac;
    for (long k = whole; k < n; ++k) {
      out[static_cast<std::size_t>(k)] += w0 * x[static_cast<std::size_t>(k - whole)];
      if (k - whole - 1 >= 0) out[static_cast<std::size_t>(k)] += w1 * x[static_cast<std::size_t>(k - whole - 1)];
    }
  }
  return out;
}

ComplexSequence apply_cfo_phase(std::span<const Complex> x, double f0, double phi0) {
  ComplexSequence out(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    out[k] = x[k] * std::polar(1.0, kTwoPi * f0 * static_cast<double>(k) + phi0);
  }
  return out;
}

ComplexSequence add_awgn(std::span<const Complex> x, double snr_db, Rng& rng) {
  if (std::isinf(snr_db) && snr_db > 0.0) return {x.begin(), x.end()};
  if (x.empty()) fail(ErrorKind::kEmptyInput, "no samples to add noise to");
  const double power = energy(x) / static_cast<double>(x.size());
  if (!(power > 0.0)) fail(ErrorKind::kDegenerateSnr, "signal has zero energy");
  const double sigma = std::sqrt(power / std::pow(10.0, snr_db / 10.0) / 2.0);
  std::normal_distribution<double> n(0.0, sigma);
  ComplexSequence out(x.begin(), x.end());
  for (auto& v : out) {
    const double re = n(rng);
    const double im = n(rng);
    v += Complex(re, im);
  }
  return out;
}

LabeledSample generate_sample(const DatasetSpec& spec, Rng& rng) {
  spec.validate();
  SignalParams p;
  p.scheme = spec.universe[std::uniform_int_distribution<std::size_t>(0, spec.universe.size() - 1)(rng)];
  p.sps = spec.sps_range.draw(rng);
  p.rolloff = spec.rolloff_set[std::uniform_int_distribution<std::size_t>(0, spec.rolloff_set.size() - 1)(rng)];
  p.t0 = spec.t0_range.draw(rng);
  p.f0 = spec.f0_range.draw(rng);
  p.phi0 = spec.phi0_range.draw(rng);
  p.snr_db = spec.snr_range_db.draw(rng);
  p.noiseless = spec.noiseless;
  if (p.noiseless) p.snr_db = std::numeric_limits<double>::infinity();
  if (spec.multipath) {
    std::uniform_real_distribution<double> angle(0.0, kTwoPi);
    p.delay_spread = spec.delay_spread_range.draw(rng);
    p.channel_taps[0] = std::polar(1.0, angle(rng));
    p.channel_taps[1] = std::polar(rayleigh(spec.nlos_mean_mags[0], rng), angle(rng));
    p.channel_taps[2] = std::polar(rayleigh(spec.nlos_mean_mags[1], rng), angle(rng));
  }
  return synthesize(spec, p, rng);
}

LabeledSample synthesize(const DatasetSpec& spec, const SignalParams& params, Rng& rng) {
  const std::size_t n = spec.n_r;
  const double sps = params.sps;
  const double t0 = params.t0;
  if (n == 0) fail(ErrorKind::kInvalidArgument, "window length must be positive");
  if (!(sps >= 1.0)) fail(ErrorKind::kInvalidArgument, "samples per symbol must be >= 1");
  if (!(t0 >= 0.0 && t0 <= 0.5)) fail(ErrorKind::kInvalidArgument, "t0 must lie in [0, 0.5]");
  const bool linear = is_linear(params.scheme);

  // Extended synthesis window [-lead, n) so the channel sees a running stream.
  const auto lead = static_cast<long>(std::ceil(params.delay_spread)) + 2;
  const double reach = (linear ? kRcReach : 4.0) * sps + 1.0;
  const auto m_lo = static_cast<long>(std::floor((-static_cast<double>(lead) - reach) / sps - t0)) - 1;
  const auto m_hi = static_cast<long>(std::ceil((static_cast<double>(n) + reach) / sps - t0)) + 1;
  const auto count = static_cast<std::size_t>(m_hi - m_lo + 1);
  const std::size_t n_ext = n + static_cast<std::size_t>(lead);

  LabeledSample out;
  out.params = params;
  out.z4 = timing_signal(n, sps, t0);

  // Symbols m with toggle index in [1, n-1] own a transition of z4.
  std::vector<long> visible;
  for (long m = 0;; ++m) {
    const auto toggle = static_cast<long>(std::floor(t0 * sps + static_cast<double>(m) * sps + 0.5));
    if (toggle >= static_cast<long>(n)) break;
    if (toggle >= 1) visible.push_back(m);
  }
  out.params.n_symbols = visible.size();

  ComplexSequence x_ext;
  if (linear) {
    const auto& table = constellation(params.scheme);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(table.size()) - 1);
    std::vector<int> labels(count);
    ComplexSequence symbols(count);
    for (std::size_t j = 0; j < count; ++j) {
      labels[j] = pick(rng);
      symbols[j] = table[static_cast<std::size_t>(labels[j])];
    }
    const RrcFilter filter(params.rolloff, sps, kSpan);
    x_ext = modulate_linear(symbols, filter, sps, t0, n_ext, m_lo, -static_cast<double>(lead));

    out.z3.assign(n, Complex{});
    for (std::size_t j = 0; j < count; ++j) {
      const double center = symbol_position(m_lo + static_cast<long>(j), sps, t0);
      const auto lo = std::max(0L, static_cast<long>(std::ceil(center - kRcReach * sps)));
      const auto hi = std::min(static_cast<long>(n) - 1, static_cast<long>(std::floor(center + kRcReach * sps)));
      for (long k = lo; k <= hi; ++k) {
        out.z3[static_cast<std::size_t>(k)] +=
            symbols[j] * raised_cosine((static_cast<double>(k) - center) / sps, params.rolloff);
      }
    }
    for (long m : visible) {
      const auto j = static_cast<std::size_t>(m - m_lo);
      out.symbols.push_back(symbols[j]);
      out.symbol_labels.push_back(labels[j]);
    }
  } else {
    std::bernoulli_distribution coin(0.5);
    std::vector<std::uint8_t> bits(count);
    for (auto& b : bits) b = coin(rng) ? 1 : 0;
    x_ext = modulate_cpm(bits, params.scheme, sps, t0, n_ext, m_lo, -static_cast<double>(lead));
    out.z3.assign(x_ext.begin() + lead, x_ext.end());
    for (long m : visible) {
      const auto b = bits[static_cast<std::size_t>(m - m_lo)];
      out.bits.push_back(b);
      out.symbol_labels.push_back(b);
      out.symbols.emplace_back(b ? 1.0 : -1.0, 0.0);
    }
  }

  const ComplexSequence channel_out = apply_channel(x_ext, params.channel_taps, params.delay_spread);
  const std::span<const Complex> cropped(channel_out.data() + lead, n);
  out.z1 = apply_cfo_phase(cropped, params.f0, params.phi0);
  out.z2 = sigpath::correct_cfo(out.z1, params.f0);
  out.y = params.noiseless ? out.z1 : add_awgn(out.z1, params.snr_db, rng);

  out.class_index = class_index(params.scheme, spec.universe);
  out.z5 = one_hot(params.scheme, spec.universe);
  return out;
}

EpochStream::EpochStream(DatasetSpec spec, std::size_t n, std::uint64_t seed)
    : spec_(std::move(spec)), n_(n), seed_(seed) {
  if (n == 0) fail(ErrorKind::kInvalidArgument, "epoch needs at least one sample");
  spec_.validate();
}

LabeledSample EpochStream::at(std::size_t index) const {
  if (index >= n_) fail(ErrorKind::kInvalidArgument, "sample index past the end of the epoch");
  Rng rng(derive_seed(seed_, index));
  return generate_sample(spec_, rng);
}

std::optional<LabeledSample> EpochStream::next() {
  if (cursor_ >= n_) return std::nullopt;
  return at(cursor_++);
}

EpochStream stream_epoch(const DatasetSpec& spec, std::size_t n, std::uint64_t seed) {
  return EpochStream(spec, n, seed);
}

}  // namespace dualpath::waveform
