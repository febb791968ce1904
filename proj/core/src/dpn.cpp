#include "dualpath/dpn.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include <nlohmann/json.hpp>

#include "dualpath/errors.hpp"
#include "dualpath/nn/lstm.hpp"
#include "dualpath/nn/ops.hpp"

namespace dualpath::dpn {
namespace {

using nn::Shape;
using nn::Tape;

// Converts lag phases to frequency in units of f0_scale.
nn::Tensor lag_weights(const DpnConfig& c) {
  nn::Tensor w(Shape{c.freq_lags.size()});
  for (std::size_t i = 0; i < c.freq_lags.size(); ++i) {
    w.data[i] = 1.0 / (2.0 * std::numbers::pi * c.freq_power * static_cast<double>(c.freq_lags[i]) * c.f0_scale);
  }
  return w;
}
using nn::Tensor;
using nn::Var;

Tensor uniform(Shape shape, double limit, waveform::Rng& rng) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> u(-limit, limit);
  for (auto& v : t.data) v = u(rng);
  return t;
}

Tensor he_uniform(Shape shape, std::size_t fan_in, waveform::Rng& rng) {
  return uniform(std::move(shape), std::sqrt(6.0 / static_cast<double>(fan_in)), rng);
}

ComplexSequence delta_taps(std::size_t n) {
  ComplexSequence t(n, Complex{});
  t[n / 2] = 1.0;
  return t;
}

const char* timing_input_name(TimingInput t) { return t == TimingInput::kConstant ? "constant" : "features"; }

const char* classifier_input_name(ClassifierInput c) {
  switch (c) {
    case ClassifierInput::kY: return "y";
    case ClassifierInput::kZ1: return "z1";
    case ClassifierInput::kZ2: return "z2";
    case ClassifierInput::kZ3: return "z3";
  }
  return "z3";
}

}  // namespace

StageMask StageMask::ablation(int level) {
  if (level < 0 || level > 4) fail(ErrorKind::kInvalidArgument, "ablation level must be 0..4");
  return StageMask{level >= 1, level >= 2, level >= 3, level >= 4};
}

int StageMask::level() const {
  for (int l = 0; l <= 4; ++l) {
    if (ablation(l) == *this) return l;
  }
  return -1;
}

void DpnConfig::validate() const {
  if (feature_channels == 0 || head_units == 0 || lstm1_units == 0 || class_count == 0) {
    fail(ErrorKind::kInvalidArgument, "layer sizes must be positive");
  }
  if (kernel_size % 2 == 0) fail(ErrorKind::kInvalidArgument, "kernel size must be odd");
  if (freq_power < 1) fail(ErrorKind::kInvalidArgument, "frequency feature power must be >= 1");
  for (std::size_t l : freq_lags) {
    if (l == 0) fail(ErrorKind::kInvalidArgument, "frequency feature lags must be positive");
  }
  if (stages.timing && lstm1_units != lstm2_units) {
    fail(ErrorKind::kInvalidArgument, "the two timing LSTMs pass state, so their sizes must match");
  }
  if (!injected_snr_db.valid()) fail(ErrorKind::kInvalidArgument, "injected SNR range is empty");
  if (!(f0_scale > 0.0)) fail(ErrorKind::kInvalidArgument, "f0 scale must be positive");
  if (aux_f0_weight < 0.0) fail(ErrorKind::kInvalidArgument, "auxiliary weight must be >= 0");
}

void to_json(nlohmann::json& j, const DpnConfig& c) {
  j = nlohmann::json{
      {"stages", {{"noise", c.stages.noise}, {"cfo", c.stages.cfo}, {"eqmf", c.stages.eqmf}, {"timing", c.stages.timing}}},
      {"feature_channels", c.feature_channels},
      {"n_residual_blocks", c.n_residual_blocks},
      {"kernel_size", c.kernel_size},
      {"head_units", c.head_units},
      {"lstm1_units", c.lstm1_units},
      {"lstm2_units", c.lstm2_units},
      {"class_count", c.class_count},
      {"timing_input", timing_input_name(c.timing_input)},
      {"classifier_input", classifier_input_name(c.classifier_input)},
      {"inject_noise_before_eqmf", c.inject_noise_before_eqmf},
      {"injected_snr_db", {c.injected_snr_db.lo, c.injected_snr_db.hi}},
      {"f0_scale", c.f0_scale},
      {"freq_power", c.freq_power},
      {"freq_lags", c.freq_lags},
      {"aux_f0_weight", c.aux_f0_weight},
      {"tap_init_scale", c.tap_init_scale},
      {"init_seed", c.init_seed},
  };
}

void from_json(const nlohmann::json& j, DpnConfig& c) {
  c = DpnConfig{};
  try {
    if (j.contains("ablation")) c.stages = StageMask::ablation(j.at("ablation").get<int>());
    if (j.contains("stages")) {
      const auto& s = j.at("stages");
      c.stages.noise = s.value("noise", true);
      c.stages.cfo = s.value("cfo", true);
      c.stages.eqmf = s.value("eqmf", true);
      c.stages.timing = s.value("timing", true);
    }
    c.feature_channels = j.value("feature_channels", c.feature_channels);
    c.n_residual_blocks = j.value("n_residual_blocks", c.n_residual_blocks);
    c.kernel_size = j.value("kernel_size", c.kernel_size);
    c.head_units = j.value("head_units", c.head_units);
    c.lstm1_units = j.value("lstm1_units", c.lstm1_units);
    c.lstm2_units = j.value("lstm2_units", c.lstm2_units);
    c.class_count = j.value("class_count", c.class_count);
    const auto ti = j.value("timing_input", std::string("constant"));
    if (ti != "constant" && ti != "features") fail(ErrorKind::kInvalidArgument, "timing_input: constant|features");
    c.timing_input = ti == "constant" ? TimingInput::kConstant : TimingInput::kFeatures;
    const auto ci = j.value("classifier_input", std::string("z3"));
    if (ci == "y") c.classifier_input = ClassifierInput::kY;
    else if (ci == "z1") c.classifier_input = ClassifierInput::kZ1;
    else if (ci == "z2") c.classifier_input = ClassifierInput::kZ2;
    else if (ci == "z3") c.classifier_input = ClassifierInput::kZ3;
    else fail(ErrorKind::kInvalidArgument, "classifier_input: y|z1|z2|z3");
    c.inject_noise_before_eqmf = j.value("inject_noise_before_eqmf", c.inject_noise_before_eqmf);
    if (j.contains("injected_snr_db")) {
      const auto r = j.at("injected_snr_db").get<std::array<double, 2>>();
      c.injected_snr_db = {r[0], r[1]};
    }
    c.f0_scale = j.value("f0_scale", c.f0_scale);
    c.freq_power = j.value("freq_power", c.freq_power);
    c.freq_lags = j.value("freq_lags", c.freq_lags);
    c.aux_f0_weight = j.value("aux_f0_weight", c.aux_f0_weight);
    c.tap_init_scale = j.value("tap_init_scale", c.tap_init_scale);
    c.init_seed = j.value("init_seed", c.init_seed);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kInvalidArgument, std::string("bad model config: ") + e.what());
  }
  c.validate();
}

DpnModel::DpnModel(DpnConfig config) : config_(std::move(config)) {
  config_.validate();
  const auto& c = config_;
  const std::size_t ch = c.feature_channels, k = c.kernel_size, hu = c.head_units;
  waveform::Rng rng(c.init_seed);

  params_.add("feat.in.w", he_uniform({ch, 2, k}, 2 * k, rng));
  params_.add("feat.in.b", Tensor({ch}));
  for (std::size_t b = 0; b < c.n_residual_blocks; ++b) {
    const std::string p = "feat.block" + std::to_string(b);
    params_.add(p + ".conv1.w", he_uniform({ch, ch, k}, ch * k, rng));
    params_.add(p + ".conv1.b", Tensor({ch}));
    params_.add(p + ".conv2.w", he_uniform({ch, ch, k}, ch * k, rng));
    params_.add(p + ".conv2.b", Tensor({ch}));
  }

  // Tap heads start near a delta filter: small weights, delta bias.
  const auto tap_head = [&](const std::string& name, std::size_t taps) {
    Tensor w = he_uniform({2 * taps, ch}, ch, rng);
    for (auto& v : w.data) v *= c.tap_init_scale;
    Tensor b({2 * taps});
    b.data[taps / 2] = 1.0;
    params_.add(name + ".w", std::move(w));
    params_.add(name + ".b", std::move(b));
  };
  if (c.stages.noise) tap_head("noise", RxParams::kNoiseTaps);
  if (c.stages.cfo) {
    const std::size_t lag = c.freq_lags.size();
    params_.add("freq.hidden.w", he_uniform({hu, ch + lag}, ch + lag, rng));
    params_.add("freq.hidden.b", Tensor({hu}));
    params_.add("freq.out.w", he_uniform({1, hu + lag}, hu + lag, rng));
    params_.add("freq.out.b", Tensor({1}));
  }
  if (c.stages.eqmf) tap_head("eqmf", RxParams::kEqmfTaps);
  if (c.stages.timing) {
    const auto lstm = [&](const std::string& name, std::size_t din, std::size_t h) {
      const double lim = 1.0 / std::sqrt(static_cast<double>(h));
      params_.add(name + ".wx", uniform({4 * h, din}, lim, rng));
      params_.add(name + ".wh", uniform({4 * h, h}, lim, rng));
      Tensor b = uniform({4 * h}, lim, rng);
      for (std::size_t j = 0; j < h; ++j) b.data[h + j] = 1.0;
      params_.add(name + ".b", std::move(b));
    };
    lstm("timing.lstm1", ch, c.lstm1_units);
    lstm("timing.lstm2", c.timing_input == TimingInput::kConstant ? 1 : ch, c.lstm2_units);
    params_.add("timing.out.w", he_uniform({1, c.lstm2_units}, c.lstm2_units, rng));
    params_.add("timing.out.b", Tensor({1}));
  }
  params_.add("cls.hidden.w", he_uniform({hu, ch}, ch, rng));
  params_.add("cls.hidden.b", Tensor({hu}));
  params_.add("cls.out.w", he_uniform({c.class_count, hu}, hu, rng));
  params_.add("cls.out.b", Tensor({c.class_count}));
}

Var DpnModel::features(Tape& t, Var signal) const {
  const auto p = [&](const std::string& n) { return t.param(params_, n); };
  Var h = nn::relu(nn::conv1d(signal, p("feat.in.w"), p("feat.in.b")));
  for (std::size_t b = 0; b < config_.n_residual_blocks; ++b) {
    const std::string n = "feat.block" + std::to_string(b);
    Var f = nn::relu(nn::conv1d(h, p(n + ".conv1.w"), p(n + ".conv1.b")));
    f = nn::conv1d(f, p(n + ".conv2.w"), p(n + ".conv2.b"));
    h = nn::add(h, f);
  }
  return h;
}

Var DpnModel::taps_head(Tape& t, Var feats, const std::string& name, std::size_t taps) const {
  Var v = nn::linear(nn::global_avg_pool(feats), t.param(params_, name + ".w"), t.param(params_, name + ".b"));
  return nn::reshape(v, {2, taps});
}

Forward DpnModel::forward(Tape& t, std::span<const Complex> y_in, waveform::Rng* noise_rng) const {
  validate_sequence(y_in);
  const auto& c = config_;
  const auto p = [&](const std::string& n) { return t.param(params_, n); };
  std::map<std::size_t, Var> cache;
  const auto feats = [&](Var s) {
    const auto it = cache.find(s.id);
    if (it != cache.end()) return it->second;
    Var f = features(t, s);
    cache.emplace(s.id, f);
    return f;
  };
  const std::size_t n = y_in.size();

  Forward f;
  const Var y = t.constant(nn::planar_tensor(y_in));

  Var z1 = y;
  f.noise_taps = t.constant(nn::planar_tensor(delta_taps(RxParams::kNoiseTaps)));
  if (c.stages.noise) {
    f.noise_taps = taps_head(t, feats(y), "noise", RxParams::kNoiseTaps);
    z1 = nn::complex_fir(y, f.noise_taps);
  }
  f.z1_hat = z1;
  const Var z1_in = c.stages.noise ? nn::stop_gradient(z1) : z1;

  Var z2 = z1_in;
  f.f0_hat = t.constant(Tensor::scalar(0.0));
  if (c.stages.cfo) {
    Var in = nn::global_avg_pool(feats(z1_in));
    Var h;
    if (!c.freq_lags.empty()) {
      // per-lag frequency estimates in units of f0_scale
      const Var lag = nn::mul(nn::power_lag_phase(z1_in, c.freq_power, c.freq_lags), t.constant(lag_weights(c)));
      h = nn::concat(nn::relu(nn::linear(nn::concat(in, lag), p("freq.hidden.w"), p("freq.hidden.b"))), lag);
    } else {
      h = nn::relu(nn::linear(in, p("freq.hidden.w"), p("freq.hidden.b")));
    }
    f.f0_hat = nn::scale(nn::linear(h, p("freq.out.w"), p("freq.out.b")), c.f0_scale);
    z2 = nn::frequency_shift(z1_in, f.f0_hat);
  }
  f.z2_hat = z2;
  Var z2_in = c.stages.cfo ? nn::stop_gradient(z2) : z2;
  if (noise_rng != nullptr && c.inject_noise_before_eqmf && c.stages.eqmf) {
    const ComplexSequence clean = complex_from(z2_in.value());
    if (energy(clean) > 0.0) {
      const double snr = c.injected_snr_db.draw(*noise_rng);
      z2_in = t.constant(nn::planar_tensor(waveform::add_awgn(clean, snr, *noise_rng)));
    }
  }

  Var z3 = z2_in;
  f.eqmf_taps = t.constant(nn::planar_tensor(delta_taps(RxParams::kEqmfTaps)));
  if (c.stages.eqmf) {
    f.eqmf_taps = taps_head(t, feats(z2_in), "eqmf", RxParams::kEqmfTaps);
    z3 = nn::complex_fir(z2_in, f.eqmf_taps);
  }
  f.z3_hat = z3;
  const Var z3_in = c.stages.eqmf ? nn::stop_gradient(z3) : z3;

  if (c.stages.timing) {
    const Var seq = nn::transpose(feats(z3_in));  // [N x C]
    const auto lstm = [&](const std::string& name) {
      return nn::LstmWeights{p(name + ".wx"), p(name + ".wh"), p(name + ".b")};
    };
    const Var zero = t.constant(Tensor({c.lstm1_units}));
    const nn::LstmResult first = nn::lstm_scan(seq, lstm("timing.lstm1"), zero, zero);
    const Var drive = c.timing_input == TimingInput::kConstant ? t.constant(Tensor({n, 1}, 1.0)) : seq;
    const nn::LstmResult second = nn::lstm_scan(drive, lstm("timing.lstm2"), first.h, first.c);
    const Var logits = nn::linear(second.outputs, p("timing.out.w"), p("timing.out.b"));
    f.z4_hat = nn::sigmoid(nn::reshape(logits, {n}));
  } else {
    f.z4_hat = t.constant(Tensor({n}, 0.5));
  }

  Var cls_in = z3_in;
  switch (c.classifier_input) {
    case ClassifierInput::kY: cls_in = y; break;
    case ClassifierInput::kZ1: cls_in = z1_in; break;
    case ClassifierInput::kZ2: cls_in = z2_in; break;
    case ClassifierInput::kZ3: break;
  }
  Var h = nn::relu(nn::linear(nn::global_avg_pool(feats(cls_in)), p("cls.hidden.w"), p("cls.hidden.b")));
  f.z5_hat = nn::softmax(nn::linear(h, p("cls.out.w"), p("cls.out.b")));
  return f;
}

TimingSignal binarize_timing(std::span<const double> probabilities) {
  TimingSignal out(probabilities.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = probabilities[i] > 0.5 ? 1 : 0;
  return out;
}

InferResult infer(const DpnModel& model, std::span<const Complex> y) {
  Tape tape(false);
  const Forward f = model.forward(tape, y);
  InferResult r;
  r.z1_hat = complex_from(f.z1_hat.value());
  r.z2_hat = complex_from(f.z2_hat.value());
  r.z3_hat = complex_from(f.z3_hat.value());
  r.z4_prob = f.z4_hat.value().data;
  r.rx.noise_taps = complex_from(f.noise_taps.value());
  r.rx.f0_hat = f.f0_hat.value().item();
  r.rx.eqmf_taps = complex_from(f.eqmf_taps.value());
  r.rx.timing = model.config().stages.timing ? binarize_timing(r.z4_prob) : TimingSignal(y.size(), 0);
  r.rx.class_scores = f.z5_hat.value().data;
  return r;
}

Var training_forward(const DpnModel& model, const LabeledSample& sample, const losses::LossWeights& weights,
                     Tape& tape, waveform::Rng* noise_rng, StepResult& out) {
  const auto& c = model.config();
  if (sample.z5.size() != c.class_count) fail(ErrorKind::kDimension, "sample class count differs from the model");
  const Forward f = model.forward(tape, sample.y, noise_rng);
  const Var zero = tape.constant(Tensor::scalar(0.0));
  const std::array<Var, 5> parts{
      c.stages.noise ? losses::mse(f.z1_hat, sample.z1) : zero,
      c.stages.cfo ? losses::phase_insensitive(f.z2_hat, sample.z2) : zero,
      c.stages.eqmf ? losses::sampled_phase_insensitive(f.z3_hat, sample.z3, sample.z4) : zero,
      c.stages.timing ? losses::timing(f.z4_hat, sample.z4) : zero,
      losses::classification(f.z5_hat, sample.z5),
  };
  Var total = losses::total(parts, weights);
  out.aux_f0 = 0.0;
  if (c.aux_f0_weight > 0.0 && c.stages.cfo) {
    const Var d = nn::scale(nn::sub(f.f0_hat, tape.constant(Tensor::scalar(sample.params.f0))), 1.0 / c.f0_scale);
    const Var aux = nn::scale(nn::mul(d, d), c.aux_f0_weight);
    out.aux_f0 = aux.value().item();
    total = nn::add(total, aux);
  }
  for (std::size_t i = 0; i < 5; ++i) out.components[i] = parts[i].value().item();
  out.total = total.value().item();
  if (!std::isfinite(out.total)) fail(ErrorKind::kTrainingFault, "non-finite training loss");
  return total;
}

StepResult accumulate_gradients(const DpnModel& model, const LabeledSample& sample,
                                const losses::LossWeights& weights, waveform::Rng* noise_rng, nn::Gradients& grads) {
  Tape tape(true);
  StepResult r;
  const Var total = training_forward(model, sample, weights, tape, noise_rng, r);
  tape.backward(total);
  tape.accumulate_parameter_grads(model.params(), grads);
  return r;
}

std::uint64_t count_nn_flops(const DpnConfig& c, std::size_t n) {
  c.validate();
  using U = std::uint64_t;
  const U ch = c.feature_channels, k = c.kernel_size, len = n, hu = c.head_units;
  const auto conv = [len](U ci, U co, U kk) { return 2 * ci * co * kk * len + co * len; };
  const auto dense = [](U din, U dout) { return 2 * din * dout + dout; };
  const auto lstm = [len](U din, U h) { return len * (2 * 4 * h * (din + h) + 4 * h + 5 * h); };
  const U pool = ch * len;

  // Distinct signals that go through the feature extractor.
  int s1 = c.stages.noise ? 1 : 0;
  int s2 = c.stages.cfo ? 2 : s1;
  int s3 = c.stages.eqmf ? 3 : s2;
  std::set<int> passes;
  if (c.stages.noise) passes.insert(0);
  if (c.stages.cfo) passes.insert(s1);
  if (c.stages.eqmf) passes.insert(s2);
  if (c.stages.timing) passes.insert(s3);
  const int tap[] = {0, s1, s2, s3};
  passes.insert(tap[static_cast<int>(c.classifier_input)]);

  U per_pass = conv(2, ch, k) + c.n_residual_blocks * 2 * conv(ch, ch, k);
  U total = passes.size() * per_pass;
  if (c.stages.noise) total += pool + dense(ch, 2 * RxParams::kNoiseTaps);
  if (c.stages.cfo) {
    const U lag = c.freq_lags.size();
    total += pool + dense(ch + lag, hu) + dense(hu + lag, 1);
    if (lag) {
      total += 6 * static_cast<U>(c.freq_power - 1) * len;  // powers
      for (std::size_t l : c.freq_lags) total += 8 * (len - l) + 2;  // products and sums, arg, scale
    }
  }
  if (c.stages.eqmf) total += pool + dense(ch, 2 * RxParams::kEqmfTaps);
  if (c.stages.timing) {
    total += lstm(ch, c.lstm1_units);
    total += lstm(c.timing_input == TimingInput::kConstant ? 1 : ch, c.lstm2_units);
    total += len * dense(c.lstm2_units, 1);
  }
  total += pool + dense(ch, hu) + dense(hu, c.class_count);
  return total;
}

}  // namespace dualpath::dpn
