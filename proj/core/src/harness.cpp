#include "dualpath/harness.hpp"

#include <chrono>
#include <cmath>
#include <map>

#include <nlohmann/json.hpp>

#include "dualpath/errors.hpp"
#include "dualpath/nn/checkpoint.hpp"
#include "dualpath/parallel.hpp"
#include "dualpath/pulse.hpp"

namespace dualpath::harness {
namespace {

constexpr std::uint64_t kValidationStream = 1;
constexpr std::uint64_t kTestStream = 2;
constexpr std::uint64_t kEpochStreamBase = 1000;
constexpr std::uint64_t kNoiseStreamSalt = 0x6e6f697365ULL;

std::vector<double> as_probabilities(const TimingSignal& z4) { return {z4.begin(), z4.end()}; }

// Reference for samples read from files, which carry no symbol lists: the
// recovered-signal target sampled at its own transitions.
sigpath::SerReference reference_for(const LabeledSample& s, std::size_t guard) {
  if (!s.symbols.empty()) return sigpath::reference_from_sample(s, guard);
  sigpath::SerReference ref;
  ref.guard = guard;
  ref.indices = transition_indices(s.z4);
  for (std::size_t i : ref.indices) ref.symbols.push_back(s.z3[i]);
  ref.labels = sigpath::demap_min_distance(ref.symbols, s.params.scheme);
  return ref;
}

}  // namespace

void TrainConfig::validate() const {
  dataset.validate();
  if (epochs_max == 0 || samples_per_epoch == 0 || batch_size == 0 || early_stop_patience == 0 ||
      validation_size == 0 || test_size == 0) {
    fail(ErrorKind::kInvalidArgument, "training counts must be >= 1");
  }
  loss_weights.validate();
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"dataset", c.dataset},
                     {"epochs_max", c.epochs_max},
                     {"samples_per_epoch", c.samples_per_epoch},
                     {"batch_size", c.batch_size},
                     {"early_stop_patience", c.early_stop_patience},
                     {"loss_weights",
                      {{"w1", c.loss_weights.w[0]},
                       {"w2", c.loss_weights.w[1]},
                       {"w3", c.loss_weights.w[2]},
                       {"w4", c.loss_weights.w[3]},
                       {"w5", c.loss_weights.w[4]}}},
                     {"lr", c.adam.lr},
                     {"clip_norm", c.adam.clip_norm},
                     {"seed", c.seed},
                     {"validation_size", c.validation_size},
                     {"test_size", c.test_size}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  c = TrainConfig{};
  try {
    if (j.contains("dataset")) c.dataset = j.at("dataset").get<waveform::DatasetSpec>();
    c.epochs_max = j.value("epochs_max", c.epochs_max);
    c.samples_per_epoch = j.value("samples_per_epoch", c.samples_per_epoch);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.early_stop_patience = j.value("early_stop_patience", c.early_stop_patience);
    if (j.contains("loss_weights")) c.loss_weights = losses::weights_from_json(j.at("loss_weights"));
    c.adam.lr = j.value("lr", c.adam.lr);
    c.adam.clip_norm = j.value("clip_norm", c.adam.clip_norm);
    c.seed = j.value("seed", c.seed);
    c.validation_size = j.value("validation_size", c.validation_size);
    c.test_size = j.value("test_size", c.test_size);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kInvalidArgument, std::string("bad training config: ") + e.what());
  }
  c.validate();
}

bool EarlyStopping::update(double validation_loss) {
  ++epoch_;
  improved_ = validation_loss < best_;
  if (improved_) {
    best_ = validation_loss;
    best_epoch_ = epoch_;
    bad_ = 0;
  } else {
    ++bad_;
  }
  return bad_ >= patience_;
}

std::uint64_t validation_seed(std::uint64_t train_seed) { return waveform::derive_seed(train_seed, kValidationStream); }
std::uint64_t test_seed(std::uint64_t train_seed) { return waveform::derive_seed(train_seed, kTestStream); }
std::uint64_t epoch_seed(std::uint64_t train_seed, std::size_t epoch) {
  return waveform::derive_seed(train_seed, kEpochStreamBase + epoch);
}

std::vector<LabeledSample> fixed_set(const waveform::DatasetSpec& spec, std::size_t n, std::uint64_t seed) {
  const waveform::EpochStream stream(spec, n, seed);
  std::vector<LabeledSample> out(n);
  parallel_for(n, [&](std::size_t i) { out[i] = stream.at(i); });
  return out;
}

LossSummary evaluate_loss(const dpn::DpnModel& model, std::span<const LabeledSample> samples,
                          const losses::LossWeights& weights) {
  if (samples.empty()) fail(ErrorKind::kEmptyInput, "no samples to evaluate");
  std::vector<dpn::StepResult> results(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    nn::Tape tape(false);
    dpn::training_forward(model, samples[i], weights, tape, nullptr, results[i]);
  });
  LossSummary s;
  for (const auto& r : results) {
    s.total += r.total;
    for (std::size_t k = 0; k < 5; ++k) s.components[k] += r.components[k];
  }
  const double inv = 1.0 / static_cast<double>(samples.size());
  s.total *= inv;
  for (auto& v : s.components) v *= inv;
  return s;
}

TrainHistory train(const TrainConfig& config, dpn::DpnModel& model,
                   const std::function<void(const EpochRecord&)>& on_epoch) {
  config.validate();
  if (config.dataset.universe.size() != model.config().class_count) {
    fail(ErrorKind::kDimension, "dataset universe size differs from the model's class count");
  }
  const auto validation = fixed_set(config.dataset, config.validation_size, validation_seed(config.seed));
  auto optimizer = nn::make_optimizer(model.params(), config.adam);
  EarlyStopping stopper(config.early_stop_patience);
  std::vector<nn::Tensor> best = nn::snapshot(model.params());
  TrainHistory history;

  const std::size_t batch = config.batch_size;
  std::vector<nn::Gradients> slots(batch, nn::Gradients::zeros_like(model.params()));
  std::vector<dpn::StepResult> results(batch);

  for (std::size_t epoch = 1; epoch <= config.epochs_max; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    const std::uint64_t seed = epoch_seed(config.seed, epoch);
    const waveform::EpochStream stream(config.dataset, config.samples_per_epoch, seed);
    EpochRecord record;
    record.epoch = epoch;

    try {
      for (std::size_t start = 0; start < config.samples_per_epoch; start += batch) {
        const std::size_t b = std::min(batch, config.samples_per_epoch - start);
        parallel_for(b, [&](std::size_t i) {
          for (auto& g : slots[i].grads) std::fill(g.data.begin(), g.data.end(), 0.0);
          const LabeledSample sample = stream.at(start + i);
          waveform::Rng noise(waveform::derive_seed(seed ^ kNoiseStreamSalt, start + i));
          results[i] = dpn::accumulate_gradients(model, sample, config.loss_weights, &noise, slots[i]);
        });
        for (std::size_t i = 1; i < b; ++i) slots[0] += slots[i];
        slots[0].scale(1.0 / static_cast<double>(b));
        nn::adam_step(model.params(), slots[0], optimizer);
        for (std::size_t i = 0; i < b; ++i) {
          record.train_loss += results[i].total;
          for (std::size_t k = 0; k < 5; ++k) record.train_components[k] += results[i].components[k];
        }
      }
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::kTrainingFault && config.fault_checkpoint) {
        nn::save_checkpoint(*config.fault_checkpoint, model.params(),
                            nlohmann::json{{"model", model.config()}, {"fault_epoch", epoch}});
      }
      throw;
    }
    const double inv = 1.0 / static_cast<double>(config.samples_per_epoch);
    record.train_loss *= inv;
    for (auto& v : record.train_components) v *= inv;

    const LossSummary val = evaluate_loss(model, validation, config.loss_weights);
    record.validation_loss = val.total;
    record.validation_components = val.components;
    record.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    history.epochs.push_back(record);

    const bool stop = stopper.update(val.total);
    if (stopper.improved()) best = nn::snapshot(model.params());
    if (on_epoch) on_epoch(record);
    if (stop) {
      history.early_stopped = true;
      break;
    }
  }
  nn::restore(model.params(), best);
  history.best_epoch = stopper.best_epoch();
  history.best_validation_loss = stopper.best_loss();
  return history;
}

void save_model(const std::filesystem::path& dir, const dpn::DpnModel& model,
                std::span<const ModulationScheme> universe, const nlohmann::json& extra) {
  if (universe.size() != model.config().class_count) fail(ErrorKind::kDimension, "universe size != class count");
  nlohmann::json meta = extra.is_object() ? extra : nlohmann::json::object();
  meta["model"] = model.config();
  meta["universe"] = nlohmann::json::array();
  for (auto s : universe) meta["universe"].push_back(std::string(scheme_name(s)));
  nn::save_checkpoint(dir, model.params(), meta);
}

SavedModel load_model(const std::filesystem::path& dir) {
  const nlohmann::json meta = nn::read_checkpoint_metadata(dir);
  if (!meta.contains("model") || !meta.contains("universe")) fail(ErrorKind::kIo, "checkpoint lacks model metadata");
  SavedModel out{dpn::DpnModel(meta.at("model").get<dpn::DpnConfig>()), {}};
  for (const auto& name : meta.at("universe")) out.universe.push_back(parse_scheme(name.get<std::string>()));
  if (out.universe.size() != out.model.config().class_count) fail(ErrorKind::kIo, "universe size != class count");
  nn::load_checkpoint(dir, out.model.params());
  return out;
}

double snr_bin(double snr_db) {
  if (std::isinf(snr_db)) return snr_db;
  return std::floor(snr_db / kSnrBinWidth) * kSnrBinWidth;
}

Estimator model_estimator(const dpn::DpnModel& model) {
  return [&model](const LabeledSample& s) { return dpn::infer(model, s.y); };
}

RxParams oracle_rx_params(const LabeledSample& s, std::size_t class_count) {
  RxParams p = RxParams::identity(s.y.size(), 0);
  p.f0_hat = s.params.f0;
  if (is_linear(s.params.scheme)) {
    const auto mf = matched_filter_taps(s.params.rolloff, s.params.sps, RxParams::kEqmfTaps);
    p.eqmf_taps.assign(mf.begin(), mf.end());
  }
  p.timing = s.z4;
  p.class_scores.assign(class_count, 0.0);
  if (s.class_index < class_count) p.class_scores[s.class_index] = 1.0;
  return p;
}

Estimator oracle_estimator(std::size_t class_count) {
  return [class_count](const LabeledSample& s) {
    dpn::InferResult r;
    r.rx = oracle_rx_params(s, class_count);
    r.z1_hat = s.z1;
    r.z2_hat = s.z2;
    r.z3_hat = s.z3;
    r.z4_prob = as_probabilities(s.z4);
    return r;
  };
}

ClassBin ClassificationReport::pooled(double snr_db) const {
  ClassBin out;
  out.snr_lo = snr_db;
  out.confusion.assign(class_count, std::vector<std::size_t>(class_count, 0));
  for (const auto& b : bins) {
    if (b.snr_lo < snr_db) continue;
    out.count += b.count;
    out.correct += b.correct;
    for (std::size_t i = 0; i < class_count; ++i) {
      for (std::size_t j = 0; j < class_count; ++j) out.confusion[i][j] += b.confusion[i][j];
    }
  }
  return out;
}

ClassificationReport classification_report(std::span<const ClassPrediction> predictions, std::size_t class_count) {
  std::map<double, ClassBin> bins;
  for (const auto& p : predictions) {
    if (p.truth >= class_count || p.predicted >= class_count) fail(ErrorKind::kUnknownClass, "class index out of range");
    const double lo = snr_bin(p.snr_db);
    auto [it, fresh] = bins.try_emplace(lo);
    ClassBin& b = it->second;
    if (fresh) {
      b.snr_lo = lo;
      b.confusion.assign(class_count, std::vector<std::size_t>(class_count, 0));
    }
    ++b.count;
    if (p.truth == p.predicted) ++b.correct;
    ++b.confusion[p.truth][p.predicted];
  }
  ClassificationReport r;
  r.class_count = class_count;
  for (auto& [lo, b] : bins) r.bins.push_back(std::move(b));
  return r;
}

ClassificationReport eval_classification(const Estimator& estimator, std::span<const LabeledSample> samples,
                                         std::size_t class_count) {
  std::vector<ClassPrediction> preds(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    const auto est = estimator(samples[i]);
    const auto& scores = est.rx.class_scores;
    if (scores.size() != class_count) fail(ErrorKind::kDimension, "class score count differs from the universe");
    preds[i].truth = samples[i].class_index;
    preds[i].predicted = static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
    preds[i].snr_db = samples[i].params.snr_db;
  });
  return classification_report(preds, class_count);
}

std::optional<double> estimate_sps(std::span<const double> z4_prob) {
  std::vector<std::size_t> crossings;
  for (std::size_t i = 0; i + 1 < z4_prob.size(); ++i) {
    if ((z4_prob[i] > 0.5) != (z4_prob[i + 1] > 0.5)) crossings.push_back(i);
  }
  if (crossings.size() < 2) return std::nullopt;
  return static_cast<double>(crossings.back() - crossings.front()) / static_cast<double>(crossings.size() - 1);
}

double timing_error(std::span<const double> z4_prob, double sps) {
  const auto est = estimate_sps(z4_prob);
  if (!est) return 1.0;
  return std::abs(sps - *est) / sps;
}

double ParamBin::output_snr_db() const {
  if (z1_error_energy == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(z1_energy / z1_error_energy);
}

double ParamBin::residual_cfo_ratio() const {
  if (f0_error_abs == 0.0) return 0.0;
  if (f0_abs == 0.0) return std::numeric_limits<double>::infinity();
  return f0_error_abs / f0_abs;
}

double ParamBin::timing_error() const { return count == 0 ? 0.0 : timing_error_sum / static_cast<double>(count); }

ParamBin& ParamBin::operator+=(const ParamBin& o) {
  count += o.count;
  z1_energy += o.z1_energy;
  z1_error_energy += o.z1_error_energy;
  f0_abs += o.f0_abs;
  f0_error_abs += o.f0_error_abs;
  timing_error_sum += o.timing_error_sum;
  return *this;
}

ParamBin ParamReport::pooled(double snr_db) const {
  ParamBin out;
  out.snr_lo = snr_db;
  for (const auto& b : bins) {
    if (b.snr_lo >= snr_db) out += b;
  }
  return out;
}

ParamReport eval_params(const Estimator& estimator, std::span<const LabeledSample> samples) {
  std::vector<ParamBin> per(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    const LabeledSample& s = samples[i];
    const auto est = estimator(s);
    ParamBin& b = per[i];
    b.count = 1;
    b.z1_energy = energy(s.z1);
    for (std::size_t k = 0; k < s.z1.size(); ++k) b.z1_error_energy += std::norm(est.z1_hat[k] - s.z1[k]);
    b.f0_abs = std::abs(s.params.f0);
    b.f0_error_abs = std::abs(s.params.f0 - est.rx.f0_hat);
    b.timing_error_sum = timing_error(est.z4_prob, s.params.sps);
  });
  std::map<double, ParamBin> bins;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double lo = snr_bin(samples[i].params.snr_db);
    auto& b = bins[lo];
    b.snr_lo = lo;
    b += per[i];
  }
  ParamReport r;
  for (auto& [lo, b] : bins) r.bins.push_back(b);
  return r;
}

sigpath::SerCount SerReport::total_dpn() const {
  sigpath::SerCount c;
  for (const auto& cell : cells) c += cell.dpn;
  return c;
}

sigpath::SerCount SerReport::total_baseline() const {
  sigpath::SerCount c;
  for (const auto& cell : cells) c += cell.baseline;
  return c;
}

SerReport eval_ser(const Estimator& estimator, std::span<const LabeledSample> samples,
                   const sigpath::BaselineConfig& baseline) {
  struct Counts {
    bool linear = false;
    sigpath::SerCount dpn, base;
  };
  std::vector<Counts> per(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    const LabeledSample& s = samples[i];
    if (!is_linear(s.params.scheme)) return;
    per[i].linear = true;
    const auto ref = reference_for(s, baseline.guard);
    RxParams rx = estimator(s).rx;
    rx.timing = s.z4;
    const DemodReport d = sigpath::run_signal_path(s.y, rx, s.params.scheme, &ref);
    per[i].dpn = {d.symbol_errors, d.symbols_scored};

    LabeledSample with_ref = s;
    if (with_ref.symbols.empty()) {
      with_ref.symbols = ref.symbols;
      with_ref.symbol_labels = ref.labels;
    }
    const DemodReport b = sigpath::baseline_genie_dsp(with_ref, baseline);
    per[i].base = {b.symbol_errors, b.symbols_scored};
  });

  std::map<std::pair<int, double>, SerCell> cells;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!per[i].linear) continue;
    const auto& p = samples[i].params;
    const double lo = snr_bin(p.snr_db);
    auto& cell = cells[{static_cast<int>(p.scheme), lo}];
    cell.scheme = p.scheme;
    cell.snr_lo = lo;
    cell.dpn += per[i].dpn;
    cell.baseline += per[i].base;
  }
  SerReport r;
  for (auto& [key, cell] : cells) r.cells.push_back(cell);
  return r;
}

ChunkReuseReport eval_chunk_reuse(const dpn::DpnModel& model, const waveform::DatasetSpec& spec, std::size_t signals,
                                  std::uint64_t seed, std::size_t chunk) {
  if (chunk == 0 || spec.n_r % chunk != 0 || spec.n_r < 2 * chunk) {
    fail(ErrorKind::kInvalidArgument, "signal length must be a multiple (>= 2) of the chunk length");
  }
  for (auto s : spec.universe) {
    if (!is_linear(s)) fail(ErrorKind::kUnsupportedScheme, "chunk reuse needs linear modulations");
  }
  const std::size_t n_chunks = spec.n_r / chunk;
  const std::uint64_t nn_flops = dpn::count_nn_flops(model.config(), chunk);
  const std::uint64_t sig_flops = sigpath::signal_path_flops(chunk).real_flops;
  const waveform::EpochStream stream(spec, signals, seed);

  struct PerSignal {
    sigpath::SerCount reuse, reest;
    std::uint64_t flops_reuse = 0, flops_reest = 0;
    std::uint64_t later_reuse = 0, later_reest = 0;
  };
  std::vector<PerSignal> per(signals);
  parallel_for(signals, [&](std::size_t i) {
    const LabeledSample s = stream.at(i);
    const auto full = sigpath::reference_from_sample(s);
    const std::span<const Complex> y(s.y);
    RxParams first;
    for (std::size_t c = 0; c < n_chunks; ++c) {
      const std::size_t lo = c * chunk;
      const auto yc = y.subspan(lo, chunk);
      sigpath::SerReference ref;
      ref.guard = full.guard;
      for (std::size_t k = 0; k < full.indices.size(); ++k) {
        if (full.indices[k] >= lo && full.indices[k] < lo + chunk) {
          ref.indices.push_back(full.indices[k] - lo);
          ref.symbols.push_back(full.symbols[k]);
          ref.labels.push_back(full.labels[k]);
        }
      }
      const TimingSignal timing(s.z4.begin() + static_cast<long>(lo), s.z4.begin() + static_cast<long>(lo + chunk));

      RxParams estimated = dpn::infer(model, yc).rx;
      if (c == 0) first = estimated;
      RxParams reused = first;
      estimated.timing = timing;
      reused.timing = timing;

      const DemodReport a = sigpath::run_signal_path(yc, reused, s.params.scheme, &ref);
      const DemodReport b = sigpath::run_signal_path(yc, estimated, s.params.scheme, &ref);
      PerSignal& p = per[i];
      p.reuse += {a.symbol_errors, a.symbols_scored};
      p.reest += {b.symbol_errors, b.symbols_scored};
      const std::uint64_t reuse_cost = (c == 0 ? nn_flops : 0) + a.flops.real_flops;
      const std::uint64_t reest_cost = nn_flops + b.flops.real_flops;
      p.flops_reuse += reuse_cost;
      p.flops_reest += reest_cost;
      if (c > 0) {
        p.later_reuse += reuse_cost;
        p.later_reest += reest_cost;
      }
    }
  });

  ChunkReuseReport r;
  r.signals = signals;
  r.length = spec.n_r;
  r.chunk = chunk;
  r.nn_flops_per_chunk = nn_flops;
  r.signal_flops_per_chunk = sig_flops;
  std::uint64_t later_reuse = 0, later_reest = 0;
  std::vector<double> diffs;
  for (const auto& p : per) {
    r.reuse += p.reuse;
    r.reestimate += p.reest;
    r.flops_reuse += p.flops_reuse;
    r.flops_reestimate += p.flops_reest;
    later_reuse += p.later_reuse;
    later_reest += p.later_reest;
    diffs.push_back(p.reuse.rate() - p.reest.rate());
  }
  double mean = 0.0;
  for (double d : diffs) mean += d;
  mean /= static_cast<double>(diffs.size());
  double var = 0.0;
  for (double d : diffs) var += (d - mean) * (d - mean);
  var /= diffs.size() > 1 ? static_cast<double>(diffs.size() - 1) : 1.0;
  r.ser_difference = mean;
  r.standard_error = std::sqrt(var / static_cast<double>(diffs.size()));
  r.measured_reduction = static_cast<double>(later_reest) / static_cast<double>(later_reuse);
  r.predicted_reduction = static_cast<double>(nn_flops + sig_flops) / static_cast<double>(sig_flops);
  return r;
}

AblationReport run_ablation(const TrainConfig& train_config, const dpn::DpnConfig& base,
                            std::span<const LabeledSample> test_set, const std::vector<int>& levels) {
  static const char* kNames[] = {"DPN0", "DPN1", "DPN2", "DPN3", "DPN"};
  AblationReport report;
  for (int level : levels) {
    dpn::DpnConfig cfg = base;
    cfg.stages = dpn::StageMask::ablation(level);
    dpn::DpnModel model(cfg);
    const TrainHistory h = train(train_config, model);
    const auto cls = eval_classification(model_estimator(model), test_set, cfg.class_count);
    AblationRow row;
    row.level = level;
    row.name = kNames[level];
    row.epochs = h.epochs.size();
    row.best_validation_loss = h.best_validation_loss;
    row.accuracy = cls.pooled().accuracy();
    row.accuracy_high_snr = cls.pooled(10.0).accuracy();
    row.parameters = model.parameter_count();
    report.rows.push_back(row);
  }
  report.monotonic = true;
  for (std::size_t i = 1; i < report.rows.size(); ++i) {
    if (report.rows[i].accuracy < report.rows[i - 1].accuracy) report.monotonic = false;
  }
  return report;
}

}  // namespace dualpath::harness
