// dualpath command line: dataset generation, training, inference and the
// evaluation suites. Reports are CSV (one row per bin) plus a JSON summary.

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dualpath/dataset_io.hpp"
#include "dualpath/dpn.hpp"
#include "dualpath/errors.hpp"
#include "dualpath/harness.hpp"
#include "dualpath/nn/checkpoint.hpp"
#include "dualpath/sigpath.hpp"
#include "dualpath/waveform.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dualpath;

namespace {

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::kIo, path.string() + ": " + e.what());
  }
}

void write_json(const std::optional<fs::path>& path, const json& j) {
  if (!path) {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream out(*path);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path->string());
  out << j.dump(2) << "\n";
}

std::ofstream open_csv(const fs::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out.precision(10);
  return out;
}

// JSON has no infinity; finite numbers pass, the rest become strings.
json number(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

waveform::DatasetSpec load_spec(const std::string& preset, const std::optional<fs::path>& file) {
  if (file) return read_json(*file).get<waveform::DatasetSpec>();
  if (preset == "dataset1") return waveform::dataset1();
  if (preset == "dataset2") return waveform::dataset2();
  fail(ErrorKind::kInvalidArgument, "unknown preset " + preset);
}

std::vector<LabeledSample> load_dataset(const fs::path& path) { return io::DatasetReader(path).read_all(); }

void check_universe(const io::DatasetHeader& h, const harness::SavedModel& m) {
  if (h.spec.universe != m.universe) fail(ErrorKind::kUnknownClass, "dataset classes differ from the model's");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dualpath blind receiver"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a labeled dataset file");
  std::string preset = "dataset2";
  std::optional<fs::path> spec_file;
  std::size_t count = 1000;
  std::uint64_t seed = 1;
  fs::path out_path;
  gen->add_option("--preset", preset, "dataset1 or dataset2")->capture_default_str();
  gen->add_option("--spec", spec_file, "DatasetSpec JSON (overrides --preset)");
  gen->add_option("--count", count)->capture_default_str();
  gen->add_option("--seed", seed)->capture_default_str();
  gen->add_option("--out", out_path)->required();

  // train
  auto* train = app.add_subcommand("train", "Train a model; writes a checkpoint directory");
  fs::path config_path, ckpt_out;
  std::optional<fs::path> history_csv;
  train->add_option("--config", config_path, "JSON with optional 'train' and 'model' objects")->required();
  train->add_option("--out", ckpt_out, "checkpoint directory")->required();
  train->add_option("--history", history_csv, "per-epoch CSV");

  // infer
  auto* infer = app.add_subcommand("infer", "Estimate receiver parameters for every record");
  fs::path model_path, in_path;
  std::optional<fs::path> json_out;
  infer->add_option("--model", model_path)->required();
  infer->add_option("--in", in_path)->required();
  infer->add_option("--out", json_out, "rxparams JSON (stdout if absent)");

  // demod
  auto* demod = app.add_subcommand("demod", "Run the signal path with estimated parameters");
  fs::path csv_out;
  demod->add_option("--model", model_path)->required();
  demod->add_option("--in", in_path)->required();
  demod->add_option("--out", csv_out, "per-record CSV")->required();
  demod->add_option("--summary", json_out);

  // eval-class / eval-params
  auto* eval_class = app.add_subcommand("eval-class", "Accuracy per SNR bin and confusion matrix");
  double confusion_snr = -std::numeric_limits<double>::infinity();
  for (auto* sc : {eval_class}) {
    sc->add_option("--model", model_path)->required();
    sc->add_option("--in", in_path)->required();
    sc->add_option("--out", csv_out)->required();
    sc->add_option("--summary", json_out);
  }
  eval_class->add_option("--confusion-snr", confusion_snr, "pool bins at or above this SNR for the matrix");

  auto* eval_params = app.add_subcommand("eval-params", "Output SNR, residual CFO and timing error per SNR bin");
  eval_params->add_option("--model", model_path)->required();
  eval_params->add_option("--in", in_path)->required();
  eval_params->add_option("--out", csv_out)->required();
  eval_params->add_option("--summary", json_out);

  // eval-ser
  auto* eval_ser = app.add_subcommand("eval-ser", "SER of the model path against the genie baseline");
  bool chunk_reuse = false;
  std::size_t length = 512, signals = 1000, chunk = 128;
  double min_sps = 3.0;
  std::optional<fs::path> ser_in;
  eval_ser->add_option("--model", model_path)->required();
  eval_ser->add_option("--in", ser_in, "dataset file (not used with --chunk-reuse)");
  eval_ser->add_option("--out", csv_out)->required();
  eval_ser->add_option("--summary", json_out);
  eval_ser->add_option("--baseline-min-sps", min_sps, "baseline lowpass cutoff is 0.5/min_sps")->capture_default_str();
  eval_ser->add_flag("--chunk-reuse", chunk_reuse, "compare parameter reuse against per-chunk estimation");
  eval_ser->add_option("--spec", spec_file, "DatasetSpec JSON for chunk-reuse signals (default: training spec)");
  eval_ser->add_option("--length", length)->capture_default_str();
  eval_ser->add_option("--signals", signals)->capture_default_str();
  eval_ser->add_option("--chunk", chunk)->capture_default_str();
  eval_ser->add_option("--seed", seed)->capture_default_str();

  // bench-flops
  auto* bench = app.add_subcommand("bench-flops", "Analytic FLOP counts of both paths");
  std::optional<fs::path> bench_model, bench_config;
  std::size_t n_samples = 128;
  bench->add_option("--model", bench_model, "checkpoint");
  bench->add_option("--model-config", bench_config, "DpnConfig JSON");
  bench->add_option("--samples", n_samples)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      const auto spec = load_spec(preset, spec_file);
      io::write_dataset(out_path, spec, count, seed);
      write_json(std::nullopt, {{"written", count}, {"path", out_path.string()}});
    } else if (train->parsed()) {
      const json cfg = read_json(config_path);
      const auto tc = cfg.value("train", json::object()).get<harness::TrainConfig>();
      dpn::DpnConfig mc = cfg.value("model", json::object()).get<dpn::DpnConfig>();
      mc.class_count = tc.dataset.universe.size();
      mc.validate();
      dpn::DpnModel model(mc);
      std::optional<std::ofstream> hist;
      if (history_csv) {
        hist = open_csv(*history_csv);
        *hist << "epoch,train_loss,validation_loss,l1,l2,l3,l4,l5,seconds\n";
      }
      const auto h = harness::train(tc, model, [&](const harness::EpochRecord& r) {
        std::cerr << "epoch " << r.epoch << " train " << r.train_loss << " validation " << r.validation_loss << "\n";
        if (hist) {
          *hist << r.epoch << ',' << r.train_loss << ',' << r.validation_loss;
          for (double c : r.validation_components) *hist << ',' << c;
          *hist << ',' << r.seconds << '\n' << std::flush;
        }
      });
      harness::save_model(ckpt_out, model, tc.dataset.universe,
                          {{"dataset", tc.dataset}, {"train", tc}, {"best_epoch", h.best_epoch}});
      write_json(std::nullopt, {{"epochs", h.epochs.size()},
                                {"best_epoch", h.best_epoch},
                                {"best_validation_loss", h.best_validation_loss},
                                {"early_stopped", h.early_stopped},
                                {"parameters", model.parameter_count()}});
    } else if (infer->parsed()) {
      const auto m = harness::load_model(model_path);
      io::DatasetReader reader(in_path);
      json arr = json::array();
      for (std::size_t i = 0; i < reader.size(); ++i) {
        const auto s = reader.read(i);
        arr.push_back(io::rx_params_to_json(dpn::infer(m.model, s.y).rx));
      }
      write_json(json_out, arr);
    } else if (demod->parsed()) {
      const auto m = harness::load_model(model_path);
      const auto samples = load_dataset(in_path);
      auto csv = open_csv(csv_out);
      csv << "index,true_scheme,predicted_scheme,snr_db,symbols,errors,ser\n";
      sigpath::SerCount total;
      std::size_t correct = 0;
      for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        const RxParams rx = dpn::infer(m.model, s.y).rx;
        const auto k = static_cast<std::size_t>(std::max_element(rx.class_scores.begin(), rx.class_scores.end()) -
                                                rx.class_scores.begin());
        const ModulationScheme predicted = m.universe.at(k);
        correct += predicted == s.params.scheme;
        csv << i << ',' << scheme_name(s.params.scheme) << ',' << scheme_name(predicted) << ',' << s.params.snr_db;
        if (!is_linear(predicted) || !is_linear(s.params.scheme)) {
          csv << ",0,0,\n";
          continue;
        }
        // Reference: the target recovered signal demapped at its own transitions.
        sigpath::SerReference ref;
        ref.indices = transition_indices(s.z4);
        for (std::size_t idx : ref.indices) ref.symbols.push_back(s.z3[idx]);
        ref.labels = sigpath::demap_min_distance(ref.symbols, s.params.scheme);
        const DemodReport d = sigpath::run_signal_path(s.y, rx, predicted, &ref);
        total += {d.symbol_errors, d.symbols_scored};
        csv << ',' << d.symbols_scored << ',' << d.symbol_errors << ',' << (d.ser ? *d.ser : 0.0) << '\n';
      }
      write_json(json_out, {{"records", samples.size()},
                            {"classification_accuracy",
                             samples.empty() ? 0.0 : static_cast<double>(correct) / samples.size()},
                            {"symbols", total.total},
                            {"symbol_errors", total.errors},
                            {"ser", number(total.rate())}});
    } else if (eval_class->parsed()) {
      const auto m = harness::load_model(model_path);
      io::DatasetReader reader(in_path);
      check_universe(reader.header(), m);
      const auto samples = reader.read_all();
      const auto r = harness::eval_classification(harness::model_estimator(m.model), samples, m.universe.size());
      auto csv = open_csv(csv_out);
      csv << "snr_lo,count,correct,accuracy\n";
      for (const auto& b : r.bins) csv << b.snr_lo << ',' << b.count << ',' << b.correct << ',' << b.accuracy() << '\n';
      const auto pooled = r.pooled(confusion_snr);
      json names = json::array();
      for (auto s : m.universe) names.push_back(std::string(scheme_name(s)));
      write_json(json_out, {{"accuracy", r.pooled().accuracy()},
                            {"accuracy_snr_ge_10", r.pooled(10.0).accuracy()},
                            {"confusion_snr_min", number(confusion_snr)},
                            {"classes", names},
                            {"confusion", pooled.confusion}});
    } else if (eval_params->parsed()) {
      const auto m = harness::load_model(model_path);
      const auto samples = load_dataset(in_path);
      const auto r = harness::eval_params(harness::model_estimator(m.model), samples);
      auto csv = open_csv(csv_out);
      csv << "snr_lo,count,output_snr_db,residual_cfo_ratio,timing_error\n";
      for (const auto& b : r.bins) {
        csv << b.snr_lo << ',' << b.count << ',' << b.output_snr_db() << ',' << b.residual_cfo_ratio() << ','
            << b.timing_error() << '\n';
      }
      const auto all = r.pooled(), high = r.pooled(10.0);
      write_json(json_out, {{"output_snr_db", number(all.output_snr_db())},
                            {"residual_cfo_ratio", number(all.residual_cfo_ratio())},
                            {"timing_error", all.timing_error()},
                            {"residual_cfo_ratio_snr_ge_10", number(high.residual_cfo_ratio())},
                            {"timing_error_snr_ge_10", high.timing_error()}});
    } else if (eval_ser->parsed()) {
      const auto m = harness::load_model(model_path);
      if (chunk_reuse) {
        waveform::DatasetSpec spec =
            spec_file ? read_json(*spec_file).get<waveform::DatasetSpec>()
                      : nn::read_checkpoint_metadata(model_path).at("dataset").get<waveform::DatasetSpec>();
        spec.universe = {ModulationScheme::kQpsk};
        spec.n_r = length;
        const auto r = harness::eval_chunk_reuse(m.model, spec, signals, seed, chunk);
        auto csv = open_csv(csv_out);
        csv << "mode,symbols,errors,ser,flops\n";
        csv << "reuse," << r.reuse.total << ',' << r.reuse.errors << ',' << r.reuse.rate() << ',' << r.flops_reuse
            << '\n';
        csv << "reestimate," << r.reestimate.total << ',' << r.reestimate.errors << ',' << r.reestimate.rate() << ','
            << r.flops_reestimate << '\n';
        write_json(json_out, {{"signals", r.signals},
                              {"length", r.length},
                              {"chunk", r.chunk},
                              {"ser_difference", r.ser_difference},
                              {"standard_error", r.standard_error},
                              {"nn_flops_per_chunk", r.nn_flops_per_chunk},
                              {"signal_flops_per_chunk", r.signal_flops_per_chunk},
                              {"measured_reduction", r.measured_reduction},
                              {"predicted_reduction", r.predicted_reduction}});
      } else {
        if (!ser_in) fail(ErrorKind::kInvalidArgument, "--in is required without --chunk-reuse");
        const auto samples = load_dataset(*ser_in);
        sigpath::BaselineConfig bc;
        bc.min_sps = min_sps;
        const auto r = harness::eval_ser(harness::model_estimator(m.model), samples, bc);
        auto csv = open_csv(csv_out);
        csv << "scheme,snr_lo,dpn_symbols,dpn_errors,dpn_ser,baseline_symbols,baseline_errors,baseline_ser\n";
        for (const auto& c : r.cells) {
          csv << scheme_name(c.scheme) << ',' << c.snr_lo << ',' << c.dpn.total << ',' << c.dpn.errors << ','
              << c.dpn.rate() << ',' << c.baseline.total << ',' << c.baseline.errors << ',' << c.baseline.rate()
              << '\n';
        }
        write_json(json_out, {{"dpn_ser", number(r.total_dpn().rate())},
                              {"baseline_ser", number(r.total_baseline().rate())},
                              {"cells", r.cells.size()}});
      }
    } else if (bench->parsed()) {
      dpn::DpnConfig mc;
      if (bench_model) {
        mc = nn::read_checkpoint_metadata(*bench_model).at("model").get<dpn::DpnConfig>();
      } else if (bench_config) {
        mc = read_json(*bench_config).get<dpn::DpnConfig>();
      }
      const FlopReport sig = sigpath::signal_path_flops(n_samples);
      const std::uint64_t nn_flops = dpn::count_nn_flops(mc, n_samples);
      write_json(std::nullopt, {{"samples", n_samples},
                                {"signal_path_complex_ops", sig.complex_ops},
                                {"signal_path_real_flops", sig.real_flops},
                                {"nn_flops", nn_flops},
                                {"parameters", dpn::DpnModel(mc).parameter_count()},
                                {"reuse_reduction", static_cast<double>(nn_flops + sig.real_flops) / sig.real_flops}});
    }
  } catch (const Error& e) {
    std::cerr << json{{"error", std::string(to_string(e.kind()))}, {"message", e.what()}}.dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "internal"}, {"message", e.what()}}.dump() << "\n";
    return 3;
  }
  return 0;
}
