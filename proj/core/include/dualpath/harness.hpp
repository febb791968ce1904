#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dualpath/dpn.hpp"
#include "dualpath/losses.hpp"
#include "dualpath/nn/adam.hpp"
#include "dualpath/sigpath.hpp"
#include "dualpath/waveform.hpp"

namespace dualpath::harness {

struct TrainConfig {
  waveform::DatasetSpec dataset = waveform::dataset1();
  std::size_t epochs_max = 30;
  std::size_t samples_per_epoch = 20000;
  std::size_t batch_size = 32;
  std::size_t early_stop_patience = 10;
  losses::LossWeights loss_weights;
  nn::AdamConfig adam;
  std::uint64_t seed = 1;
  std::size_t validation_size = 2000;
  std::size_t test_size = 2000;
  // Where to dump the parameters if training hits a fault.
  std::optional<std::filesystem::path> fault_checkpoint;

  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

// Stops once `patience` consecutive epochs fail to improve on the best loss.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

  // Records one epoch; returns true when training should stop.
  bool update(double validation_loss);
  bool improved() const { return improved_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_; }
  std::size_t epochs_seen() const { return epoch_; }

 private:
  std::size_t patience_;
  std::size_t epoch_ = 0;
  std::size_t best_epoch_ = 0;
  std::size_t bad_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
  bool improved_ = false;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  losses::Components train_components{};
  double validation_loss = 0.0;
  losses::Components validation_components{};
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_validation_loss = 0.0;
  bool early_stopped = false;
};

// Fixed evaluation set; validation and test use seeds derived from the
// training seed so they never coincide with training epochs.
std::vector<LabeledSample> fixed_set(const waveform::DatasetSpec& spec, std::size_t n, std::uint64_t seed);
std::uint64_t validation_seed(std::uint64_t train_seed);
std::uint64_t test_seed(std::uint64_t train_seed);
std::uint64_t epoch_seed(std::uint64_t train_seed, std::size_t epoch);

struct LossSummary {
  double total = 0.0;
  losses::Components components{};
};
// Mean loss over samples (no noise injection, no gradients).
LossSummary evaluate_loss(const dpn::DpnModel& model, std::span<const LabeledSample> samples,
                          const losses::LossWeights& weights);

// Trains in place and leaves the best-validation weights in the model.
TrainHistory train(const TrainConfig& config, dpn::DpnModel& model,
                   const std::function<void(const EpochRecord&)>& on_epoch = {});

// Checkpoint with the model config and class universe in its metadata.
struct SavedModel {
  dpn::DpnModel model;
  std::vector<ModulationScheme> universe;
};
void save_model(const std::filesystem::path& dir, const dpn::DpnModel& model,
                std::span<const ModulationScheme> universe, const nlohmann::json& extra);
SavedModel load_model(const std::filesystem::path& dir);

// ---- evaluation ----

inline constexpr double kSnrBinWidth = 2.5;
// Lower edge of the 2.5 dB bin holding snr_db; +inf stays +inf.
double snr_bin(double snr_db);

// Receiver estimates for one sample (model output or a constructed oracle).
using Estimator = std::function<dpn::InferResult(const LabeledSample&)>;
Estimator model_estimator(const dpn::DpnModel& model);

// Ground-truth-derived receiver parameters: delta noise filter, true f0,
// matched filter for the true rolloff and sps, true timing, one-hot class.
RxParams oracle_rx_params(const LabeledSample& sample, std::size_t class_count);
Estimator oracle_estimator(std::size_t class_count);

struct ClassBin {
  double snr_lo = 0.0;
  std::size_t count = 0;
  std::size_t correct = 0;
  std::vector<std::vector<std::size_t>> confusion;  // [truth][predicted]

  double accuracy() const { return count == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(count); }
};

struct ClassificationReport {
  std::size_t class_count = 0;
  std::vector<ClassBin> bins;  // ascending SNR
  // Pools every bin with snr_lo >= snr_db.
  ClassBin pooled(double snr_db = -std::numeric_limits<double>::infinity()) const;
};

struct ClassPrediction {
  std::size_t truth = 0;
  std::size_t predicted = 0;
  double snr_db = 0.0;
};

ClassificationReport classification_report(std::span<const ClassPrediction> predictions, std::size_t class_count);
ClassificationReport eval_classification(const Estimator& estimator, std::span<const LabeledSample> samples,
                                         std::size_t class_count);

// Mean spacing between 0.5-threshold crossings; nullopt with fewer than two.
std::optional<double> estimate_sps(std::span<const double> z4_prob);
// |sps - sps_hat| / sps, 1 when no period can be extracted.
double timing_error(std::span<const double> z4_prob, double sps);

struct ParamBin {
  double snr_lo = 0.0;
  std::size_t count = 0;
  double z1_energy = 0.0;
  double z1_error_energy = 0.0;
  double f0_abs = 0.0;
  double f0_error_abs = 0.0;
  double timing_error_sum = 0.0;

  // +inf when the estimate is exact.
  double output_snr_db() const;
  double residual_cfo_ratio() const;
  double timing_error() const;
  ParamBin& operator+=(const ParamBin& o);
};

struct ParamReport {
  std::vector<ParamBin> bins;
  ParamBin pooled(double snr_db = -std::numeric_limits<double>::infinity()) const;
};

ParamReport eval_params(const Estimator& estimator, std::span<const LabeledSample> samples);

struct SerCell {
  ModulationScheme scheme = ModulationScheme::kQpsk;
  double snr_lo = 0.0;
  sigpath::SerCount dpn;
  sigpath::SerCount baseline;
};

struct SerReport {
  std::vector<SerCell> cells;  // sorted by scheme, then SNR
  sigpath::SerCount total_dpn() const;
  sigpath::SerCount total_baseline() const;
};

// Linear-modulation samples only. The estimator's filters and f0 drive the
// signal path; timing, phase and scheme are genie-supplied for both paths.
SerReport eval_ser(const Estimator& estimator, std::span<const LabeledSample> samples,
                   const sigpath::BaselineConfig& baseline = {});

struct ChunkReuseReport {
  std::size_t signals = 0;
  std::size_t length = 0;
  std::size_t chunk = 0;
  sigpath::SerCount reuse;
  sigpath::SerCount reestimate;
  double ser_difference = 0.0;  // mean over signals of SER(reuse) - SER(re-estimate)
  double standard_error = 0.0;
  std::uint64_t nn_flops_per_chunk = 0;
  std::uint64_t signal_flops_per_chunk = 0;
  std::uint64_t flops_reuse = 0;
  std::uint64_t flops_reestimate = 0;
  double measured_reduction = 0.0;   // chunks 2..n: re-estimate / reuse
  double predicted_reduction = 0.0;  // (nn + signal) / signal
};

// Long signals are cut into chunks. Re-estimate runs the model on every
// chunk; reuse runs it on chunk 1 only and feeds its parameters to the signal
// path of the rest. Timing and phase are genie-supplied per chunk.
ChunkReuseReport eval_chunk_reuse(const dpn::DpnModel& model, const waveform::DatasetSpec& spec, std::size_t signals,
                                  std::uint64_t seed, std::size_t chunk = 128);

struct AblationRow {
  int level = 0;
  std::string name;
  std::size_t epochs = 0;
  double best_validation_loss = 0.0;
  double accuracy = 0.0;
  double accuracy_high_snr = 0.0;  // SNR >= 10 dB
  std::size_t parameters = 0;
};

struct AblationReport {
  std::vector<AblationRow> rows;
  bool monotonic = false;  // accuracy non-decreasing DPN 0 -> full
};

AblationReport run_ablation(const TrainConfig& train_config, const dpn::DpnConfig& base,
                            std::span<const LabeledSample> test_set, const std::vector<int>& levels = {0, 1, 2, 3, 4});

}  // namespace dualpath::harness
