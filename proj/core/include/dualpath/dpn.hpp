#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dualpath/losses.hpp"
#include "dualpath/nn/tape.hpp"
#include "dualpath/sigcore.hpp"
#include "dualpath/waveform.hpp"

namespace dualpath::dpn {

// Which signal-path stages (and the timing module) are active.
struct StageMask {
  bool noise = true;
  bool cfo = true;
  bool eqmf = true;
  bool timing = true;

  // 0..3 select DPN 0..3; 4 is the full network.
  static StageMask ablation(int level);
  int level() const;
  bool operator==(const StageMask&) const = default;
};

enum class TimingInput {
  kConstant,  // second LSTM runs on a constant input from the first one's state
  kFeatures,  // second LSTM also reads the features of z3_hat
};

enum class ClassifierInput { kY, kZ1, kZ2, kZ3 };

struct DpnConfig {
  StageMask stages;
  std::size_t feature_channels = 32;
  std::size_t n_residual_blocks = 3;
  std::size_t kernel_size = 5;
  std::size_t head_units = 32;  // hidden width of the frequency and class heads
  std::size_t lstm1_units = 32;
  std::size_t lstm2_units = 32;
  std::size_t class_count = 19;
  TimingInput timing_input = TimingInput::kConstant;
  ClassifierInput classifier_input = ClassifierInput::kZ3;
  bool inject_noise_before_eqmf = false;
  waveform::Interval injected_snr_db{10.0, 40.0};
  double f0_scale = 0.01;     // frequency head output is multiplied by this
  // Frequency head also reads arg sum u[k] conj(u[k-L]) / (2 pi power L) of
  // u = z1_hat^power at these lags; empty turns the feature off.
  int freq_power = 4;
  std::vector<std::size_t> freq_lags{4, 8, 12, 16, 20};
  double aux_f0_weight = 0.0;  // > 0 adds ((f0_hat - f0) / f0_scale)^2
  double tap_init_scale = 0.01;  // weight scale of the tap heads around their delta bias
  std::uint64_t init_seed = 1;

  void validate() const;
};

void to_json(nlohmann::json& j, const DpnConfig& c);
void from_json(const nlohmann::json& j, DpnConfig& c);

// Graph handles of one forward pass.
struct Forward {
  nn::Var z1_hat, z2_hat, z3_hat;  // 2xN
  nn::Var z4_hat;                  // [N] probabilities
  nn::Var z5_hat;                  // [classes] probabilities
  nn::Var f0_hat;                  // [1]
  nn::Var noise_taps, eqmf_taps;   // 2x64, 2x65
};

class DpnModel {
 public:
  explicit DpnModel(DpnConfig config);

  const DpnConfig& config() const { return config_; }
  nn::ParameterStore& params() { return params_; }
  const nn::ParameterStore& params() const { return params_; }
  std::size_t parameter_count() const { return params_.scalar_count(); }

  // Builds the graph for y. With `noise_rng`, AWGN is added to z2_hat before
  // the Eq+MF stage when the config asks for it.
  Forward forward(nn::Tape& tape, std::span<const Complex> y, waveform::Rng* noise_rng = nullptr) const;

 private:
  nn::Var features(nn::Tape& tape, nn::Var signal) const;
  nn::Var taps_head(nn::Tape& tape, nn::Var feats, const std::string& name, std::size_t taps) const;

  DpnConfig config_;
  nn::ParameterStore params_;
};

struct InferResult {
  RxParams rx;
  ComplexSequence z1_hat, z2_hat, z3_hat;
  std::vector<double> z4_prob;
};

// Forward pass without gradients, packed into reusable receiver parameters.
InferResult infer(const DpnModel& model, std::span<const Complex> y);

struct StepResult {
  losses::Components components{};
  double total = 0.0;
  double aux_f0 = 0.0;
};

// Builds the training graph for one sample on `tape` and returns its total
// loss node; components are written to `out`.
nn::Var training_forward(const DpnModel& model, const LabeledSample& sample, const losses::LossWeights& weights,
                         nn::Tape& tape, waveform::Rng* noise_rng, StepResult& out);

// training_forward + backward; gradients are added into `grads`.
StepResult accumulate_gradients(const DpnModel& model, const LabeledSample& sample,
                                const losses::LossWeights& weights, waveform::Rng* noise_rng, nn::Gradients& grads);

// Multiply-add count of one forward pass on an n-sample input. Conv and
// dense layers count 2 per weight use plus one per bias; an LSTM step counts
// its gate products, biases and 5H elementwise updates; pooling counts C*L.
std::uint64_t count_nn_flops(const DpnConfig& config, std::size_t n_samples = 128);

// Threshold at 0.5.
TimingSignal binarize_timing(std::span<const double> probabilities);

}  // namespace dualpath::dpn
