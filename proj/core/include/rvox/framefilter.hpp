#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "rvox/reconstruct.hpp"

namespace rvox::filter {

enum class PoolKind : std::uint8_t { Average = 0, Max = 1 };
enum class Verdict : std::uint8_t { Regular = 0, Ambiguous = 1 };
enum class StreamFlag : std::uint8_t { Fresh = 0, Held = 1, Unverified = 2 };

const char* to_string(PoolKind k);
const char* to_string(Verdict v);
const char* to_string(StreamFlag f);

/// Square single-channel image with values in [0, 1]. The stream pipeline
/// always uses 32x32; smaller sizes exist for reduced test instances.
struct ClassifierInput {
  std::size_t hw = 32;
  std::vector<double> values;  // row-major [hw][hw]

  double& at(std::size_t y, std::size_t x) { return values[y * hw + x]; }
  double at(std::size_t y, std::size_t x) const { return values[y * hw + x]; }
};

/// Layer sizing of the two-stage conv net. The default is the production
/// shape (32x32 input, channels 1 -> 8 -> 16, 3x3 kernels, 2x2 pools, global
/// pool, fully connected to 2 logits). Reduced shapes reuse the same layer
/// code for gradient checks.
struct NetShape {
  std::size_t input_hw = 32;
  std::size_t c1_out = 8;
  std::size_t c2_out = 16;
  static constexpr std::size_t kKernel = 3;

  std::size_t conv1_hw() const { return input_hw - kKernel + 1; }
  std::size_t pool1_hw() const { return conv1_hw() / 2; }
  std::size_t conv2_hw() const { return pool1_hw() - kKernel + 1; }
  std::size_t pool2_hw() const { return conv2_hw() / 2; }
  std::size_t feature_dim() const { return c2_out; }
  std::size_t param_count() const;
  void validate() const;  // throws std::invalid_argument

  bool operator==(const NetShape&) const = default;
};

struct ClassifierModel {
  NetShape shape;
  PoolKind pooling = PoolKind::Max;
  std::vector<double> conv1_w;  // [c1_out][1][3][3]
  std::vector<double> conv1_b;  // [c1_out]
  std::vector<double> conv2_w;  // [c2_out][c1_out][3][3]
  std::vector<double> conv2_b;  // [c2_out]
  std::vector<double> fc_w;     // [2][feature_dim]
  std::vector<double> fc_b;     // [2]
};

/// Seeded init: every parameter uniform in [-a, a] with a = 1/sqrt(fan_in).
ClassifierModel make_classifier(PoolKind pooling, std::uint64_t seed,
                                const NetShape& shape = {});

/// Peak-theta heatmap slice, bilinearly resampled to 32x32 and divided by
/// the slice maximum (an all-zero slice stays all-zero).
ClassifierInput extract_input(const recon::PowerGrid& grid);

std::array<double, 2> forward(const ClassifierModel& model,
                              const ClassifierInput& input);

/// -log(exp(x[label]) / sum_j exp(x[j])), evaluated in the log-sum-exp
/// stable form. label is 0 or 1.
double cross_entropy(const std::array<double, 2>& logits, int label);

struct Gradients {
  std::vector<double> conv1_w, conv1_b, conv2_w, conv2_b, fc_w, fc_b;
};

Gradients zero_gradients(const NetShape& shape);

struct LabeledInput {
  ClassifierInput input;
  int label = 0;  // 0 = Regular, 1 = Ambiguous
};

/// Forward + backward for one sample; gradients are accumulated into `grads`.
/// Returns the sample loss. Exposed so tests can compare backprop against
/// central finite differences.
double loss_and_gradients(const ClassifierModel& model, const LabeledInput& sample,
                          Gradients& grads);

struct TrainConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::size_t lr_step_epochs = 7;  // multiply lr by gamma every 7 epochs
  double lr_gamma = 0.1;
  std::size_t minibatch_size = 16;
  std::size_t epochs = 20;
  std::uint64_t rng_seed = 0;
};

struct EpochStats {
  std::size_t epoch = 0;      // 0-based
  double running_loss = 0.0;  // mean sample loss over the epoch
  double accuracy = 0.0;      // fraction of correct argmax over the epoch
};

/// Minibatch SGD with momentum and the step learning-rate schedule. The
/// shuffle order and all arithmetic are seeded and fixed, so identical
/// (model, dataset, config) runs produce bit-identical parameters.
/// Requires a non-empty dataset containing both labels.
std::vector<EpochStats> train(ClassifierModel& model,
                              const std::vector<LabeledInput>& dataset,
                              const TrainConfig& cfg);

/// Argmax of the forward logits; a tie counts as Regular.
Verdict classify(const ClassifierModel& model, const ClassifierInput& input);

struct StreamState {
  std::optional<recon::PowerGrid> last_regular;
  std::size_t held_count = 0;
};

struct StreamResult {
  recon::PowerGrid output;
  StreamFlag flag = StreamFlag::Fresh;
};

/// Frame-hold policy: a Regular frame passes through and becomes the new
/// hold target; an Ambiguous frame is replaced by the last Regular one, or
/// passes through flagged Unverified when no Regular frame has been seen.
StreamResult stream_filter(StreamState& state, const recon::PowerGrid& frame,
                           Verdict verdict);

}  // namespace rvox::filter
