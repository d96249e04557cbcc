#pragma once

// 3-5-3 feedforward controller: sigmoid hidden layer, softmax output over the
// duty classes (Full, Half, Off), trained by minibatch SGD on cross-entropy
// against labels produced by the rule base.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "irrigation/network.hpp"
#include "irrigation/rulebase.hpp"
#include "irrigation/simd.hpp"

namespace irrigation::mlp {

struct Range {
  double min = 0.0;
  double max = 1.0;
  friend bool operator==(const Range&, const Range&) = default;
};

struct NormalizationRanges {
  Range temperature{0.0, 50.0};
  Range humidity{0.0, 100.0};
  Range soil_moisture{0.0, 100.0};

  /// Throws std::invalid_argument unless min < max for every input.
  void validate() const;

  friend bool operator==(const NormalizationRanges&, const NormalizationRanges&) = default;
};

struct TrainingConfig {
  double learning_rate = 0.1;
  int epochs = 2000;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;
  double target_accuracy = 0.99;

  void validate() const;
};

struct Example {
  Input input{};
  Probabilities label{};  // one-hot
};

struct Dataset {
  std::vector<Example> rows;

  [[nodiscard]] std::size_t size() const noexcept { return rows.size(); }
  [[nodiscard]] bool empty() const noexcept { return rows.empty(); }
  /// Row-major copy of all inputs, 3 doubles per row.
  [[nodiscard]] std::vector<double> packed_inputs() const;
};

/// Trained parameters plus the preprocessing they were trained with.
struct Model {
  NetworkWeights weights;
  NormalizationRanges ranges;
  std::uint64_t seed = 0;

  friend bool operator==(const Model&, const Model&) = default;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Min-max scaling into [0,1]^3, clamped. Validates the reading.
[[nodiscard]] Input normalize(const SensorReading& reading, const NormalizationRanges& ranges);

/// Class probabilities. Throws std::invalid_argument for non-finite weights or input.
[[nodiscard]] Probabilities forward(const NetworkWeights& weights, const Input& x);

struct LossAndGradients {
  double loss = 0.0;
  NetworkWeights gradients;
};

/// Mean cross-entropy over the batch and its exact gradient.
[[nodiscard]] LossAndGradients loss_and_gradients(const NetworkWeights& weights,
                                                  std::span<const Example> batch);

/// Mean cross-entropy only.
[[nodiscard]] double loss(const NetworkWeights& weights, std::span<const Example> batch);

/// Raw readings on a uniform grid spanning the normalization ranges,
/// temperature-major. Requires points_per_axis >= 2.
[[nodiscard]] std::vector<SensorReading> grid_readings(int points_per_axis,
                                                       const NormalizationRanges& ranges);

/// grid_readings() labelled by rules::classify, then normalized.
[[nodiscard]] Dataset generate_dataset(int points_per_axis, const NormalizationRanges& ranges);

struct TrainingResult {
  NetworkWeights weights;
  std::vector<double> loss_history;  // mean minibatch loss per epoch
  int epochs_run = 0;
  double train_accuracy = 0.0;
};

[[nodiscard]] TrainingResult train(const Dataset& dataset, const TrainingConfig& config);

/// Argmax with ties resolved toward less water (Off, then Half).
[[nodiscard]] PumpDuty duty_from_probabilities(const Probabilities& p) noexcept;

[[nodiscard]] PumpDuty predict_duty(const NetworkWeights& weights, const SensorReading& reading,
                                    const NormalizationRanges& ranges);

/// Batched prediction over pre-normalized rows.
[[nodiscard]] std::vector<PumpDuty> predict_batch(const NetworkWeights& weights,
                                                  std::span<const double> packed_inputs,
                                                  simd::Backend backend = simd::active_backend());

/// Fraction of dataset rows whose predicted duty matches the label.
[[nodiscard]] double accuracy(const NetworkWeights& weights, const Dataset& dataset,
                              simd::Backend backend = simd::active_backend());

}  // namespace irrigation::mlp
