#include "irrigation/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "irrigation/random.hpp"

namespace irrigation::mlp {

namespace {

void check_range(const char* name, Range r) {
  if (!(std::isfinite(r.min) && std::isfinite(r.max) && r.min < r.max)) {
    throw std::invalid_argument(std::string("normalization range for ") + name +
                                " must satisfy min < max");
  }
}

double scale(double value, Range r) { return std::clamp((value - r.min) / (r.max - r.min), 0.0, 1.0); }

double sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }

struct Activations {
  std::array<double, kHidden> hidden{};
  std::array<double, kOutputs> log_prob{};
  Probabilities prob{};
};

Activations activate(const NetworkWeights& w, const Input& x) {
  Activations act;
  for (std::size_t j = 0; j < kHidden; ++j) {
    double a = w.b_hidden[j];
    for (std::size_t i = 0; i < kInputs; ++i) a = a + w.w_hidden[j][i] * x[i];
    act.hidden[j] = sigmoid(a);
  }
  std::array<double, kOutputs> z{};
  for (std::size_t k = 0; k < kOutputs; ++k) {
    double a = w.b_out[k];
    for (std::size_t j = 0; j < kHidden; ++j) a = a + w.w_out[k][j] * act.hidden[j];
    z[k] = a;
  }
  const double m = std::max({z[0], z[1], z[2]});
  double s = 0.0;
  for (std::size_t k = 0; k < kOutputs; ++k) s += std::exp(z[k] - m);
  const double log_s = std::log(s);
  for (std::size_t k = 0; k < kOutputs; ++k) {
    act.log_prob[k] = z[k] - m - log_s;
    act.prob[k] = std::exp(act.log_prob[k]);
  }
  return act;
}

double cross_entropy(const Activations& act, const Probabilities& label) {
  double l = 0.0;
  for (std::size_t k = 0; k < kOutputs; ++k) {
    if (label[k] != 0.0) l -= label[k] * act.log_prob[k];
  }
  return l;
}

void require_finite(const NetworkWeights& w) {
  if (!w.all_finite()) throw std::invalid_argument("network weights contain non-finite values");
}

NetworkWeights random_init(Rng& rng) {
  NetworkWeights::Flat flat{};
  for (double& v : flat) v = rng.uniform(-0.5, 0.5);
  return NetworkWeights::unflatten(flat);
}

}  // namespace

void NormalizationRanges::validate() const {
  check_range("temperature", temperature);
  check_range("humidity", humidity);
  check_range("soil_moisture", soil_moisture);
}

void TrainingConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw std::invalid_argument("learning_rate must be positive");
  if (epochs <= 0) throw std::invalid_argument("epochs must be positive");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  if (!(target_accuracy > 0.0 && target_accuracy <= 1.0))
    throw std::invalid_argument("target_accuracy must lie in (0, 1]");
}

std::vector<double> Dataset::packed_inputs() const {
  std::vector<double> packed;
  packed.reserve(rows.size() * kInputs);
  for (const Example& e : rows) packed.insert(packed.end(), e.input.begin(), e.input.end());
  return packed;
}

Input normalize(const SensorReading& reading, const NormalizationRanges& ranges) {
  validate(reading);
  return Input{scale(reading.temperature_c, ranges.temperature),
               scale(reading.humidity_pct, ranges.humidity),
               scale(reading.soil_moisture_pct, ranges.soil_moisture)};
}

Probabilities forward(const NetworkWeights& weights, const Input& x) {
  require_finite(weights);
  for (double v : x) {
    if (!std::isfinite(v)) throw std::invalid_argument("network input is not finite");
  }
  return simd::forward_row(weights, x);
}

LossAndGradients loss_and_gradients(const NetworkWeights& weights, std::span<const Example> batch) {
  if (batch.empty()) throw std::invalid_argument("loss_and_gradients: empty batch");
  require_finite(weights);

  LossAndGradients out;
  NetworkWeights& g = out.gradients;
  double total = 0.0;
  for (const Example& ex : batch) {
    const Activations act = activate(weights, ex.input);
    total += cross_entropy(act, ex.label);

    // Softmax + cross-entropy: dL/dz = p - y.
    std::array<double, kOutputs> dz{};
    for (std::size_t k = 0; k < kOutputs; ++k) dz[k] = act.prob[k] - ex.label[k];

    std::array<double, kHidden> dh{};
    for (std::size_t k = 0; k < kOutputs; ++k) {
      g.b_out[k] += dz[k];
      for (std::size_t j = 0; j < kHidden; ++j) {
        g.w_out[k][j] += dz[k] * act.hidden[j];
        dh[j] += weights.w_out[k][j] * dz[k];
      }
    }
    for (std::size_t j = 0; j < kHidden; ++j) {
      const double da = dh[j] * act.hidden[j] * (1.0 - act.hidden[j]);
      g.b_hidden[j] += da;
      for (std::size_t i = 0; i < kInputs; ++i) g.w_hidden[j][i] += da * ex.input[i];
    }
  }

  const double n = static_cast<double>(batch.size());
  out.loss = total / n;
  NetworkWeights::Flat flat = g.flatten();
  for (double& v : flat) v /= n;
  g = NetworkWeights::unflatten(flat);
  return out;
}

double loss(const NetworkWeights& weights, std::span<const Example> batch) {
  if (batch.empty()) throw std::invalid_argument("loss: empty batch");
  require_finite(weights);
  double total = 0.0;
  for (const Example& ex : batch) total += cross_entropy(activate(weights, ex.input), ex.label);
  return total / static_cast<double>(batch.size());
}

std::vector<SensorReading> grid_readings(int points_per_axis, const NormalizationRanges& ranges) {
  if (points_per_axis < 2) throw std::invalid_argument("grid needs at least 2 points per axis");
  ranges.validate();
  const auto axis = [points_per_axis](Range r) {
    std::vector<double> values(static_cast<std::size_t>(points_per_axis));
    const double steps = static_cast<double>(points_per_axis - 1);
    for (int i = 0; i < points_per_axis; ++i) {
      values[static_cast<std::size_t>(i)] = r.min + (r.max - r.min) * static_cast<double>(i) / steps;
    }
    return values;
  };
  const auto ts = axis(ranges.temperature);
  const auto hs = axis(ranges.humidity);
  const auto ms = axis(ranges.soil_moisture);

  std::vector<SensorReading> grid;
  grid.reserve(ts.size() * hs.size() * ms.size());
  for (double t : ts)
    for (double h : hs)
      for (double m : ms) grid.push_back(SensorReading{t, h, m, 0});
  return grid;
}

Dataset generate_dataset(int points_per_axis, const NormalizationRanges& ranges) {
  Dataset ds;
  const auto grid = grid_readings(points_per_axis, ranges);
  ds.rows.reserve(grid.size());
  for (const SensorReading& r : grid) {
    Example ex;
    ex.input = normalize(r, ranges);
    ex.label[class_index(rules::classify(r))] = 1.0;
    ds.rows.push_back(ex);
  }
  return ds;
}

TrainingResult train(const Dataset& dataset, const TrainingConfig& config) {
  config.validate();
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");

  Rng rng(config.seed);
  TrainingResult result;
  NetworkWeights::Flat params = random_init(rng).flatten();

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Example> batch;
  batch.reserve(config.batch_size);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.below(i)]);
    }

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) batch.push_back(dataset.rows[order[i]]);

      const LossAndGradients lg = loss_and_gradients(NetworkWeights::unflatten(params), batch);
      if (!std::isfinite(lg.loss)) {
        throw TrainingDiverged("training diverged at epoch " + std::to_string(epoch) +
                               ": non-finite loss");
      }
      epoch_loss += lg.loss * static_cast<double>(batch.size());
      const NetworkWeights::Flat grad = lg.gradients.flatten();
      for (std::size_t p = 0; p < params.size(); ++p) params[p] -= config.learning_rate * grad[p];
    }

    result.loss_history.push_back(epoch_loss / static_cast<double>(dataset.size()));
    result.weights = NetworkWeights::unflatten(params);
    if (!result.weights.all_finite()) {
      throw TrainingDiverged("training diverged at epoch " + std::to_string(epoch) +
                             ": non-finite weights");
    }
    result.epochs_run = epoch + 1;
    result.train_accuracy = accuracy(result.weights, dataset);
    if (result.train_accuracy >= config.target_accuracy) break;
  }
  return result;
}

PumpDuty duty_from_probabilities(const Probabilities& p) noexcept {
  if (p[kClassOff] >= p[kClassHalf] && p[kClassOff] >= p[kClassFull]) return PumpDuty::Off;
  if (p[kClassHalf] >= p[kClassFull]) return PumpDuty::Half;
  return PumpDuty::Full;
}

PumpDuty predict_duty(const NetworkWeights& weights, const SensorReading& reading,
                      const NormalizationRanges& ranges) {
  return duty_from_probabilities(forward(weights, normalize(reading, ranges)));
}

std::vector<PumpDuty> predict_batch(const NetworkWeights& weights,
                                    std::span<const double> packed_inputs, simd::Backend backend) {
  require_finite(weights);
  std::vector<double> probs(packed_inputs.size() / kInputs * kOutputs);
  simd::forward_batch(weights, packed_inputs, probs, backend);
  std::vector<PumpDuty> duties;
  duties.reserve(probs.size() / kOutputs);
  for (std::size_t r = 0; r < probs.size(); r += kOutputs) {
    duties.push_back(duty_from_probabilities({probs[r], probs[r + 1], probs[r + 2]}));
  }
  return duties;
}

double accuracy(const NetworkWeights& weights, const Dataset& dataset, simd::Backend backend) {
  if (dataset.empty()) return 0.0;
  const std::vector<PumpDuty> predicted = predict_batch(weights, dataset.packed_inputs(), backend);
  std::size_t hits = 0;
  for (std::size_t r = 0; r < predicted.size(); ++r) {
    const Probabilities& label = dataset.rows[r].label;
    const auto truth = static_cast<std::size_t>(std::max_element(label.begin(), label.end()) - label.begin());
    if (class_index(predicted[r]) == truth) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

}  // namespace irrigation::mlp
