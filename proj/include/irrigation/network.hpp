#pragma once

#include <array>
#include <cmath>
#include <cstddef>

#include "irrigation/rulebase.hpp"

namespace irrigation::mlp {

inline constexpr std::size_t kInputs = 3;
inline constexpr std::size_t kHidden = 5;
inline constexpr std::size_t kOutputs = 3;
inline constexpr std::size_t kParameterCount =
    kHidden * kInputs + kHidden + kOutputs * kHidden + kOutputs;

using Input = std::array<double, kInputs>;
using Probabilities = std::array<double, kOutputs>;

// Output class order.
inline constexpr std::size_t kClassFull = 0;
inline constexpr std::size_t kClassHalf = 1;
inline constexpr std::size_t kClassOff = 2;

[[nodiscard]] constexpr std::size_t class_index(PumpDuty duty) noexcept {
  switch (duty) {
    case PumpDuty::Full:
      return kClassFull;
    case PumpDuty::Half:
      return kClassHalf;
    case PumpDuty::Off:
      break;
  }
  return kClassOff;
}

[[nodiscard]] constexpr PumpDuty duty_of_class(std::size_t index) noexcept {
  if (index == kClassFull) return PumpDuty::Full;
  if (index == kClassHalf) return PumpDuty::Half;
  return PumpDuty::Off;
}

/// Parameters of the 3-5-3 network. The shape is fixed by the types;
/// w_hidden[j][i] connects input i to hidden node j, w_out[k][j] hidden j to
/// output k.
struct NetworkWeights {
  std::array<std::array<double, kInputs>, kHidden> w_hidden{};
  std::array<double, kHidden> b_hidden{};
  std::array<std::array<double, kHidden>, kOutputs> w_out{};
  std::array<double, kOutputs> b_out{};

  using Flat = std::array<double, kParameterCount>;

  /// Order: w_hidden row-major, b_hidden, w_out row-major, b_out.
  [[nodiscard]] Flat flatten() const noexcept {
    Flat flat{};
    std::size_t n = 0;
    for (const auto& row : w_hidden)
      for (double v : row) flat[n++] = v;
    for (double v : b_hidden) flat[n++] = v;
    for (const auto& row : w_out)
      for (double v : row) flat[n++] = v;
    for (double v : b_out) flat[n++] = v;
    return flat;
  }

  [[nodiscard]] static NetworkWeights unflatten(const Flat& flat) noexcept {
    NetworkWeights w;
    std::size_t n = 0;
    for (auto& row : w.w_hidden)
      for (double& v : row) v = flat[n++];
    for (double& v : w.b_hidden) v = flat[n++];
    for (auto& row : w.w_out)
      for (double& v : row) v = flat[n++];
    for (double& v : w.b_out) v = flat[n++];
    return w;
  }

  [[nodiscard]] bool all_finite() const noexcept {
    for (double v : flatten())
      if (!std::isfinite(v)) return false;
    return true;
  }

  friend bool operator==(const NetworkWeights&, const NetworkWeights&) = default;
};

}  // namespace irrigation::mlp
