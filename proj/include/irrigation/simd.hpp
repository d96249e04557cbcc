#pragma once

// Batched network evaluation with runtime ISA selection. All backends produce
// bitwise-identical results; they differ only in throughput.

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "irrigation/network.hpp"

namespace irrigation::simd {

enum class Backend { Scalar, Avx2, Neon };

[[nodiscard]] std::string_view to_string(Backend backend) noexcept;
[[nodiscard]] std::optional<Backend> parse_backend(std::string_view name) noexcept;

/// Whether this binary carries the variant and the running CPU can execute it.
[[nodiscard]] bool is_supported(Backend backend) noexcept;

/// Fastest supported backend on this CPU.
[[nodiscard]] Backend best_backend() noexcept;

/// best_backend(), unless IRRIGATION_SIMD names a supported backend. Resolved
/// once per process.
[[nodiscard]] Backend active_backend() noexcept;

[[nodiscard]] std::vector<Backend> supported_backends();

/// inputs holds rows of 3 features, probabilities receives rows of 3 class
/// probabilities (class order Full, Half, Off). Sizes must match. Throws
/// std::invalid_argument on size mismatch or an unsupported backend.
void forward_batch(const mlp::NetworkWeights& weights, std::span<const double> inputs,
                   std::span<double> probabilities, Backend backend);

inline void forward_batch(const mlp::NetworkWeights& weights, std::span<const double> inputs,
                          std::span<double> probabilities) {
  forward_batch(weights, inputs, probabilities, active_backend());
}

/// Single-row scalar reference.
[[nodiscard]] mlp::Probabilities forward_row(const mlp::NetworkWeights& weights,
                                             const mlp::Input& x) noexcept;

}  // namespace irrigation::simd
