#include <cstdlib>
#include <stdexcept>
#include <string>

#include "irrigation/simd.hpp"
#include "kernel_abi.hpp"

namespace irrigation::simd {

namespace {

detail::PackedWeights pack(const mlp::NetworkWeights& w) noexcept {
  detail::PackedWeights p{};
  for (std::size_t j = 0; j < mlp::kHidden; ++j) {
    for (std::size_t i = 0; i < mlp::kInputs; ++i) p.w_hidden[j * mlp::kInputs + i] = w.w_hidden[j][i];
    p.b_hidden[j] = w.b_hidden[j];
  }
  for (std::size_t k = 0; k < mlp::kOutputs; ++k) {
    for (std::size_t j = 0; j < mlp::kHidden; ++j) p.w_out[k * mlp::kHidden + j] = w.w_out[k][j];
    p.b_out[k] = w.b_out[k];
  }
  return p;
}

Backend resolve_active() noexcept {
  if (const char* env = std::getenv("IRRIGATION_SIMD")) {
    if (auto requested = parse_backend(env); requested && is_supported(*requested)) {
      return *requested;
    }
  }
  return best_backend();
}

}  // namespace

std::string_view to_string(Backend backend) noexcept {
  switch (backend) {
    case Backend::Avx2:
      return "avx2";
    case Backend::Neon:
      return "neon";
    case Backend::Scalar:
      break;
  }
  return "scalar";
}

std::optional<Backend> parse_backend(std::string_view name) noexcept {
  for (Backend b : {Backend::Scalar, Backend::Avx2, Backend::Neon}) {
    if (to_string(b) == name) return b;
  }
  return std::nullopt;
}

bool is_supported(Backend backend) noexcept {
  switch (backend) {
    case Backend::Scalar:
      return true;
    case Backend::Avx2:
#if (defined(__x86_64__) || defined(_M_X64)) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Backend::Neon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Backend best_backend() noexcept {
  if (is_supported(Backend::Avx2)) return Backend::Avx2;
  if (is_supported(Backend::Neon)) return Backend::Neon;
  return Backend::Scalar;
}

Backend active_backend() noexcept {
  static const Backend active = resolve_active();
  return active;
}

std::vector<Backend> supported_backends() {
  std::vector<Backend> out;
  for (Backend b : {Backend::Scalar, Backend::Avx2, Backend::Neon}) {
    if (is_supported(b)) out.push_back(b);
  }
  return out;
}

void forward_batch(const mlp::NetworkWeights& weights, std::span<const double> inputs,
                   std::span<double> probabilities, Backend backend) {
  if (inputs.size() % mlp::kInputs != 0) {
    throw std::invalid_argument("forward_batch: input length is not a multiple of 3");
  }
  const std::size_t rows = inputs.size() / mlp::kInputs;
  if (probabilities.size() != rows * mlp::kOutputs) {
    throw std::invalid_argument("forward_batch: output length does not match row count");
  }
  if (!is_supported(backend)) {
    throw std::invalid_argument("forward_batch: backend " + std::string(to_string(backend)) +
                                " not supported on this CPU");
  }
  const detail::PackedWeights packed = pack(weights);
  switch (backend) {
    case Backend::Avx2:
#if defined(__x86_64__) || defined(_M_X64)
      detail::forward_rows_avx2(packed, inputs.data(), probabilities.data(), rows);
      return;
#else
      break;
#endif
    case Backend::Neon:
#if defined(__aarch64__)
      detail::forward_rows_neon(packed, inputs.data(), probabilities.data(), rows);
      return;
#else
      break;
#endif
    case Backend::Scalar:
      break;
  }
  detail::forward_rows_scalar(packed, inputs.data(), probabilities.data(), rows);
}

mlp::Probabilities forward_row(const mlp::NetworkWeights& weights, const mlp::Input& x) noexcept {
  const detail::PackedWeights packed = pack(weights);
  mlp::Probabilities p{};
  detail::forward_one(packed, x.data(), p.data());
  return p;
}

}  // namespace irrigation::simd
