#include "kernel_abi.hpp"

namespace irrigation::simd::detail {

void forward_rows_scalar(const PackedWeights& w, const double* in, double* out,
                         size_type rows) noexcept {
  for (size_type r = 0; r < rows; ++r) forward_one(w, in + r * kIn, out + r * kOut);
}

}  // namespace irrigation::simd::detail
