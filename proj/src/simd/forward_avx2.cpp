// Compiled with -mavx2 (and deliberately without -mfma). Only reached after a
// runtime CPU check.

#include <immintrin.h>

#include "kernel_abi.hpp"

namespace irrigation::simd::detail {

namespace {

constexpr size_type kLanes = 4;

// libm exp per lane; the affine and softmax arithmetic stays vectorized.
inline __m256d exp_lanes(__m256d v) noexcept {
  alignas(32) double tmp[kLanes];
  _mm256_store_pd(tmp, v);
  for (double& t : tmp) t = __builtin_exp(t);
  return _mm256_load_pd(tmp);
}

// Column i of four consecutive rows.
inline __m256d load_column(const double* rows, size_type stride, size_type i) noexcept {
  return _mm256_set_pd(rows[3 * stride + i], rows[2 * stride + i], rows[stride + i], rows[i]);
}

}  // namespace

void forward_rows_avx2(const PackedWeights& w, const double* in, double* out,
                       size_type rows) noexcept {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d sign = _mm256_set1_pd(-0.0);

  size_type r = 0;
  for (; r + kLanes <= rows; r += kLanes) {
    const double* block = in + r * kIn;
    __m256d x[kIn];
    for (size_type i = 0; i < kIn; ++i) x[i] = load_column(block, kIn, i);

    __m256d h[kHid];
    for (size_type j = 0; j < kHid; ++j) {
      __m256d a = _mm256_set1_pd(w.b_hidden[j]);
      for (size_type i = 0; i < kIn; ++i)
        a = _mm256_add_pd(a, _mm256_mul_pd(_mm256_set1_pd(w.w_hidden[j * kIn + i]), x[i]));
      const __m256d e = exp_lanes(_mm256_xor_pd(a, sign));
      h[j] = _mm256_div_pd(one, _mm256_add_pd(one, e));
    }

    __m256d z[kOut];
    for (size_type k = 0; k < kOut; ++k) {
      __m256d a = _mm256_set1_pd(w.b_out[k]);
      for (size_type j = 0; j < kHid; ++j)
        a = _mm256_add_pd(a, _mm256_mul_pd(_mm256_set1_pd(w.w_out[k * kHid + j]), h[j]));
      z[k] = a;
    }

    __m256d m = z[0];
    m = _mm256_blendv_pd(m, z[1], _mm256_cmp_pd(z[1], m, _CMP_GT_OQ));
    m = _mm256_blendv_pd(m, z[2], _mm256_cmp_pd(z[2], m, _CMP_GT_OQ));

    __m256d e[kOut];
    for (size_type k = 0; k < kOut; ++k) e[k] = exp_lanes(_mm256_sub_pd(z[k], m));
    __m256d s = _mm256_add_pd(e[0], e[1]);
    s = _mm256_add_pd(s, e[2]);

    alignas(32) double p[kOut][kLanes];
    for (size_type k = 0; k < kOut; ++k) _mm256_store_pd(p[k], _mm256_div_pd(e[k], s));
    double* dst = out + r * kOut;
    for (size_type l = 0; l < kLanes; ++l)
      for (size_type k = 0; k < kOut; ++k) dst[l * kOut + k] = p[k][l];
  }

  for (; r < rows; ++r) forward_one(w, in + r * kIn, out + r * kOut);
}

}  // namespace irrigation::simd::detail
