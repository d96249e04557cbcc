// AArch64 variant; NEON is part of the base ISA there, so no runtime probe.

#if defined(__aarch64__)

#include <arm_neon.h>

#include "kernel_abi.hpp"

namespace irrigation::simd::detail {

namespace {

constexpr size_type kLanes = 2;

inline float64x2_t exp_lanes(float64x2_t v) noexcept {
  double tmp[kLanes];
  vst1q_f64(tmp, v);
  for (double& t : tmp) t = __builtin_exp(t);
  return vld1q_f64(tmp);
}

inline float64x2_t load_column(const double* rows, size_type i) noexcept {
  const double pair[kLanes] = {rows[i], rows[kIn + i]};
  return vld1q_f64(pair);
}

}  // namespace

void forward_rows_neon(const PackedWeights& w, const double* in, double* out,
                       size_type rows) noexcept {
  const float64x2_t one = vdupq_n_f64(1.0);

  size_type r = 0;
  for (; r + kLanes <= rows; r += kLanes) {
    const double* block = in + r * kIn;
    float64x2_t x[kIn];
    for (size_type i = 0; i < kIn; ++i) x[i] = load_column(block, i);

    float64x2_t h[kHid];
    for (size_type j = 0; j < kHid; ++j) {
      float64x2_t a = vdupq_n_f64(w.b_hidden[j]);
      for (size_type i = 0; i < kIn; ++i)
        a = vaddq_f64(a, vmulq_f64(vdupq_n_f64(w.w_hidden[j * kIn + i]), x[i]));
      h[j] = vdivq_f64(one, vaddq_f64(one, exp_lanes(vnegq_f64(a))));
    }

    float64x2_t z[kOut];
    for (size_type k = 0; k < kOut; ++k) {
      float64x2_t a = vdupq_n_f64(w.b_out[k]);
      for (size_type j = 0; j < kHid; ++j)
        a = vaddq_f64(a, vmulq_f64(vdupq_n_f64(w.w_out[k * kHid + j]), h[j]));
      z[k] = a;
    }

    float64x2_t m = z[0];
    m = vbslq_f64(vcgtq_f64(z[1], m), z[1], m);
    m = vbslq_f64(vcgtq_f64(z[2], m), z[2], m);

    float64x2_t e[kOut];
    for (size_type k = 0; k < kOut; ++k) e[k] = exp_lanes(vsubq_f64(z[k], m));
    float64x2_t s = vaddq_f64(e[0], e[1]);
    s = vaddq_f64(s, e[2]);

    double p[kOut][kLanes];
    for (size_type k = 0; k < kOut; ++k) vst1q_f64(p[k], vdivq_f64(e[k], s));
    double* dst = out + r * kOut;
    for (size_type l = 0; l < kLanes; ++l)
      for (size_type k = 0; k < kOut; ++k) dst[l * kOut + k] = p[k][l];
  }

  for (; r < rows; ++r) forward_one(w, in + r * kIn, out + r * kOut);
}

}  // namespace irrigation::simd::detail

#endif
