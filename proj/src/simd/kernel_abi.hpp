#pragma once

// Internal ABI shared by the batched forward kernels. Kept free of library
// headers so each ISA translation unit only depends on its intrinsics header.
//
// Every variant must perform exactly the operation sequence of forward_one()
// per row (same association order, no FMA). The results are then bitwise
// identical to the scalar reference, which the equivalence tests check.

namespace irrigation::simd::detail {

using size_type = decltype(sizeof(0));

inline constexpr size_type kIn = 3;
inline constexpr size_type kHid = 5;
inline constexpr size_type kOut = 3;

struct PackedWeights {
  double w_hidden[kHid * kIn];  // row-major, [hidden][input]
  double b_hidden[kHid];
  double w_out[kOut * kHid];    // row-major, [output][hidden]
  double b_out[kOut];
};

inline double sigmoid(double a) noexcept { return 1.0 / (1.0 + __builtin_exp(-a)); }

/// Reference evaluation of one row: x[3] -> probabilities p[3].
inline void forward_one(const PackedWeights& w, const double* x, double* p) noexcept {
  double h[kHid];
  for (size_type j = 0; j < kHid; ++j) {
    double a = w.b_hidden[j];
    for (size_type i = 0; i < kIn; ++i) a = a + w.w_hidden[j * kIn + i] * x[i];
    h[j] = sigmoid(a);
  }
  double z[kOut];
  for (size_type k = 0; k < kOut; ++k) {
    double a = w.b_out[k];
    for (size_type j = 0; j < kHid; ++j) a = a + w.w_out[k * kHid + j] * h[j];
    z[k] = a;
  }
  double m = z[0];
  if (z[1] > m) m = z[1];
  if (z[2] > m) m = z[2];
  double e[kOut];
  for (size_type k = 0; k < kOut; ++k) e[k] = __builtin_exp(z[k] - m);
  double s = e[0] + e[1];
  s = s + e[2];
  for (size_type k = 0; k < kOut; ++k) p[k] = e[k] / s;
}

void forward_rows_scalar(const PackedWeights& w, const double* in, double* out,
                         size_type rows) noexcept;

#if defined(__x86_64__) || defined(_M_X64)
void forward_rows_avx2(const PackedWeights& w, const double* in, double* out,
                       size_type rows) noexcept;
#endif

#if defined(__aarch64__)
void forward_rows_neon(const PackedWeights& w, const double* in, double* out,
                       size_type rows) noexcept;
#endif

}  // namespace irrigation::simd::detail
