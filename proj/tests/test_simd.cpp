#include <gtest/gtest.h>

#include <cstring>

#include "irrigation/mlp.hpp"
#include "irrigation/random.hpp"
#include "irrigation/simd.hpp"

using namespace irrigation;
using namespace irrigation::mlp;

namespace {

NetworkWeights random_weights(Rng& rng, double scale) {
  std::array<double, kParameterCount> flat{};
  for (double& v : flat) v = rng.uniform(-scale, scale);
  return NetworkWeights::unflatten(flat);
}

}  // namespace

TEST(Simd, ScalarAlwaysSupported) {
  EXPECT_TRUE(simd::is_supported(simd::Backend::Scalar));
  const auto all = simd::supported_backends();
  EXPECT_NE(std::find(all.begin(), all.end(), simd::Backend::Scalar), all.end());
  EXPECT_TRUE(simd::is_supported(simd::best_backend()));
}

TEST(Simd, BackendNames) {
  for (auto b : {simd::Backend::Scalar, simd::Backend::Avx2, simd::Backend::Neon}) {
    EXPECT_EQ(simd::parse_backend(simd::to_string(b)), b);
  }
  EXPECT_FALSE(simd::parse_backend("sse9").has_value());
}

// Every backend must reproduce the scalar reference bit for bit, including
// row counts that leave a partial vector at the end.
TEST(SimdProperty, BackendsAreBitwiseIdentical) {
  Rng rng(77);
  for (auto backend : simd::supported_backends()) {
    for (std::size_t rows : {0u, 1u, 2u, 3u, 4u, 5u, 6u, 7u, 8u, 9u, 13u, 17u, 1000u, 1331u}) {
      const auto w = random_weights(rng, 4.0);
      std::vector<double> in(rows * 3);
      for (double& v : in) v = rng.uniform(-0.5, 1.5);
      std::vector<double> out(rows * 3, -1.0);
      simd::forward_batch(w, in, out, backend);
      for (std::size_t r = 0; r < rows; ++r) {
        const auto ref = simd::forward_row(w, {in[3 * r], in[3 * r + 1], in[3 * r + 2]});
        ASSERT_EQ(std::memcmp(ref.data(), &out[3 * r], sizeof ref), 0)
            << simd::to_string(backend) << " rows=" << rows << " r=" << r;
      }
    }
  }
}

TEST(SimdProperty, ExtremeLogitsStayFinite) {
  NetworkWeights w;
  w.b_out = {800.0, -800.0, 0.0};
  std::vector<double> in(3 * 5, 0.5), out(3 * 5);
  for (auto backend : simd::supported_backends()) {
    simd::forward_batch(w, in, out, backend);
    for (double v : out) ASSERT_TRUE(std::isfinite(v));
    EXPECT_EQ(out[0], 1.0);
  }
}

TEST(Simd, SizeMismatchThrows) {
  std::vector<double> in(6), out(3);
  EXPECT_THROW(simd::forward_batch(NetworkWeights{}, in, out, simd::Backend::Scalar), std::invalid_argument);
  std::vector<double> ragged(4), out2(4);
  EXPECT_THROW(simd::forward_batch(NetworkWeights{}, ragged, out2, simd::Backend::Scalar),
               std::invalid_argument);
}

TEST(Simd, UnsupportedBackendThrows) {
  for (auto b : {simd::Backend::Avx2, simd::Backend::Neon}) {
    if (simd::is_supported(b)) continue;
    std::vector<double> in(3), out(3);
    EXPECT_THROW(simd::forward_batch(NetworkWeights{}, in, out, b), std::invalid_argument);
  }
}

TEST(Simd, AccuracyIndependentOfBackend) {
  Rng rng(5);
  const auto w = random_weights(rng, 3.0);
  const auto d = mlp::generate_dataset(13, {});
  const double ref = mlp::accuracy(w, d, simd::Backend::Scalar);
  for (auto b : simd::supported_backends()) EXPECT_EQ(mlp::accuracy(w, d, b), ref);
}
