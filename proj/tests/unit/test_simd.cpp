#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "jncf/simd/kernels.hpp"

namespace {

using jncf::simd::Isa;

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

class SimdEquivalence : public ::testing::Test {
 protected:
  void SetUp() override {
    if (!jncf::simd::isa_supported(Isa::avx2)) GTEST_SKIP() << "AVX2 not available";
  }
  const jncf::simd::KernelTable& scalar = jncf::simd::kernels_for(Isa::scalar);
  const jncf::simd::KernelTable& avx2 = jncf::simd::kernels_for(Isa::avx2);
};

TEST_F(SimdEquivalence, DotMatchesScalarWithinReassociation) {
  std::mt19937_64 rng(1);
  for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 16u, 31u, 257u, 1682u}) {
    const auto a = random_vector(n, rng), b = random_vector(n, rng);
    double scale = 0.0;
    for (std::size_t k = 0; k < n; ++k) scale += std::abs(a[k] * b[k]);
    EXPECT_NEAR(scalar.dot(a.data(), b.data(), n), avx2.dot(a.data(), b.data(), n),
                1e-14 * (scale + 1.0))
        << "n=" << n;
  }
}

TEST_F(SimdEquivalence, GemvMatchesScalar) {
  std::mt19937_64 rng(2);
  for (auto [rows, cols] : {std::pair{1, 1}, {3, 5}, {8, 128}, {13, 7}, {128, 64}}) {
    const auto w = random_vector(rows * cols, rng), x = random_vector(cols, rng),
               b = random_vector(rows, rng);
    std::vector<double> y1(rows), y2(rows);
    scalar.gemv(w.data(), x.data(), b.data(), y1.data(), rows, cols);
    avx2.gemv(w.data(), x.data(), b.data(), y2.data(), rows, cols);
    for (int r = 0; r < rows; ++r) EXPECT_NEAR(y1[r], y2[r], 1e-12) << rows << "x" << cols;
    scalar.gemv(w.data(), x.data(), nullptr, y1.data(), rows, cols);
    avx2.gemv(w.data(), x.data(), nullptr, y2.data(), rows, cols);
    for (int r = 0; r < rows; ++r) EXPECT_NEAR(y1[r], y2[r], 1e-12);
  }
}

TEST_F(SimdEquivalence, ElementwiseKernelsAreBitIdentical) {
  std::mt19937_64 rng(3);
  const std::size_t rows = 9, cols = 13;
  const auto x = random_vector(cols, rng), g = random_vector(rows, rng);
  auto y1 = random_vector(cols, rng);
  auto y2 = y1;
  scalar.axpy(0.37, x.data(), y1.data(), cols);
  avx2.axpy(0.37, x.data(), y2.data(), cols);
  EXPECT_EQ(y1, y2);

  const auto w = random_vector(rows * cols, rng);
  std::vector<double> t1(cols, 0.5), t2(cols, 0.5);
  scalar.gemv_t_acc(w.data(), g.data(), t1.data(), rows, cols);
  avx2.gemv_t_acc(w.data(), g.data(), t2.data(), rows, cols);
  for (std::size_t k = 0; k < cols; ++k) EXPECT_NEAR(t1[k], t2[k], 1e-12);

  auto G1 = random_vector(rows * cols, rng);
  auto G2 = G1;
  scalar.ger_acc(g.data(), x.data(), G1.data(), rows, cols);
  avx2.ger_acc(g.data(), x.data(), G2.data(), rows, cols);
  EXPECT_EQ(G1, G2);

  const std::size_t n = 37;
  auto v1 = random_vector(n, rng), gr1 = random_vector(n, rng), m1 = random_vector(n, rng),
       s1 = random_vector(n, rng);
  for (double& s : s1) s = s * s;
  auto v2 = v1, gr2 = gr1, m2 = m1, s2 = s1;
  const jncf::simd::AdamCoefficients c{1e-3, 0.9, 0.999, 1e-8, 1.0 / (1 - 0.9 * 0.9),
                                       1.0 / (1 - 0.999 * 0.999), 0.25};
  scalar.adam(v1.data(), gr1.data(), m1.data(), s1.data(), n, c);
  avx2.adam(v2.data(), gr2.data(), m2.data(), s2.data(), n, c);
  EXPECT_EQ(v1, v2);
  EXPECT_EQ(m1, m2);
  EXPECT_EQ(s1, s2);
  EXPECT_EQ(gr1, std::vector<double>(n, 0.0));
  EXPECT_EQ(gr2, std::vector<double>(n, 0.0));
}

TEST(SimdDispatch, ScalarCanBeForcedAndRestored) {
  const Isa before = jncf::simd::active_isa();
  jncf::simd::set_active_isa(Isa::scalar);
  EXPECT_EQ(jncf::simd::kernels().isa, Isa::scalar);
  if (jncf::simd::isa_supported(Isa::avx2)) {
    jncf::simd::set_active_isa(Isa::avx2);
    EXPECT_EQ(jncf::simd::kernels().isa, Isa::avx2);
  } else {
    EXPECT_THROW(jncf::simd::set_active_isa(Isa::avx2), std::invalid_argument);
  }
  jncf::simd::set_active_isa(before);
}

}  // namespace
