// SPDX-License-Identifier: Apache-2.0
// Every vectorized kernel against the scalar reference.
#include "cxgan/simd/kernels.hpp"

#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

using cxgan::simd::KernelTable;

namespace {

std::vector<float> random_floats(std::size_t n, std::mt19937 &rng) {
  std::uniform_real_distribution<float> d(-2.0f, 2.0f);
  std::vector<float> v(n);
  for (auto &x : v)
    x = d(rng);
  return v;
}

bool same_bits(const std::vector<float> &a, const std::vector<float> &b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::bit_cast<std::uint32_t>(a[i]) != std::bit_cast<std::uint32_t>(b[i]))
      return false;
  return a.size() == b.size();
}

class SimdEquivalence : public ::testing::Test {
protected:
  void SetUp() override {
    vec_ = cxgan::simd::avx2_kernels();
    if (!vec_)
      GTEST_SKIP() << "no vectorized kernels on this host";
  }
  const KernelTable &ref_ = cxgan::simd::scalar_kernels();
  const KernelTable *vec_ = nullptr;
  std::mt19937 rng_{42};
};

// Lengths cover empty input, pure tails and unaligned tails.
const std::size_t kLengths[] = {0, 1, 3, 7, 8, 9, 15, 16, 17, 31, 64, 255, 1000};

} // namespace

TEST_F(SimdEquivalence, AxpyIsBitExact) {
  for (std::size_t n : kLengths) {
    const auto x = random_floats(n, rng_);
    auto y_ref = random_floats(n, rng_);
    auto y_vec = y_ref;
    ref_.axpy(0.37f, x.data(), y_ref.data(), n);
    vec_->axpy(0.37f, x.data(), y_vec.data(), n);
    EXPECT_TRUE(same_bits(y_ref, y_vec)) << "n=" << n;
  }
}

TEST_F(SimdEquivalence, LreluIsBitExact) {
  for (std::size_t n : kLengths) {
    auto x = random_floats(n, rng_);
    if (n > 2) {
      x[0] = 0.0f;
      x[1] = -0.0f;
    }
    const auto gy = random_floats(n, rng_);
    std::vector<float> a(n), b(n), ga(n), gb(n);
    ref_.lrelu(x.data(), a.data(), n, 0.1f);
    vec_->lrelu(x.data(), b.data(), n, 0.1f);
    EXPECT_TRUE(same_bits(a, b)) << "n=" << n;
    ref_.lrelu_backward(x.data(), gy.data(), ga.data(), n, 0.1f);
    vec_->lrelu_backward(x.data(), gy.data(), gb.data(), n, 0.1f);
    EXPECT_TRUE(same_bits(ga, gb)) << "n=" << n;
  }
}

TEST_F(SimdEquivalence, ReductionsAgreeToSummationOrder) {
  for (std::size_t n : kLengths) {
    const auto x = random_floats(n, rng_);
    const auto y = random_floats(n, rng_);
    const double tol = 1e-12 * static_cast<double>(n + 1);
    EXPECT_NEAR(ref_.dot(x.data(), y.data(), n), vec_->dot(x.data(), y.data(), n), tol);
    EXPECT_NEAR(ref_.sum(x.data(), n), vec_->sum(x.data(), n), tol);
    EXPECT_NEAR(ref_.squared_distance(x.data(), y.data(), n),
                vec_->squared_distance(x.data(), y.data(), n), tol);
  }
}

TEST(SimdDispatch, ActiveTableIsOneOfTheKnownTables) {
  const auto &active = cxgan::simd::active_kernels();
  const auto *vec = cxgan::simd::avx2_kernels();
  EXPECT_TRUE(&active == &cxgan::simd::scalar_kernels() || &active == vec);
}

TEST(SimdScalar, DotAccumulatesInDouble) {
  // 2^24 + 1 is not representable in float; a float accumulator would lose it.
  std::vector<float> ones(1 << 24, 1.0f);
  ones.push_back(1.0f);
  const auto &k = cxgan::simd::scalar_kernels();
  EXPECT_EQ(k.sum(ones.data(), ones.size()), 16777217.0);
}
