// SPDX-License-Identifier: Apache-2.0
#include "cxgan/metrics/metrics.hpp"
#include "ssim_oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace cxgan::metrics;
using cxgan::nn::Shape;

namespace {

Tensor random_image(Shape s, std::mt19937_64 &rng) {
  std::uniform_real_distribution<float> d(0.0f, 1.0f);
  Tensor t(s);
  for (auto &v : t.values())
    v = d(rng);
  return t;
}

Tensor grid(std::vector<float> v) {
  return Tensor(Shape{1, 1, 2, 2}, std::move(v));
}

} // namespace

TEST(Mse, Examples) {
  const Tensor a = grid({0, 0, 1, 1});
  const Tensor b = grid({0, 1, 1, 1});
  EXPECT_EQ(mse(a, a), 0.0);
  EXPECT_DOUBLE_EQ(mse(a, b), 0.25);
  EXPECT_EQ(mse(a, b), mse(b, a));
}

TEST(Mse, ShapeMismatchRejected) {
  EXPECT_THROW((void)mse(Tensor(Shape{1, 1, 2, 2}), Tensor(Shape{1, 1, 2, 3})),
               cxgan::ShapeError);
}

TEST(Nrmse, Examples) {
  const Tensor ref = grid({1, 1, 1, 1});
  EXPECT_DOUBLE_EQ(nrmse(ref, grid({0, 1, 1, 1})), 0.5);
  EXPECT_EQ(nrmse(ref, ref), 0.0);
}

TEST(Nrmse, ScaleInvariant) {
  std::mt19937_64 rng(3);
  const Tensor a = random_image(Shape{1, 2, 8, 8}, rng);
  const Tensor b = random_image(Shape{1, 2, 8, 8}, rng);
  Tensor a2(a.shape()), b2(b.shape());
  for (std::size_t i = 0; i < a.size(); ++i) {
    a2[i] = a[i] * 0.25f; // power of two keeps the scaling exact
    b2[i] = b[i] * 0.25f;
  }
  EXPECT_NEAR(nrmse(a, b), nrmse(a2, b2), 1e-12);
}

TEST(Nrmse, ZeroReferenceRejected) {
  EXPECT_THROW((void)nrmse(grid({0, 0, 0, 0}), grid({0, 1, 0, 0})), cxgan::Error);
}

TEST(Psnr, ClosedForms) {
  EXPECT_DOUBLE_EQ(psnr_from_mse(0.01), 20.0);
  EXPECT_NEAR(psnr_from_mse(0.0106), 19.75, 0.005);
  EXPECT_NEAR(psnr_from_mse(0.0011), 29.59, 0.005);
  EXPECT_TRUE(std::isinf(psnr_from_mse(0.0)));
  const Tensor a = grid({0, 0, 1, 1});
  EXPECT_TRUE(std::isinf(psnr(a, a)));
}

TEST(Psnr, StrictlyDecreasingInMse) {
  double prev = psnr_from_mse(1e-6);
  for (double m = 2e-6; m < 1.0; m *= 1.7) {
    const double cur = psnr_from_mse(m);
    EXPECT_LT(cur, prev);
    prev = cur;
  }
}

TEST(Ssim, IdenticalImagesGiveOne) {
  std::mt19937_64 rng(4);
  const Tensor a = random_image(Shape{1, 3, 16, 16}, rng);
  EXPECT_EQ(ssim(a, a), 1.0);
}

TEST(Ssim, ConstantImagesClosedForm) {
  const Tensor a(Shape{1, 1, 8, 8}, 0.2f);
  const Tensor b(Shape{1, 1, 8, 8}, 0.4f);
  // variances vanish; only the luminance term survives
  const double ma = static_cast<double>(0.2f), mb = static_cast<double>(0.4f);
  const double expected = (2 * ma * mb + 1e-4) / (ma * ma + mb * mb + 1e-4);
  EXPECT_NEAR(ssim(a, b), expected, 1e-9);
  EXPECT_NEAR(ssim(a, b), 0.80010, 5e-6);
}

TEST(Ssim, MatchesBruteForceOracle) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 10; ++i) {
    const Tensor a = random_image(Shape{1, 1, 16, 16}, rng);
    const Tensor b = random_image(Shape{1, 1, 16, 16}, rng);
    EXPECT_NEAR(ssim(a, b), cxgan::testing::brute_force_ssim(a, b), 1e-6);
  }
}

TEST(Ssim, MultiChannelIsEqualWeightAverage) {
  std::mt19937_64 rng(6);
  const Tensor a = random_image(Shape{1, 3, 12, 12}, rng);
  const Tensor b = random_image(Shape{1, 3, 12, 12}, rng);
  double sum = 0;
  for (std::size_t c = 0; c < 3; ++c) {
    Tensor pa(Shape{1, 1, 12, 12}), pb(Shape{1, 1, 12, 12});
    std::copy_n(a.plane(0, c), 144, pa.data());
    std::copy_n(b.plane(0, c), 144, pb.data());
    sum += ssim(pa, pb);
  }
  EXPECT_NEAR(ssim(a, b), sum / 3.0, 1e-12);
}

TEST(Ssim, Symmetric) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 5; ++i) {
    const Tensor a = random_image(Shape{1, 2, 20, 17}, rng);
    const Tensor b = random_image(Shape{1, 2, 20, 17}, rng);
    EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-12);
    EXPECT_LE(ssim(a, b), 1.0);
  }
}

TEST(Ssim, TooSmallRejected) {
  EXPECT_THROW((void)ssim(Tensor(Shape{1, 1, 6, 10}), Tensor(Shape{1, 1, 6, 10})),
               cxgan::ShapeError);
  SsimOptions g{1.0, SsimWindow::Gaussian11};
  EXPECT_THROW((void)ssim(Tensor(Shape{1, 1, 10, 12}), Tensor(Shape{1, 1, 10, 12}), g),
               cxgan::ShapeError);
}

TEST(Ssim, GaussianWindowMode) {
  std::mt19937_64 rng(8);
  const Tensor a = random_image(Shape{1, 1, 24, 24}, rng);
  Tensor b = a;
  for (std::size_t i = 0; i < b.size(); i += 3)
    b[i] = 1.0f - b[i];
  const SsimOptions g{1.0, SsimWindow::Gaussian11};
  EXPECT_NEAR(ssim(a, a, g), 1.0, 1e-12);
  const double v = ssim(a, b, g);
  EXPECT_LT(v, 1.0);
  EXPECT_GT(v, -1.0);
  const Tensor c1(Shape{1, 1, 16, 16}, 0.2f), c2(Shape{1, 1, 16, 16}, 0.4f);
  EXPECT_NEAR(ssim(c1, c2, g), ssim(c1, c2), 1e-9);
}

TEST(Compare, IdenticalImages) {
  std::mt19937_64 rng(9);
  const Tensor a = random_image(Shape{1, 3, 8, 8}, rng);
  const MetricReport r = compare(a, a, "x", "y");
  EXPECT_EQ(r.mse, 0.0);
  EXPECT_EQ(r.nrmse, 0.0);
  EXPECT_EQ(r.ssim, 1.0);
  EXPECT_TRUE(std::isinf(r.psnr));
  EXPECT_EQ(r.name_a, "x");
  EXPECT_EQ(format_metric(r.psnr), "inf");
}

TEST(Compare, FieldsEqualIndividualOps) {
  std::mt19937_64 rng(10);
  const Tensor a = random_image(Shape{1, 3, 16, 16}, rng);
  const Tensor b = random_image(Shape{1, 3, 16, 16}, rng);
  const MetricReport r = compare(a, b);
  EXPECT_EQ(r.mse, mse(a, b));
  EXPECT_EQ(r.nrmse, nrmse(a, b));
  EXPECT_EQ(r.ssim, ssim(a, b));
  EXPECT_EQ(r.psnr, psnr(a, b));
}

TEST(Compare, TableScalePsnrConsistency) {
  // A pair with MSE exactly 0.0106 must report PSNR near 19.75 dB.
  Tensor a(Shape{1, 1, 100, 100}, 0.0f);
  Tensor b(Shape{1, 1, 100, 100}, 0.0f);
  const float d = static_cast<float>(std::sqrt(0.0106));
  for (std::size_t i = 0; i < b.size(); ++i) {
    a[i] = 0.5f;
    b[i] = 0.5f + d;
  }
  const MetricReport r = compare(a, b);
  EXPECT_NEAR(r.mse, 0.0106, 1e-7);
  EXPECT_NEAR(r.psnr, 19.75, 0.05);
}
