// SPDX-License-Identifier: Apache-2.0
/**
 * @file   metrics.hpp
 * @brief  MSE, NRMSE, SSIM and PSNR between two images.
 *
 * Images are Tensors of shape (n, c, h, w), expected in [0, data_range].
 * MSE, NRMSE and PSNR are taken over all elements (for equal-sized channels
 * that equals the per-channel average of MSE). SSIM is computed per (n, c)
 * plane and averaged with equal weight.
 */
#pragma once

#include "cxgan/nn/tensor.hpp"

#include <limits>
#include <string>

namespace cxgan::metrics {

using nn::Tensor;

/// PSNR of identical images.
inline constexpr double kPsnrInfinite = std::numeric_limits<double>::infinity();

struct MetricReport {
  std::string name_a;
  std::string name_b;
  double mse = 0.0;
  double nrmse = 0.0;
  double ssim = 1.0;
  double psnr = kPsnrInfinite;
};

enum class SsimWindow {
  Uniform7,   ///< 7x7 box, unbiased (n - 1) covariance
  Gaussian11, ///< 11x11 Gaussian, sigma 1.5, weighted covariance
};

struct SsimOptions {
  double data_range = 1.0;
  SsimWindow window = SsimWindow::Uniform7;
};

double mse(const Tensor &a, const Tensor &b);

/// sqrt(mse) / RMS(reference). Throws if the reference is all zeros.
double nrmse(const Tensor &reference, const Tensor &test);

double psnr_from_mse(double mse, double data_range = 1.0);
double psnr(const Tensor &a, const Tensor &b, double data_range = 1.0);

/// Mean SSIM over every window position that lies fully inside the image.
double ssim(const Tensor &a, const Tensor &b, const SsimOptions &options = {});

/// a is treated as the reference for NRMSE.
MetricReport compare(const Tensor &a, const Tensor &b, std::string name_a = "a",
                     std::string name_b = "b", const SsimOptions &options = {});

/// Fixed-precision text; the infinite PSNR sentinel prints as "inf".
std::string format_metric(double value);

} // namespace cxgan::metrics
