// SPDX-License-Identifier: Apache-2.0
/**
 * @file   losses.hpp
 * @brief  Relativistic adversarial loss and the generator's composite loss.
 *
 * Discriminator outputs are logits; the sigmoid is taken of logit
 * differences inside the loss. BCE clamps p to [1e-7, 1 - 1e-7] and the
 * clamp has zero gradient.
 */
#pragma once

#include "cxgan/nn/tensor.hpp"

#include <span>
#include <vector>

namespace cxgan::models {

inline constexpr double kBceClamp = 1e-7;

struct LossWeights {
  double alpha = 10.0; ///< MSE
  double beta = 0.1;   ///< 1 - SSIM
  double gamma = 1.0;  ///< adversarial BCE
  void validate() const;
};

/// -[t ln p + (1 - t) ln(1 - p)] with p clamped.
double bce(double p, double target);

/// BCE(s(f - r), y) + BCE(s(r - f), 1 - y).
double discriminator_loss(double d_fake, double d_real, int y);

struct AdversarialLoss {
  double value = 0.0;              ///< mean over the batch
  std::vector<double> grad_fake;   ///< d value / d d_fake[i]
  std::vector<double> grad_real;   ///< d value / d d_real[i]
};

AdversarialLoss discriminator_loss(std::span<const double> d_fake,
                                   std::span<const double> d_real, int y);

/// Mean uniform-7x7 SSIM over all (n, c) planes and its gradient with
/// respect to `a`.
template <typename T> struct SsimLoss {
  double ssim = 0.0;
  nn::BasicTensor<T> grad; ///< d ssim / d a
};

template <typename T>
SsimLoss<T> ssim_with_grad(const nn::BasicTensor<T> &a, const nn::BasicTensor<T> &b,
                           double data_range = 1.0);

struct GeneratorLossParts {
  double mse = 0.0;  ///< alpha * MSE
  double ssim = 0.0; ///< beta * (1 - SSIM)
  double bce = 0.0;  ///< gamma * BCE(s(f - r), 1)
  double total = 0.0;
};

template <typename T> struct GeneratorLoss {
  GeneratorLossParts parts;
  nn::BasicTensor<T> grad_generated; ///< from the MSE and SSIM terms only
  std::vector<double> grad_fake;     ///< d total / d d_fake[i]
};

template <typename T>
GeneratorLoss<T> generator_loss(const nn::BasicTensor<T> &generated,
                                const nn::BasicTensor<T> &target,
                                std::span<const double> d_fake,
                                std::span<const double> d_real, const LossWeights &w);

} // namespace cxgan::models
