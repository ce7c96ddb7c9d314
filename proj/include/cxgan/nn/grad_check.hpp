// SPDX-License-Identifier: Apache-2.0
/**
 * @file   grad_check.hpp
 * @brief  Central finite-difference verification of analytic gradients.
 *
 * The caller supplies a scalar loss that reads the tensors being perturbed
 * and the analytic gradient of that loss with respect to each of them. Every
 * element (or a seeded sample of elements) is nudged by +/- epsilon and the
 * two-sided slope compared against the analytic value with denominator
 * max(|analytic|, |numeric|, min_denominator), 1e-8 by default.
 */
#pragma once

#include "cxgan/error.hpp"
#include "cxgan/nn/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <vector>

namespace cxgan::nn {

template <typename T> struct GradCheckTarget {
  BasicTensor<T> *value;
  const BasicTensor<T> *analytic;
};

struct GradCheckOptions {
  double epsilon = 1e-3;
  /// 0 checks every element; otherwise at most this many per target.
  std::size_t max_samples = 0;
  std::uint64_t seed = 0;
  /// Smallest denominator of the relative error; raise it when the loss is
  /// large enough that finite-difference round-off swamps tiny gradients.
  double min_denominator = 1e-8;
  /// Optional id of the piecewise-smooth region the last loss() call
  /// evaluated in (e.g. a hash of LReLU signs). A sample whose +/- epsilon
  /// evaluations leave the base region straddles a kink and is skipped.
  std::function<std::uint64_t()> region{};
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0; ///< samples straddling a kink
};

template <typename T>
GradCheckResult grad_check(const std::function<double()> &loss,
                           std::span<const GradCheckTarget<T>> targets,
                           const GradCheckOptions &options = {}) {
  if (!(options.epsilon >= 1e-5 && options.epsilon <= 1e-2))
    throw Error("grad_check: epsilon must lie in [1e-5, 1e-2]");
  const double base = loss();
  if (std::bit_cast<std::uint64_t>(base) !=
      std::bit_cast<std::uint64_t>(loss()))
    throw Error("grad_check: op is not deterministic (two forward passes "
                "differ)");
  const std::uint64_t base_region = options.region ? options.region() : 0;

  std::mt19937_64 rng(options.seed);
  GradCheckResult result;
  for (const auto &target : targets) {
    if (target.value->shape() != target.analytic->shape())
      throw ShapeError("grad_check: value " + target.value->shape().str() +
                       " vs analytic " + target.analytic->shape().str());
    std::vector<std::size_t> indices(target.value->size());
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    if (options.max_samples != 0 && options.max_samples < indices.size()) {
      std::shuffle(indices.begin(), indices.end(), rng);
      indices.resize(options.max_samples);
      std::sort(indices.begin(), indices.end());
    }
    for (std::size_t i : indices) {
      T &slot = (*target.value)[i];
      const T original = slot;
      // the representable step, not the nominal one
      slot = static_cast<T>(static_cast<double>(original) + options.epsilon);
      const double up_step = static_cast<double>(slot) - original;
      const double up = loss();
      const std::uint64_t up_region = options.region ? options.region() : 0;
      slot = static_cast<T>(static_cast<double>(original) - options.epsilon);
      const double down_step = static_cast<double>(original) - slot;
      const double down = loss();
      const std::uint64_t down_region = options.region ? options.region() : 0;
      slot = original;
      if (options.region && (up_region != base_region || down_region != base_region)) {
        ++result.skipped;
        continue;
      }

      const double numeric = (up - down) / (up_step + down_step);
      const double analytic = static_cast<double>((*target.analytic)[i]);
      const double denom =
          std::max({std::abs(analytic), std::abs(numeric), options.min_denominator});
      result.max_relative_error =
          std::max(result.max_relative_error, std::abs(analytic - numeric) / denom);
      ++result.checked;
    }
  }
  return result;
}

/// sum_i weights[i] * t[i] in double; a generic scalar head for op checks.
template <typename T>
double weighted_sum(const BasicTensor<T> &t, std::span<const double> weights) {
  if (weights.size() != t.size())
    throw ShapeError("weighted_sum: weight count does not match tensor size");
  double acc = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i)
    acc += weights[i] * static_cast<double>(t[i]);
  return acc;
}

} // namespace cxgan::nn
