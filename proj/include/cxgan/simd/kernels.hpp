// SPDX-License-Identifier: Apache-2.0
/**
 * @file   kernels.hpp
 * @brief  Data-parallel float32 inner loops behind the nn, metrics and
 *         training code.
 *
 * Every kernel has a scalar reference implementation. Vectorized variants
 * (currently AVX2) are compiled in separate translation units and picked at
 * runtime from the CPU feature set. Elementwise kernels are required to be
 * bit-identical to the scalar reference; reductions accumulate in double and
 * may differ from it only by summation order.
 *
 * Set CXGAN_SIMD=scalar in the environment to force the reference path.
 */
#pragma once

#include <cstddef>
#include <string_view>

namespace cxgan::simd {

struct KernelTable {
  std::string_view name;

  /// y[i] += a * x[i]
  void (*axpy)(float a, const float *x, float *y, std::size_t n);
  /// sum x[i] * y[i], accumulated in double
  double (*dot)(const float *x, const float *y, std::size_t n);
  double (*sum)(const float *x, std::size_t n);
  /// sum (a[i] - b[i])^2, accumulated in double
  double (*squared_distance)(const float *a, const float *b, std::size_t n);
  /// y[i] = x[i] > 0 ? x[i] : slope * x[i]
  void (*lrelu)(const float *x, float *y, std::size_t n, float slope);
  /// gx[i] = gy[i] * (x[i] > 0 ? 1 : slope)
  void (*lrelu_backward)(const float *x, const float *gy, float *gx,
                         std::size_t n, float slope);
};

const KernelTable &scalar_kernels();

/// nullptr when the build or the host CPU lacks AVX2.
const KernelTable *avx2_kernels();

/// The table used by the library. Resolved once, on first call.
const KernelTable &active_kernels();

} // namespace cxgan::simd
