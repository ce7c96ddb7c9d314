// SPDX-License-Identifier: Apache-2.0
#include "cxgan/simd/kernels.hpp"

namespace cxgan::simd {
namespace {

void axpy(float a, const float *x, float *y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    y[i] += a * x[i];
}

double dot(const float *x, const float *y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    acc += static_cast<double>(x[i]) * static_cast<double>(y[i]);
  return acc;
}

double sum(const float *x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    acc += x[i];
  return acc;
}

double squared_distance(const float *a, const float *b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  return acc;
}

void lrelu(const float *x, float *y, std::size_t n, float slope) {
  for (std::size_t i = 0; i < n; ++i)
    y[i] = x[i] > 0.0f ? x[i] : slope * x[i];
}

void lrelu_backward(const float *x, const float *gy, float *gx, std::size_t n,
                    float slope) {
  for (std::size_t i = 0; i < n; ++i)
    gx[i] = gy[i] * (x[i] > 0.0f ? 1.0f : slope);
}

} // namespace

const KernelTable &scalar_kernels() {
  static const KernelTable table{"scalar", axpy,  dot,           sum,
                                 squared_distance, lrelu, lrelu_backward};
  return table;
}

} // namespace cxgan::simd
