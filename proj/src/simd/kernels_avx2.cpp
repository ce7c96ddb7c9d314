// SPDX-License-Identifier: Apache-2.0
// Compiled with -mavx2. Only reached after a runtime CPU check.
#include "cxgan/simd/kernels.hpp"

#include <immintrin.h>

namespace cxgan::simd::avx2 {
namespace {

void axpy(float a, const float *x, float *y, std::size_t n) {
  const __m256 va = _mm256_set1_ps(a);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    // mul then add, no FMA: must round like the scalar loop
    const __m256 prod = _mm256_mul_ps(va, _mm256_loadu_ps(x + i));
    _mm256_storeu_ps(y + i, _mm256_add_ps(_mm256_loadu_ps(y + i), prod));
  }
  for (; i < n; ++i)
    y[i] += a * x[i];
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot(const float *x, const float *y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 vx = _mm256_loadu_ps(x + i);
    const __m256 vy = _mm256_loadu_ps(y + i);
    const __m256d x0 = _mm256_cvtps_pd(_mm256_castps256_ps128(vx));
    const __m256d x1 = _mm256_cvtps_pd(_mm256_extractf128_ps(vx, 1));
    const __m256d y0 = _mm256_cvtps_pd(_mm256_castps256_ps128(vy));
    const __m256d y1 = _mm256_cvtps_pd(_mm256_extractf128_ps(vy, 1));
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(x0, y0));
    acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(x1, y1));
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i)
    acc += static_cast<double>(x[i]) * static_cast<double>(y[i]);
  return acc;
}

double sum(const float *x, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 v = _mm256_loadu_ps(x + i);
    acc0 = _mm256_add_pd(acc0, _mm256_cvtps_pd(_mm256_castps256_ps128(v)));
    acc1 = _mm256_add_pd(acc1, _mm256_cvtps_pd(_mm256_extractf128_ps(v, 1)));
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i)
    acc += x[i];
  return acc;
}

double squared_distance(const float *a, const float *b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 va = _mm256_loadu_ps(a + i);
    const __m256 vb = _mm256_loadu_ps(b + i);
    const __m256d d0 =
        _mm256_sub_pd(_mm256_cvtps_pd(_mm256_castps256_ps128(va)),
                      _mm256_cvtps_pd(_mm256_castps256_ps128(vb)));
    const __m256d d1 =
        _mm256_sub_pd(_mm256_cvtps_pd(_mm256_extractf128_ps(va, 1)),
                      _mm256_cvtps_pd(_mm256_extractf128_ps(vb, 1)));
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(d0, d0));
    acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(d1, d1));
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  return acc;
}

void lrelu(const float *x, float *y, std::size_t n, float slope) {
  const __m256 vs = _mm256_set1_ps(slope);
  const __m256 zero = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 v = _mm256_loadu_ps(x + i);
    const __m256 pos = _mm256_cmp_ps(v, zero, _CMP_GT_OQ);
    _mm256_storeu_ps(y + i, _mm256_blendv_ps(_mm256_mul_ps(vs, v), v, pos));
  }
  for (; i < n; ++i)
    y[i] = x[i] > 0.0f ? x[i] : slope * x[i];
}

void lrelu_backward(const float *x, const float *gy, float *gx, std::size_t n,
                    float slope) {
  const __m256 vs = _mm256_set1_ps(slope);
  const __m256 one = _mm256_set1_ps(1.0f);
  const __m256 zero = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 pos = _mm256_cmp_ps(_mm256_loadu_ps(x + i), zero, _CMP_GT_OQ);
    const __m256 factor = _mm256_blendv_ps(vs, one, pos);
    _mm256_storeu_ps(gx + i, _mm256_mul_ps(_mm256_loadu_ps(gy + i), factor));
  }
  for (; i < n; ++i)
    gx[i] = gy[i] * (x[i] > 0.0f ? 1.0f : slope);
}

} // namespace

const KernelTable &table() {
  static const KernelTable t{"avx2", axpy,  dot,           sum,
                             squared_distance, lrelu, lrelu_backward};
  return t;
}

} // namespace cxgan::simd::avx2
