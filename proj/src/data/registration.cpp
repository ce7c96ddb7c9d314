// SPDX-License-Identifier: Apache-2.0
#include "cxgan/data/registration.hpp"
#include "cxgan/data/geometry.hpp"
#include "cxgan/fft/fft2d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cxgan::data {

namespace {

void require_same(const Plane &a, const Plane &b, const char *what) {
  if (a.height != b.height || a.width != b.width)
    throw ShapeError(std::string(what) + ": shapes " + a.dims() + " and " + b.dims() +
                     " differ");
  if (a.size() == 0)
    throw ShapeError(std::string(what) + ": empty image");
}

double variance_sum(const Plane &p, double mean) {
  double s = 0;
  for (double v : p.values)
    s += (v - mean) * (v - mean);
  return s;
}

double mean_of(const Plane &p) {
  double s = 0;
  for (double v : p.values)
    s += v;
  return s / static_cast<double>(p.size());
}

// Per-pixel variance this small means the image carries no structure.
bool is_flat(const Plane &p) {
  return variance_sum(p, mean_of(p)) <= 1e-14 * static_cast<double>(p.size());
}

long wrap(long v, long n) {
  v %= n;
  if (v > n / 2)
    v -= n;
  return v;
}

// Middle half of the plane in each direction, where rotation leaves no
// zero-filled corners.
Plane center_region(const Plane &p) {
  const std::size_t h = std::max<std::size_t>(p.height / 2, 1);
  const std::size_t w = std::max<std::size_t>(p.width / 2, 1);
  return apply_transform(p, Transform::crop(static_cast<long>((p.height - h) / 2),
                                            static_cast<long>((p.width - w) / 2), h, w));
}

} // namespace

double ncc(const Plane &a, const Plane &b) {
  require_same(a, b, "ncc");
  const double ma = mean_of(a), mb = mean_of(b);
  double sab = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    sab += (a.values[i] - ma) * (b.values[i] - mb);
  const double sa = variance_sum(a, ma), sb = variance_sum(b, mb);
  if (sa <= 0 || sb <= 0)
    return 0.0;
  return sab / std::sqrt(sa * sb);
}

Shift estimate_shift(const Plane &a, const Plane &b) {
  require_same(a, b, "estimate_shift");
  const double ma = mean_of(a), mb = mean_of(b);
  if (is_flat(a) || is_flat(b))
    throw Error("estimate_shift: constant image has no defined shift");

  Plane za = a, zb = b;
  for (double &v : za.values)
    v -= ma;
  for (double &v : zb.values)
    v -= mb;

  // Unwhitened: a normalized cross-power spectrum amplifies the frame edges
  // of cropped fields and loses the peak on smooth images.
  const std::size_t H = a.height, W = a.width;
  const fft::Fft2d fft(H, W);
  const fft::Spectrum fa = fft.forward(za);
  fft::Spectrum cross = fft.forward(zb);
  for (std::size_t i = 0; i < cross.size(); ++i)
    cross[i] *= std::conj(fa[i]);
  const Plane corr = fft.inverse(cross);
  const auto best = std::max_element(corr.values.begin(), corr.values.end());
  const auto idx = static_cast<std::size_t>(best - corr.values.begin());
  return {wrap(static_cast<long>(idx / W), static_cast<long>(H)),
          wrap(static_cast<long>(idx % W), static_cast<long>(W))};
}

double estimate_rotation(const Plane &a, const Plane &b, double range_deg, double step_deg) {
  require_same(a, b, "estimate_rotation");
  if (!(range_deg >= 0 && range_deg <= 10))
    throw Error("estimate_rotation: search range must be within +-10 degrees");
  if (!(step_deg >= 0.1))
    throw Error("estimate_rotation: step must be >= 0.1 degrees");
  if (is_flat(a) || is_flat(b))
    throw Error("estimate_rotation: constant image has no defined rotation");

  const long n = static_cast<long>(std::floor(range_deg / step_deg + 1e-9));
  const Plane target = center_region(b);
  double best_angle = 0, best_score = -std::numeric_limits<double>::infinity();
  // 0, +s, -s, +2s, -2s, ...: strict improvement keeps the smaller |angle|
  for (long k = 0; k <= 2 * n; ++k) {
    const long m = (k + 1) / 2 * (k % 2 ? 1 : -1);
    const double angle = static_cast<double>(m) * step_deg;
    const Plane ra = apply_transform(a, Transform::rotate(angle));
    const Shift s = estimate_shift(ra, b);
    const double score = ncc(center_region(roll(ra, s.dy, s.dx)), target);
    if (score > best_score) {
      best_score = score;
      best_angle = angle;
    }
  }
  return best_angle;
}

std::pair<std::size_t, std::size_t> select_best_z(std::span<const Plane> stack_a,
                                                  std::span<const Plane> stack_b) {
  if (stack_a.empty() || stack_b.empty())
    throw Error("select_best_z: empty stack");
  std::pair<std::size_t, std::size_t> best{0, 0};
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < stack_a.size(); ++i)
    for (std::size_t j = 0; j < stack_b.size(); ++j) {
      const double s = ncc(stack_a[i], stack_b[j]);
      if (s > best_score) {
        best_score = s;
        best = {i, j};
      }
    }
  return best;
}

} // namespace cxgan::data
