// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "cxgan/plane.hpp"

#include <span>
#include <utility>

namespace cxgan::data {

struct Shift {
  long dy = 0;
  long dx = 0;
  bool operator==(const Shift &) const = default;
};

/// Pearson correlation of the two planes. 0 when either is constant.
double ncc(const Plane &a, const Plane &b);

/// Integer translation maximizing the circular cross-correlation of the
/// zero-mean images, computed through the FFT: b(y, x) ~ a(y - dy, x - dx).
/// Components are wrapped to (-n/2, n/2]. Throws on constant input.
Shift estimate_shift(const Plane &a, const Plane &b);

/// Angle on the grid {k * step} within +-range that best maps a onto b
/// (b ~ rotate(a, angle) up to a translation). Ties go to smaller |angle|.
double estimate_rotation(const Plane &a, const Plane &b, double range_deg = 5.0,
                         double step_deg = 0.5);

/// Index pair with the highest correlation over the cartesian product;
/// the first pair in row-major order wins ties.
std::pair<std::size_t, std::size_t> select_best_z(std::span<const Plane> stack_a,
                                                  std::span<const Plane> stack_b);

} // namespace cxgan::data
