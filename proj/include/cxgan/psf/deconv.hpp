// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "cxgan/plane.hpp"
#include "cxgan/psf/psf.hpp"

namespace cxgan::psf {

inline constexpr double kRichardsonLucyFloor = 1e-12;

/// Circular convolution through the frequency domain; the kernel center is
/// placed at the origin so an unshifted delta is the identity.
Plane fft_convolve(const Plane &image, const Psf &psf);

/// u <- u * [(observed / max(u (*) p, 1e-12)) (*) flip(p)], starting from
/// u = observed. Throws on negative input or iterations < 1.
Plane richardson_lucy(const Plane &observed, const Psf &psf, int iterations = 10);

/// Same update started from an explicit first estimate.
Plane richardson_lucy(const Plane &observed, const Psf &psf, int iterations,
                      const Plane &initial);

} // namespace cxgan::psf
