// SPDX-License-Identifier: Apache-2.0
/**
 * @file   psf.hpp
 * @brief  Born-Wolf scalar-diffraction point spread function.
 *
 * Intensity at lateral distance r and defocus z:
 *
 *   I(r, z) = | int_0^1 J0(k NA r rho) exp(-i k rho^2 z NA^2 / (2 n)) rho drho |^2
 *
 * with k = 2 pi / lambda. At z = 0 the integral is J1(v) / v, v = k NA r,
 * which is the Airy pattern.
 */
#pragma once

#include "cxgan/plane.hpp"

namespace cxgan::psf {

struct PsfParams {
  double numerical_aperture = 1.4;
  double refractive_index = 1.515;
  double wavelength_nm = 520.0;
  double pixel_size_nm = 159.0;
  int kernel_size = 65;

  /// Throws cxgan::Error naming the first violated constraint.
  void validate() const;
};

struct Psf {
  Plane kernel; ///< non-negative, odd side, unit sum
  PsfParams params;
};

/// Unnormalized I(r, z). Uses the closed form at z == 0 and adaptive Simpson
/// quadrature otherwise; throws if the quadrature does not settle to 1e-8.
double born_wolf_intensity(double r_nm, double defocus_nm, const PsfParams &params);

/// The integral above evaluated by quadrature even at z == 0.
double born_wolf_intensity_quadrature(double r_nm, double defocus_nm,
                                      const PsfParams &params);

/// Kernel sampled at pixel centers and normalized to unit sum.
Psf born_wolf_psf(const PsfParams &params, double defocus_nm = 0.0);

/// A single 1 at the center of a size x size kernel.
Psf delta_psf(int kernel_size = 1);

} // namespace cxgan::psf
