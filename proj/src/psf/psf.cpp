// SPDX-License-Identifier: Apache-2.0
#include "cxgan/psf/psf.hpp"

#include <cmath>
#include <complex>
#include <map>
#include <numbers>

namespace cxgan::psf {
namespace {

using cplx = std::complex<double>;

constexpr double kQuadratureTolerance = 1e-8;
constexpr int kMaxDepth = 40;

struct Integrand {
  double radial;  // k NA r
  double defocus; // k z NA^2 / (2 n)
  cplx operator()(double rho) const {
    const double j0 = std::cyl_bessel_j(0.0, radial * rho);
    return j0 * std::polar(1.0, -defocus * rho * rho) * rho;
  }
};

cplx simpson(double a, double b, const cplx &fa, const cplx &fm, const cplx &fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

cplx adaptive(const Integrand &f, double a, double b, const cplx &fa,
              const cplx &fm, const cplx &fb, const cplx &whole, double tol,
              int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const cplx flm = f(lm);
  const cplx frm = f(rm);
  const cplx left = simpson(a, m, fa, flm, fm);
  const cplx right = simpson(m, b, fm, frm, fb);
  const cplx delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  if (depth >= kMaxDepth)
    throw Error("born_wolf_psf: quadrature did not converge");
  return adaptive(f, a, m, fa, flm, fm, left, tol / 2, depth + 1) +
         adaptive(f, m, b, fm, frm, fb, right, tol / 2, depth + 1);
}

cplx integrate(const Integrand &f) {
  // Start from a fixed 8-panel split so oscillatory integrands are not
  // mistaken for smooth ones on the first comparison.
  cplx total{};
  constexpr int panels = 8;
  for (int i = 0; i < panels; ++i) {
    const double a = static_cast<double>(i) / panels;
    const double b = static_cast<double>(i + 1) / panels;
    const cplx pa = f(a), pm = f(0.5 * (a + b)), pb = f(b);
    total += adaptive(f, a, b, pa, pm, pb, simpson(a, b, pa, pm, pb),
                      kQuadratureTolerance / panels, 0);
  }
  return total;
}

double wavenumber(const PsfParams &p) {
  return 2.0 * std::numbers::pi / p.wavelength_nm;
}

} // namespace

void PsfParams::validate() const {
  if (!(numerical_aperture > 0.0))
    throw Error("psf: numerical aperture must be positive");
  if (!(numerical_aperture <= refractive_index))
    throw Error("psf: numerical aperture exceeds refractive index");
  if (!(wavelength_nm > 0.0))
    throw Error("psf: wavelength must be positive");
  if (!(pixel_size_nm > 0.0))
    throw Error("psf: pixel size must be positive");
  if (kernel_size < 3 || kernel_size % 2 == 0)
    throw Error("psf: kernel size must be odd and >= 3");
}

double born_wolf_intensity_quadrature(double r_nm, double defocus_nm,
                                      const PsfParams &p) {
  const double k = wavenumber(p);
  const Integrand f{k * p.numerical_aperture * r_nm,
                    k * defocus_nm * p.numerical_aperture * p.numerical_aperture /
                        (2.0 * p.refractive_index)};
  return std::norm(integrate(f));
}

double born_wolf_intensity(double r_nm, double defocus_nm, const PsfParams &p) {
  if (defocus_nm != 0.0)
    return born_wolf_intensity_quadrature(r_nm, defocus_nm, p);
  const double v = wavenumber(p) * p.numerical_aperture * r_nm;
  if (v < 1e-8)
    return 0.25; // lim J1(v)/v = 1/2
  const double a = std::cyl_bessel_j(1.0, v) / v;
  return a * a;
}

Psf born_wolf_psf(const PsfParams &params, double defocus_nm) {
  params.validate();
  const auto size = static_cast<std::size_t>(params.kernel_size);
  const long c = params.kernel_size / 2;
  Plane kernel(size, size);
  // one evaluation per distinct squared radius keeps the kernel exactly
  // radially symmetric
  std::map<long, double> by_radius;
  double total = 0.0;
  for (std::size_t y = 0; y < size; ++y)
    for (std::size_t x = 0; x < size; ++x) {
      const long dy = static_cast<long>(y) - c;
      const long dx = static_cast<long>(x) - c;
      const long r2 = dy * dy + dx * dx;
      auto it = by_radius.find(r2);
      if (it == by_radius.end()) {
        const double r_nm = params.pixel_size_nm * std::sqrt(static_cast<double>(r2));
        it = by_radius.emplace(r2, born_wolf_intensity(r_nm, defocus_nm, params)).first;
      }
      kernel.at(y, x) = it->second;
      total += it->second;
    }
  for (double &v : kernel.values)
    v /= total;
  return {std::move(kernel), params};
}

Psf delta_psf(int kernel_size) {
  if (kernel_size < 1 || kernel_size % 2 == 0)
    throw Error("psf: delta kernel size must be odd");
  const auto size = static_cast<std::size_t>(kernel_size);
  Psf p;
  p.kernel = Plane(size, size);
  p.kernel.at(size / 2, size / 2) = 1.0;
  p.params.kernel_size = kernel_size;
  return p;
}

} // namespace cxgan::psf
