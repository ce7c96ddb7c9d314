// SPDX-License-Identifier: Apache-2.0
#include "cxgan/psf/deconv.hpp"
#include "cxgan/fft/fft2d.hpp"

#include <algorithm>

namespace cxgan::psf {

Plane fft_convolve(const Plane &image, const Psf &psf) {
  return fft::circular_convolve(image, psf.kernel);
}

Plane richardson_lucy(const Plane &observed, const Psf &psf, int iterations) {
  return richardson_lucy(observed, psf, iterations, observed);
}

Plane richardson_lucy(const Plane &observed, const Psf &psf, int iterations,
                      const Plane &initial) {
  if (initial.height != observed.height || initial.width != observed.width)
    throw ShapeError("richardson_lucy: initial estimate " + initial.dims() +
                     " vs observed " + observed.dims());
  if (iterations < 1)
    throw Error("richardson_lucy: iterations must be >= 1");
  if (std::any_of(observed.values.begin(), observed.values.end(),
                  [](double v) { return !(v >= 0.0); }))
    throw Error("richardson_lucy: observed image has negative or NaN values");

  const fft::Fft2d fft(observed.height, observed.width);
  const fft::Spectrum otf =
      fft.forward(fft::wrap_kernel(psf.kernel, observed.height, observed.width));

  Plane estimate = initial;
  Plane ratio(observed.height, observed.width);
  for (int it = 0; it < iterations; ++it) {
    fft::Spectrum s = fft.forward(estimate);
    for (std::size_t i = 0; i < s.size(); ++i)
      s[i] *= otf[i];
    const Plane blurred = fft.inverse(s);
    for (std::size_t i = 0; i < ratio.size(); ++i)
      ratio.values[i] =
          observed.values[i] / std::max(blurred.values[i], kRichardsonLucyFloor);

    // correlation with p == convolution with the flipped kernel
    fft::Spectrum r = fft.forward(ratio);
    for (std::size_t i = 0; i < r.size(); ++i)
      r[i] *= std::conj(otf[i]);
    const Plane correction = fft.inverse(r);
    for (std::size_t i = 0; i < estimate.size(); ++i)
      estimate.values[i] = std::max(0.0, estimate.values[i] * correction.values[i]);
  }
  return estimate;
}

} // namespace cxgan::psf
