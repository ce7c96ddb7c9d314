// SPDX-License-Identifier: Apache-2.0
/**
 * @file   fft2d.hpp
 * @brief  Real 2-D FFT of a fixed size, backed by FFTW.
 *
 * The spectrum is FFTW's half-complex layout: height x (width / 2 + 1).
 * inverse() includes the 1 / (height * width) normalization.
 */
#pragma once

#include "cxgan/plane.hpp"

#include <complex>
#include <memory>
#include <vector>

namespace cxgan::fft {

using Spectrum = std::vector<std::complex<double>>;

class Fft2d {
public:
  Fft2d(std::size_t height, std::size_t width);
  ~Fft2d();
  Fft2d(const Fft2d &) = delete;
  Fft2d &operator=(const Fft2d &) = delete;
  Fft2d(Fft2d &&) noexcept;
  Fft2d &operator=(Fft2d &&) noexcept;

  std::size_t height() const;
  std::size_t width() const;
  std::size_t spectrum_width() const { return width() / 2 + 1; }

  Spectrum forward(const Plane &image) const;
  Plane inverse(const Spectrum &spectrum) const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Circular convolution of `image` with `kernel`, where the kernel's center
/// pixel ((kh - 1) / 2, (kw - 1) / 2) sits at the origin. Kernel taps that
/// fall outside the image wrap around.
Plane circular_convolve(const Plane &image, const Plane &kernel);

/// The kernel laid out on an image-sized grid with its center at (0, 0).
Plane wrap_kernel(const Plane &kernel, std::size_t height, std::size_t width);

} // namespace cxgan::fft
