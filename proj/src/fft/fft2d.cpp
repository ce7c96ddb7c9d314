// SPDX-License-Identifier: Apache-2.0
#include "cxgan/fft/fft2d.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>

namespace cxgan::fft {
namespace {
// FFTW's planner is not re-entrant.
std::mutex &planner_mutex() {
  static std::mutex m;
  return m;
}
} // namespace

struct Fft2d::Impl {
  std::size_t h, w;
  double *real = nullptr;
  fftw_complex *complex = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  Impl(std::size_t height, std::size_t width) : h(height), w(width) {
    if (h == 0 || w == 0)
      throw Error("fft: empty image");
    const std::size_t cw = w / 2 + 1;
    std::lock_guard lock(planner_mutex());
    real = fftw_alloc_real(h * w);
    complex = fftw_alloc_complex(h * cw);
    forward = fftw_plan_dft_r2c_2d(static_cast<int>(h), static_cast<int>(w),
                                   real, complex, FFTW_ESTIMATE);
    backward = fftw_plan_dft_c2r_2d(static_cast<int>(h), static_cast<int>(w),
                                    complex, real, FFTW_ESTIMATE);
  }
  ~Impl() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward);
    fftw_destroy_plan(backward);
    fftw_free(real);
    fftw_free(complex);
  }
};

Fft2d::Fft2d(std::size_t height, std::size_t width)
    : impl_(std::make_unique<Impl>(height, width)) {}
Fft2d::~Fft2d() = default;
Fft2d::Fft2d(Fft2d &&) noexcept = default;
Fft2d &Fft2d::operator=(Fft2d &&) noexcept = default;

std::size_t Fft2d::height() const { return impl_->h; }
std::size_t Fft2d::width() const { return impl_->w; }

Spectrum Fft2d::forward(const Plane &image) const {
  if (image.height != impl_->h || image.width != impl_->w)
    throw ShapeError("fft: image " + image.dims() + " does not match plan " +
                     std::to_string(impl_->h) + "x" + std::to_string(impl_->w));
  std::copy(image.values.begin(), image.values.end(), impl_->real);
  fftw_execute(impl_->forward);
  Spectrum out(impl_->h * spectrum_width());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = {impl_->complex[i][0], impl_->complex[i][1]};
  return out;
}

Plane Fft2d::inverse(const Spectrum &spectrum) const {
  if (spectrum.size() != impl_->h * spectrum_width())
    throw ShapeError("fft: spectrum size does not match plan");
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    impl_->complex[i][0] = spectrum[i].real();
    impl_->complex[i][1] = spectrum[i].imag();
  }
  // c2r destroys its input; it was a scratch copy
  fftw_execute(impl_->backward);
  Plane out(impl_->h, impl_->w);
  const double scale = 1.0 / static_cast<double>(impl_->h * impl_->w);
  for (std::size_t i = 0; i < out.size(); ++i)
    out.values[i] = impl_->real[i] * scale;
  return out;
}

Plane wrap_kernel(const Plane &kernel, std::size_t height, std::size_t width) {
  Plane out(height, width);
  const std::size_t cy = (kernel.height - 1) / 2;
  const std::size_t cx = (kernel.width - 1) / 2;
  for (std::size_t ky = 0; ky < kernel.height; ++ky) {
    // (ky - cy) mod height, computed without going negative
    const std::size_t y = (ky + height * (cy / height + 1) - cy) % height;
    for (std::size_t kx = 0; kx < kernel.width; ++kx) {
      const std::size_t x = (kx + width * (cx / width + 1) - cx) % width;
      out.at(y, x) += kernel.at(ky, kx);
    }
  }
  return out;
}

Plane circular_convolve(const Plane &image, const Plane &kernel) {
  const Fft2d fft(image.height, image.width);
  const Spectrum k = fft.forward(wrap_kernel(kernel, image.height, image.width));
  Spectrum s = fft.forward(image);
  for (std::size_t i = 0; i < s.size(); ++i)
    s[i] *= k[i];
  return fft.inverse(s);
}

} // namespace cxgan::fft
