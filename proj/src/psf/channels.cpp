// SPDX-License-Identifier: Apache-2.0
#include "cxgan/psf/channels.hpp"
#include "cxgan/psf/deconv.hpp"

#include <algorithm>

namespace cxgan::psf {

nn::Tensor deconvolve_channels(const nn::Tensor &image, const ChannelDeconvOptions &options) {
  const nn::Shape s = image.shape();
  if (!options.delta && options.wavelengths_nm.size() != s.c)
    throw Error("deconvolve: " + std::to_string(options.wavelengths_nm.size()) +
                " wavelengths for " + std::to_string(s.c) + " channels");

  std::vector<Psf> kernels;
  for (std::size_t c = 0; c < s.c; ++c) {
    if (options.delta) {
      kernels.push_back(delta_psf());
    } else {
      PsfParams p = options.optics;
      p.wavelength_nm = options.wavelengths_nm[c];
      kernels.push_back(born_wolf_psf(p));
    }
  }

  nn::Tensor out(s);
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t c = 0; c < s.c; ++c) {
      Plane plane(s.h, s.w);
      std::copy_n(image.plane(n, c), s.plane(), plane.values.begin());
      const Plane r = richardson_lucy(plane, kernels[c], options.iterations);
      std::transform(r.values.begin(), r.values.end(), out.plane(n, c),
                     [](double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); });
    }
  return out;
}

} // namespace cxgan::psf
