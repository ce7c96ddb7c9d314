// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "cxgan/nn/tensor.hpp"
#include "cxgan/psf/psf.hpp"

#include <vector>

namespace cxgan::psf {

/// Emission wavelengths for the R, G and B channels.
inline const std::vector<double> kRgbWavelengthsNm{565.0, 520.0, 461.0};

struct ChannelDeconvOptions {
  PsfParams optics;                       ///< wavelength is replaced per channel
  std::vector<double> wavelengths_nm = kRgbWavelengthsNm; ///< one per channel
  int iterations = 10;
  bool delta = false; ///< use a delta kernel instead of the optics model
};

/// Richardson-Lucy on every (n, c) plane with that channel's PSF; the
/// result is clamped to [0, 1].
nn::Tensor deconvolve_channels(const nn::Tensor &image, const ChannelDeconvOptions &options);

} // namespace cxgan::psf
