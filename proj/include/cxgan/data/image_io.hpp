// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "cxgan/nn/tensor.hpp"

#include <filesystem>

namespace cxgan::data {

/// Reads an 8- or 16-bit grayscale or RGB TIFF/PNG as a (1, C, H, W) tensor
/// scaled by the dtype maximum. Channels come back in RGB order.
nn::Tensor load_image(const std::filesystem::path &path);

/// Writes a (1, 1|3, H, W) tensor clamped to [0, 1] and quantized to
/// `bit_depth` (8 or 16) bits.
void save_image(const std::filesystem::path &path, const nn::Tensor &image,
                int bit_depth = 16);

bool is_image_file(const std::filesystem::path &path);

} // namespace cxgan::data
