// SPDX-License-Identifier: Apache-2.0
/**
 * @file   geometry.hpp
 * @brief  Rigid image transforms and the log entries that describe them.
 *
 * Rotation is about the image center ((h - 1) / 2, (w - 1) / 2), positive
 * angles counterclockwise on screen, bilinear, zero outside the source.
 * Crops and translations fill uncovered pixels with zero.
 */
#pragma once

#include "cxgan/nn/tensor.hpp"
#include "cxgan/plane.hpp"

#include <span>
#include <string>

namespace cxgan::data {

enum class TransformKind { Rotate, Crop, FlipHorizontal, FlipVertical, Rot90, Translate };

struct Transform {
  TransformKind kind = TransformKind::Translate;
  double angle_deg = 0.0;
  int quarter_turns = 0;
  long dy = 0; ///< translation, or crop origin row
  long dx = 0; ///< translation, or crop origin column
  std::size_t height = 0;
  std::size_t width = 0;

  static Transform rotate(double angle_deg);
  static Transform crop(long y, long x, std::size_t height, std::size_t width);
  static Transform flip_horizontal();
  static Transform flip_vertical();
  static Transform rot90(int quarter_turns);
  static Transform translate(long dy, long dx);

  std::string str() const;
  bool operator==(const Transform &) const = default;
};

nn::Tensor apply_transform(const nn::Tensor &image, const Transform &t);
nn::Tensor apply_transforms(const nn::Tensor &image, std::span<const Transform> ts);

Plane apply_transform(const Plane &image, const Transform &t);

/// Channel mean of batch item 0.
Plane grayscale(const nn::Tensor &image);

/// Circular shift: out(y, x) = in(y - dy, x - dx).
Plane roll(const Plane &image, long dy, long dx);

} // namespace cxgan::data
