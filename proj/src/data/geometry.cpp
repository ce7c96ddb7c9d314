// SPDX-License-Identifier: Apache-2.0
#include "cxgan/data/geometry.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

namespace cxgan::data {

Transform Transform::rotate(double angle_deg) {
  Transform t;
  t.kind = TransformKind::Rotate;
  t.angle_deg = angle_deg;
  return t;
}

Transform Transform::crop(long y, long x, std::size_t height, std::size_t width) {
  Transform t;
  t.kind = TransformKind::Crop;
  t.dy = y;
  t.dx = x;
  t.height = height;
  t.width = width;
  return t;
}

Transform Transform::flip_horizontal() {
  Transform t;
  t.kind = TransformKind::FlipHorizontal;
  return t;
}

Transform Transform::flip_vertical() {
  Transform t;
  t.kind = TransformKind::FlipVertical;
  return t;
}

Transform Transform::rot90(int quarter_turns) {
  Transform t;
  t.kind = TransformKind::Rot90;
  t.quarter_turns = ((quarter_turns % 4) + 4) % 4;
  return t;
}

Transform Transform::translate(long dy, long dx) {
  Transform t;
  t.kind = TransformKind::Translate;
  t.dy = dy;
  t.dx = dx;
  return t;
}

std::string Transform::str() const {
  char buf[96];
  switch (kind) {
  case TransformKind::Rotate:
    std::snprintf(buf, sizeof buf, "rotate(%.6g)", angle_deg);
    break;
  case TransformKind::Crop:
    std::snprintf(buf, sizeof buf, "crop(%ld,%ld,%zu,%zu)", dy, dx, height, width);
    break;
  case TransformKind::FlipHorizontal:
    return "flip_horizontal";
  case TransformKind::FlipVertical:
    return "flip_vertical";
  case TransformKind::Rot90:
    std::snprintf(buf, sizeof buf, "rot90(%d)", quarter_turns);
    break;
  case TransformKind::Translate:
    std::snprintf(buf, sizeof buf, "translate(%ld,%ld)", dy, dx);
    break;
  }
  return buf;
}

namespace {

struct Dims {
  std::size_t h, w;
};

Dims output_dims(Dims in, const Transform &t) {
  switch (t.kind) {
  case TransformKind::Crop:
    return {t.height, t.width};
  case TransformKind::Rot90:
    return t.quarter_turns % 2 ? Dims{in.w, in.h} : in;
  default:
    return in;
  }
}

// Applies t to one h*w plane. Src/Dst are float or double.
template <typename T>
void transform_plane(const T *src, Dims in, T *dst, Dims out, const Transform &t) {
  const long H = static_cast<long>(in.h), W = static_cast<long>(in.w);
  auto at = [&](long y, long x) -> T {
    return (y >= 0 && y < H && x >= 0 && x < W) ? src[y * W + x] : T(0);
  };
  switch (t.kind) {
  case TransformKind::Rotate: {
    if (t.angle_deg == 0.0) {
      std::copy(src, src + in.h * in.w, dst);
      return;
    }
    const double th = t.angle_deg * std::numbers::pi / 180.0;
    const double c = std::cos(th), s = std::sin(th);
    const double cy = (H - 1) / 2.0, cx = (W - 1) / 2.0;
    for (long y = 0; y < H; ++y)
      for (long x = 0; x < W; ++x) {
        // inverse map of a counterclockwise (y-up) rotation
        const double u = x - cx, v = y - cy;
        const double sx = cx + c * u - s * v;
        const double sy = cy + s * u + c * v;
        const double fy = std::floor(sy), fx = std::floor(sx);
        const long y0 = static_cast<long>(fy), x0 = static_cast<long>(fx);
        const double ay = sy - fy, ax = sx - fx;
        const double val = (1 - ay) * ((1 - ax) * at(y0, x0) + ax * at(y0, x0 + 1)) +
                           ay * ((1 - ax) * at(y0 + 1, x0) + ax * at(y0 + 1, x0 + 1));
        dst[y * W + x] = static_cast<T>(val);
      }
    return;
  }
  case TransformKind::Crop:
    for (long y = 0; y < static_cast<long>(out.h); ++y)
      for (long x = 0; x < static_cast<long>(out.w); ++x)
        dst[y * static_cast<long>(out.w) + x] = at(y + t.dy, x + t.dx);
    return;
  case TransformKind::FlipHorizontal:
    for (long y = 0; y < H; ++y)
      for (long x = 0; x < W; ++x)
        dst[y * W + x] = src[y * W + (W - 1 - x)];
    return;
  case TransformKind::FlipVertical:
    for (long y = 0; y < H; ++y)
      for (long x = 0; x < W; ++x)
        dst[y * W + x] = src[(H - 1 - y) * W + x];
    return;
  case TransformKind::Rot90: {
    const long OW = static_cast<long>(out.w), OH = static_cast<long>(out.h);
    for (long y = 0; y < OH; ++y)
      for (long x = 0; x < OW; ++x) {
        long sy = y, sx = x;
        switch (t.quarter_turns) {
        case 1: // right column moves to the top
          sy = x;
          sx = W - 1 - y;
          break;
        case 2:
          sy = H - 1 - y;
          sx = W - 1 - x;
          break;
        case 3:
          sy = H - 1 - x;
          sx = y;
          break;
        default:
          break;
        }
        dst[y * OW + x] = src[sy * W + sx];
      }
    return;
  }
  case TransformKind::Translate:
    for (long y = 0; y < H; ++y)
      for (long x = 0; x < W; ++x)
        dst[y * W + x] = at(y - t.dy, x - t.dx);
    return;
  }
}

} // namespace

nn::Tensor apply_transform(const nn::Tensor &image, const Transform &t) {
  const nn::Shape s = image.shape();
  const Dims in{s.h, s.w};
  const Dims out = output_dims(in, t);
  nn::Tensor result({s.n, s.c, out.h, out.w});
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t c = 0; c < s.c; ++c)
      transform_plane(image.plane(n, c), in, result.plane(n, c), out, t);
  return result;
}

nn::Tensor apply_transforms(const nn::Tensor &image, std::span<const Transform> ts) {
  nn::Tensor out = image;
  for (const Transform &t : ts)
    out = apply_transform(out, t);
  return out;
}

Plane apply_transform(const Plane &image, const Transform &t) {
  const Dims in{image.height, image.width};
  const Dims out = output_dims(in, t);
  Plane result(out.h, out.w);
  transform_plane(image.values.data(), in, result.values.data(), out, t);
  return result;
}

Plane grayscale(const nn::Tensor &image) {
  const nn::Shape s = image.shape();
  if (s.n < 1 || s.c < 1)
    throw ShapeError("grayscale of empty tensor " + s.str());
  Plane out(s.h, s.w);
  for (std::size_t c = 0; c < s.c; ++c) {
    const float *p = image.plane(0, c);
    for (std::size_t i = 0; i < out.size(); ++i)
      out.values[i] += p[i];
  }
  for (double &v : out.values)
    v /= static_cast<double>(s.c);
  return out;
}

Plane roll(const Plane &image, long dy, long dx) {
  const long H = static_cast<long>(image.height), W = static_cast<long>(image.width);
  Plane out(image.height, image.width);
  for (long y = 0; y < H; ++y) {
    const long sy = (((y - dy) % H) + H) % H;
    for (long x = 0; x < W; ++x)
      out.at(y, x) = image.at(sy, (((x - dx) % W) + W) % W);
  }
  return out;
}

} // namespace cxgan::data
