// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "cxgan/nn/tensor.hpp"
#include "cxgan/plane.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace cxgan::testing {

/// Smooth random texture in [0, 1]: a sum of Gaussian blobs.
inline Plane blob_scene(std::size_t h, std::size_t w, std::uint64_t seed, int blobs = 40,
                        double sigma = 3.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uy(0, static_cast<double>(h));
  std::uniform_real_distribution<double> ux(0, static_cast<double>(w));
  std::uniform_real_distribution<double> amp(0.2, 1.0);
  Plane p(h, w, 0.05);
  for (int b = 0; b < blobs; ++b) {
    const double cy = uy(rng), cx = ux(rng), a = amp(rng);
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
        p.at(y, x) += a * std::exp(-d2 / (2 * sigma * sigma));
      }
  }
  double mx = 0;
  for (double v : p.values)
    mx = std::max(mx, v);
  for (double &v : p.values)
    v = std::min(1.0, v / mx);
  return p;
}

/// Replicates a plane into a (1, c, h, w) tensor with per-channel gains.
inline nn::Tensor to_rgb(const Plane &p, std::size_t channels = 3) {
  nn::Tensor t({1, channels, p.height, p.width});
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t i = 0; i < p.size(); ++i)
      t.plane(0, c)[i] = static_cast<float>(p.values[i] * (1.0 - 0.2 * c));
  return t;
}

inline nn::Tensor random_image(std::size_t c, std::size_t h, std::size_t w,
                               std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> d(0, 1);
  nn::Tensor t({1, c, h, w});
  for (float &v : t.values())
    v = d(rng);
  return t;
}

/// HQ blob scene and an LQ copy that is box-blurred, dimmed and noisy,
/// standing in for a widefield / confocal pair.
struct SyntheticPair {
  nn::Tensor lq;
  nn::Tensor hq;
};

inline SyntheticPair degraded_pair(std::size_t size, std::uint64_t seed, int radius = 2,
                                   double gain = 0.7, double noise = 0.03) {
  const Plane hq = blob_scene(size, size, seed, static_cast<int>(size * size / 24), 1.5);
  Plane lq(size, size, 0.0);
  const int n = static_cast<int>(size);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      double s = 0;
      int k = 0;
      for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
          const int yy = y + dy, xx = x + dx;
          if (yy >= 0 && yy < n && xx >= 0 && xx < n) {
            s += hq.at(yy, xx);
            ++k;
          }
        }
      lq.at(y, x) = gain * s / k;
    }
  std::mt19937_64 rng(seed ^ 0x5bd1e995u);
  std::normal_distribution<double> eps(0.0, noise);
  for (double &v : lq.values)
    v = std::clamp(v + eps(rng), 0.0, 1.0);
  return {to_rgb(lq), to_rgb(hq)};
}

} // namespace cxgan::testing
