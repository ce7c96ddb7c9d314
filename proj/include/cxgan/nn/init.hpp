// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "cxgan/nn/tensor.hpp"

#include <cmath>
#include <random>

namespace cxgan::nn {

using Rng = std::mt19937_64;

/// Uniform in [-s, s], s = sqrt(6 / (fan_in + fan_out)).
template <typename T>
void glorot_uniform(BasicTensor<T> &t, std::size_t fan_in, std::size_t fan_out,
                    Rng &rng) {
  const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-s, s);
  for (auto &v : t.values())
    v = static_cast<T>(dist(rng));
}

/// Uniform in [-s, s], s = sqrt(6 / ((1 + a^2) fan_in)): keeps activation
/// variance through LReLU layers of negative slope a.
template <typename T>
void he_uniform(BasicTensor<T> &t, std::size_t fan_in, double slope, Rng &rng) {
  const double s = std::sqrt(6.0 / ((1.0 + slope * slope) * static_cast<double>(fan_in)));
  std::uniform_real_distribution<double> dist(-s, s);
  for (auto &v : t.values())
    v = static_cast<T>(dist(rng));
}

} // namespace cxgan::nn
