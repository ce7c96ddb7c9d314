// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "cxgan/error.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace cxgan {

/// A single-channel 2-D double image, row-major.
struct Plane {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;

  Plane() = default;
  Plane(std::size_t h, std::size_t w, double fill = 0.0)
      : height(h), width(w), values(h * w, fill) {}

  std::size_t size() const { return values.size(); }
  double &at(std::size_t y, std::size_t x) { return values[y * width + x]; }
  double at(std::size_t y, std::size_t x) const { return values[y * width + x]; }

  std::string dims() const {
    return std::to_string(height) + "x" + std::to_string(width);
  }
  bool operator==(const Plane &) const = default;
};

} // namespace cxgan
