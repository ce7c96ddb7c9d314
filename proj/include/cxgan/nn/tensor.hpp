// SPDX-License-Identifier: Apache-2.0
/**
 * @file   tensor.hpp
 * @brief  Dense 4-axis (batch, channel, height, width) array, row-major.
 *
 * The library stores images and activations as BasicTensor<float>. The
 * kernels are also instantiated for double so that finite-difference
 * gradient checks are not drowned in float32 rounding.
 */
#pragma once

#include "cxgan/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cxgan::nn {

struct Shape {
  std::size_t n = 0;
  std::size_t c = 0;
  std::size_t h = 0;
  std::size_t w = 0;

  constexpr std::size_t size() const { return n * c * h * w; }
  constexpr std::size_t plane() const { return h * w; }
  /// Elements per batch item.
  constexpr std::size_t item() const { return c * h * w; }
  constexpr bool operator==(const Shape &) const = default;

  std::string str() const {
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
           std::to_string(h) + "," + std::to_string(w) + ")";
  }
};

template <typename T> class BasicTensor {
public:
  using value_type = T;

  BasicTensor() = default;
  explicit BasicTensor(Shape shape, T fill = T(0))
      : shape_(shape), data_(shape.size(), fill) {}
  BasicTensor(Shape shape, std::vector<T> data)
      : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape_.size())
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_.str());
  }

  /// Element-type conversion, e.g. float storage to a double grad-check copy.
  template <typename U> static BasicTensor from(const BasicTensor<U> &other) {
    BasicTensor out(other.shape());
    std::transform(other.values().begin(), other.values().end(),
                   out.data_.begin(), [](U v) { return static_cast<T>(v); });
    return out;
  }

  const Shape &shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  T *data() { return data_.data(); }
  const T *data() const { return data_.data(); }

  T &operator[](std::size_t i) { return data_[i]; }
  const T &operator[](std::size_t i) const { return data_[i]; }

  std::size_t offset(std::size_t n, std::size_t c, std::size_t y,
                     std::size_t x) const {
    return ((n * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }
  T &operator()(std::size_t n, std::size_t c, std::size_t y, std::size_t x) {
    return data_[offset(n, c, y, x)];
  }
  const T &operator()(std::size_t n, std::size_t c, std::size_t y,
                      std::size_t x) const {
    return data_[offset(n, c, y, x)];
  }

  /// Pointer to the h*w plane of (batch n, channel c).
  T *plane(std::size_t n, std::size_t c) { return data_.data() + offset(n, c, 0, 0); }
  const T *plane(std::size_t n, std::size_t c) const {
    return data_.data() + offset(n, c, 0, 0);
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](T v) { return std::isfinite(v); });
  }

  bool operator==(const BasicTensor &) const = default;

private:
  Shape shape_{};
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;

} // namespace cxgan::nn
