// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "cxgan/nn/tensor.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cxgan::nn {

/// A trainable tensor with its gradient accumulator.
template <typename T> struct BasicParameter {
  std::string name;
  BasicTensor<T> value;
  BasicTensor<T> grad;

  BasicParameter() = default;
  BasicParameter(std::string n, Shape shape)
      : name(std::move(n)), value(shape), grad(shape) {}

  void zero_grad() { grad.fill(T(0)); }
};

using Parameter = BasicParameter<float>;

/// Non-owning, ordered view of a model's parameters. Order is the
/// serialization order of checkpoints.
template <typename T> using ParameterList = std::vector<BasicParameter<T> *>;

/// FNV-1a over the raw bytes of every parameter value. Used to assert that
/// a training step left a frozen model untouched.
template <typename T>
std::uint64_t checksum(const ParameterList<T> &params) {
  std::uint64_t h = 1469598103934665603ull;
  for (const auto *p : params) {
    const auto *bytes = reinterpret_cast<const unsigned char *>(p->value.data());
    for (std::size_t i = 0; i < p->value.size() * sizeof(T); ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
  }
  return h;
}

} // namespace cxgan::nn
