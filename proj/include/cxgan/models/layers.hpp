// SPDX-License-Identifier: Apache-2.0
/**
 * @file   layers.hpp
 * @brief  Stateful wrappers around the nn ops: each layer owns its
 *         parameters and caches what its backward pass needs.
 *
 * backward() must follow the matching forward(); it adds into the
 * parameter gradients and returns the gradient of the layer input.
 */
#pragma once

#include "cxgan/nn/init.hpp"
#include "cxgan/nn/ops.hpp"
#include "cxgan/nn/parameter.hpp"

#include <cstdint>
#include <string>

namespace cxgan::models {

using nn::BasicParameter;
using nn::BasicTensor;
using nn::ParameterList;

/// Negative-side slope of every LReLU in both networks.
inline constexpr double kLreluSlope = 0.1;

namespace detail {
template <typename T> void accumulate(BasicTensor<T> &into, const BasicTensor<T> &g) {
  for (std::size_t i = 0; i < into.size(); ++i)
    into[i] += g[i];
}
} // namespace detail

template <typename T> struct Conv {
  BasicParameter<T> weight;
  BasicParameter<T> bias;
  nn::ConvSpec spec;
  BasicTensor<T> input;

  Conv() = default;
  Conv(const std::string &name, std::size_t c_in, std::size_t c_out, std::size_t k = 3,
       int stride = 1)
      : weight(name + ".weight", {c_out, c_in, k, k}), bias(name + ".bias", {1, c_out, 1, 1}),
        spec{stride, std::nullopt} {}

  std::size_t in_channels() const { return weight.value.shape().c; }
  std::size_t out_channels() const { return weight.value.shape().n; }

  void init(nn::Rng &rng) {
    const nn::Shape s = weight.value.shape();
    nn::he_uniform(weight.value, s.c * s.h * s.w, kLreluSlope, rng);
    bias.value.fill(T(0));
  }

  BasicTensor<T> forward(const BasicTensor<T> &x) {
    input = x;
    return nn::conv2d(x, weight.value, bias.value, spec);
  }

  BasicTensor<T> backward(const BasicTensor<T> &g) {
    const nn::ConvGrads<T> gr = nn::conv2d_backward(input, weight.value, g, spec);
    detail::accumulate(weight.grad, gr.weight);
    detail::accumulate(bias.grad, gr.bias);
    return gr.input;
  }

  void collect(ParameterList<T> &out) {
    out.push_back(&weight);
    out.push_back(&bias);
  }
};

/// Conv followed by LReLU.
template <typename T> struct ConvAct {
  Conv<T> conv;
  BasicTensor<T> pre;

  ConvAct() = default;
  ConvAct(const std::string &name, std::size_t c_in, std::size_t c_out, int stride = 1)
      : conv(name, c_in, c_out, 3, stride) {}

  BasicTensor<T> forward(const BasicTensor<T> &x) {
    pre = conv.forward(x);
    return nn::lrelu(pre, static_cast<T>(kLreluSlope));
  }
  BasicTensor<T> backward(const BasicTensor<T> &g) {
    return conv.backward(nn::lrelu_backward(pre, g, static_cast<T>(kLreluSlope)));
  }
};

template <typename T> struct Dense {
  BasicParameter<T> weight;
  BasicParameter<T> bias;
  BasicTensor<T> input;

  Dense() = default;
  Dense(const std::string &name, std::size_t in, std::size_t out)
      : weight(name + ".weight", {out, in, 1, 1}), bias(name + ".bias", {1, out, 1, 1}) {}

  void init(nn::Rng &rng) {
    const nn::Shape s = weight.value.shape();
    nn::glorot_uniform(weight.value, s.c, s.n, rng);
    bias.value.fill(T(0));
  }

  BasicTensor<T> forward(const BasicTensor<T> &x) {
    input = x;
    return nn::dense(x, weight.value, bias.value);
  }
  BasicTensor<T> backward(const BasicTensor<T> &g) {
    const nn::DenseGrads<T> gr = nn::dense_backward(input, weight.value, g);
    detail::accumulate(weight.grad, gr.weight);
    detail::accumulate(bias.grad, gr.bias);
    return gr.input;
  }
  void collect(ParameterList<T> &out) {
    out.push_back(&weight);
    out.push_back(&bias);
  }
};

/// Folds the sign of every element of `pre` into an FNV-1a hash: two
/// forward passes with equal hashes ran through the same linear pieces.
template <typename T> void hash_signs(std::uint64_t &h, const BasicTensor<T> &pre) {
  for (T v : pre.values()) {
    h ^= v > T(0) ? 1u : 0u;
    h *= 1099511628211ull;
  }
}

/// Copies values between models of the same topology, converting the
/// element type (float checkpoints into double grad-check copies).
template <typename To, typename From>
void copy_parameters(const ParameterList<From> &src, const ParameterList<To> &dst) {
  if (src.size() != dst.size())
    throw ShapeError("copy_parameters: parameter counts differ");
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i]->name != dst[i]->name || src[i]->value.shape() != dst[i]->value.shape())
      throw ShapeError("copy_parameters: " + src[i]->name + " vs " + dst[i]->name);
    dst[i]->value = BasicTensor<To>::from(src[i]->value);
  }
}

} // namespace cxgan::models
