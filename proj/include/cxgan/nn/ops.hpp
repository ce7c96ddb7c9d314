// SPDX-License-Identifier: Apache-2.0
/**
 * @file   ops.hpp
 * @brief  Forward and backward kernels for every layer the two networks use.
 *
 * All ops are pure functions of their arguments. Backward functions return
 * gradients; accumulating them into a Parameter is left to the caller.
 * Reductions (pool means, dense dot products, weight and bias gradients)
 * accumulate in double.
 */
#pragma once

#include "cxgan/nn/tensor.hpp"

#include <optional>

namespace cxgan::nn {

struct ConvSpec {
  int stride = 1;
  /// Zero padding on every side. Empty means "same": (k - 1) / 2.
  std::optional<int> padding;
};

/// Cross-correlation (no kernel flip) plus per-channel bias.
/// weight is (c_out, c_in, kh, kw); bias holds c_out values.
template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T> &input, const BasicTensor<T> &weight,
                      const BasicTensor<T> &bias, ConvSpec spec = {});

template <typename T> struct ConvGrads {
  BasicTensor<T> input;
  BasicTensor<T> weight;
  BasicTensor<T> bias;
};

template <typename T>
ConvGrads<T> conv2d_backward(const BasicTensor<T> &input,
                             const BasicTensor<T> &weight,
                             const BasicTensor<T> &output_grad,
                             ConvSpec spec = {});

/// max(0, x) - slope * max(0, -x)
template <typename T> BasicTensor<T> lrelu(const BasicTensor<T> &x, T slope);

/// Subgradient at x == 0 uses the negative-side slope.
template <typename T>
BasicTensor<T> lrelu_backward(const BasicTensor<T> &x,
                              const BasicTensor<T> &output_grad, T slope);

/// Non-overlapping size x size window means.
template <typename T>
BasicTensor<T> avg_pool(const BasicTensor<T> &x, std::size_t size);

template <typename T>
BasicTensor<T> avg_pool_backward(const BasicTensor<T> &output_grad,
                                 std::size_t size);

template <typename T>
BasicTensor<T> upsample_nn(const BasicTensor<T> &x, std::size_t factor);

template <typename T>
BasicTensor<T> upsample_nn_backward(const BasicTensor<T> &output_grad,
                                    std::size_t factor);

/// Channels of a first, then channels of b.
template <typename T>
BasicTensor<T> concat_channels(const BasicTensor<T> &a, const BasicTensor<T> &b);

/// Inverse of concat_channels: the first `channels_a` channels and the rest.
template <typename T>
std::pair<BasicTensor<T>, BasicTensor<T>>
split_channels(const BasicTensor<T> &x, std::size_t channels_a);

template <typename T>
BasicTensor<T> add(const BasicTensor<T> &a, const BasicTensor<T> &b);

/// Affine map on each flattened batch item. weight is (out, in, 1, 1),
/// result is (n, out, 1, 1).
template <typename T>
BasicTensor<T> dense(const BasicTensor<T> &x, const BasicTensor<T> &weight,
                     const BasicTensor<T> &bias);

template <typename T> struct DenseGrads {
  BasicTensor<T> input; ///< same shape as the forward input
  BasicTensor<T> weight;
  BasicTensor<T> bias;
};

template <typename T>
DenseGrads<T> dense_backward(const BasicTensor<T> &x,
                             const BasicTensor<T> &weight,
                             const BasicTensor<T> &output_grad);

template <typename T> BasicTensor<T> sigmoid(const BasicTensor<T> &x);

/// Takes the forward *output* s and returns g * s * (1 - s).
template <typename T>
BasicTensor<T> sigmoid_backward(const BasicTensor<T> &s,
                                const BasicTensor<T> &output_grad);

/// Overflow-safe logistic function for a single value.
double sigmoid(double x);

} // namespace cxgan::nn
