// SPDX-License-Identifier: Apache-2.0
/**
 * @file   generator.hpp
 * @brief  Residual U-Net generator.
 *
 * Down block k: t = LReLU(conv(x)) changes width to base * 2^(k-1), then
 * d_k = t + LReLU(conv(LReLU(conv(LReLU(conv(t)))))) and a 2x2 average
 * pool. The bottleneck is one such block at base * 2^depth without the pool
 * and yields u_0. Up block k upsamples u_{k-1} by 2 (nearest), concatenates
 * [d_{depth+1-k}, up] and applies three conv + LReLU layers, the first of
 * which maps back to the skip width. A conv + LReLU head emits 3 channels.
 */
#pragma once

#include "cxgan/models/layers.hpp"

#include <array>
#include <vector>

namespace cxgan::models {

struct GeneratorConfig {
  std::size_t channels = 3;
  std::size_t base_width = 16;
  std::size_t depth = 4;

  /// Spatial dims must be divisible by this.
  std::size_t multiple() const { return std::size_t{1} << depth; }
  std::size_t width(std::size_t level) const { return base_width << level; }
  void validate() const;
  bool operator==(const GeneratorConfig &) const = default;
};

template <typename T> class BasicGenerator {
public:
  explicit BasicGenerator(const GeneratorConfig &config = {});

  const GeneratorConfig &config() const { return config_; }
  void init(nn::Rng &rng);

  BasicTensor<T> forward(const BasicTensor<T> &x);
  /// Gradient of the input; parameter gradients are accumulated.
  BasicTensor<T> backward(const BasicTensor<T> &grad_output);

  ParameterList<T> parameters();
  void zero_grad();

  /// Hash of the LReLU sign pattern of the last forward.
  std::uint64_t activation_pattern() const;

  /// Pre-pool output d_k of down block k (1-based) from the last forward.
  const BasicTensor<T> &skip(std::size_t k) const { return down_[k - 1].out; }
  /// Concat input of up block k (1-based) from the last forward.
  const BasicTensor<T> &concat(std::size_t k) const { return up_[k - 1].cat; }
  /// The three channel-preserving convs of down block k (1-based).
  std::array<Conv<T> *, 3> residual_convs(std::size_t k);
  Conv<T> &transition_conv(std::size_t k) { return down_.at(k - 1).transition.conv; }

private:
  struct ResidualBlock {
    ConvAct<T> transition;
    std::array<ConvAct<T>, 3> body;
    BasicTensor<T> out;
    BasicTensor<T> forward(const BasicTensor<T> &x);
    BasicTensor<T> backward(const BasicTensor<T> &g);
  };
  struct UpBlock {
    std::array<ConvAct<T>, 3> convs;
    std::size_t skip_channels = 0;
    BasicTensor<T> cat;
  };

  GeneratorConfig config_;
  std::vector<ResidualBlock> down_;
  ResidualBlock bottleneck_;
  std::vector<UpBlock> up_;
  ConvAct<T> head_;
};

using Generator = BasicGenerator<float>;

} // namespace cxgan::models
