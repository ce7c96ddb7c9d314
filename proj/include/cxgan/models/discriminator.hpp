// SPDX-License-Identifier: Apache-2.0
/**
 * @file   discriminator.hpp
 * @brief  Ten-block CNN that scores realism with one logit per image.
 *
 * stem conv + LReLU, then blocks of four conv + LReLU. Block b (0-based)
 * has width min(cap, base * 2^(b/2)); the first conv of each of the first
 * log2(input_size / 4) blocks has stride 2, bringing the map to 4x4. A 4x4
 * average pool, dense(hidden) + LReLU and dense(1) give the logit.
 */
#pragma once

#include "cxgan/models/layers.hpp"

#include <array>
#include <vector>

namespace cxgan::models {

struct DiscriminatorConfig {
  std::size_t channels = 3;
  std::size_t input_size = 256;
  std::size_t base_width = 16;
  std::size_t max_width = 256;
  std::size_t hidden = 64;
  std::size_t blocks = 10;
  std::size_t convs_per_block = 4;

  std::size_t strided_blocks() const;
  std::size_t width(std::size_t block) const;
  void validate() const;
  bool operator==(const DiscriminatorConfig &) const = default;
};

template <typename T> class BasicDiscriminator {
public:
  explicit BasicDiscriminator(const DiscriminatorConfig &config = {});

  const DiscriminatorConfig &config() const { return config_; }
  void init(nn::Rng &rng);

  /// (n, 1, 1, 1) logits.
  BasicTensor<T> forward(const BasicTensor<T> &x);
  /// Takes d loss / d logit, returns d loss / d input.
  BasicTensor<T> backward(const BasicTensor<T> &grad_logits);

  ParameterList<T> parameters();
  void zero_grad();

  /// Hash of the LReLU sign pattern of the last forward.
  std::uint64_t activation_pattern() const;

  std::size_t block_count() const { return blocks_.size(); }
  std::size_t convs_in_block(std::size_t b) const { return blocks_[b].size(); }

  /// Sigmoid of the logits.
  static BasicTensor<T> probability(const BasicTensor<T> &logits) {
    return nn::sigmoid(logits);
  }

private:
  DiscriminatorConfig config_;
  ConvAct<T> stem_;
  std::vector<std::vector<ConvAct<T>>> blocks_;
  Dense<T> fc1_;
  Dense<T> fc2_;
  BasicTensor<T> hidden_pre_;
};

using Discriminator = BasicDiscriminator<float>;

} // namespace cxgan::models
