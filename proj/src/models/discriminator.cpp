// SPDX-License-Identifier: Apache-2.0
#include "cxgan/models/discriminator.hpp"

#include <algorithm>
#include <bit>

namespace cxgan::models {

std::size_t DiscriminatorConfig::strided_blocks() const {
  return static_cast<std::size_t>(std::countr_zero(input_size / 4));
}

std::size_t DiscriminatorConfig::width(std::size_t block) const {
  return std::min(max_width, base_width << (block / 2));
}

void DiscriminatorConfig::validate() const {
  if (channels == 0 || base_width == 0 || max_width == 0 || hidden == 0)
    throw Error("discriminator: widths must be positive");
  if (input_size < 4 || input_size % 4 != 0 || !std::has_single_bit(input_size / 4))
    throw Error("discriminator: input size must be 4 * 2^k, got " + std::to_string(input_size));
  if (blocks == 0 || convs_per_block == 0)
    throw Error("discriminator: need at least one block of one conv");
  if (strided_blocks() > blocks)
    throw Error("discriminator: " + std::to_string(blocks) + " blocks cannot reduce " +
                std::to_string(input_size) + " px to 4 px");
}

template <typename T>
BasicDiscriminator<T>::BasicDiscriminator(const DiscriminatorConfig &config) : config_(config) {
  config_.validate();
  stem_ = ConvAct<T>("stem", config_.channels, config_.base_width);
  std::size_t in = config_.base_width;
  for (std::size_t b = 0; b < config_.blocks; ++b) {
    std::vector<ConvAct<T>> layers;
    const std::size_t w = config_.width(b);
    for (std::size_t i = 0; i < config_.convs_per_block; ++i) {
      const int stride = (i == 0 && b < config_.strided_blocks()) ? 2 : 1;
      layers.emplace_back("block" + std::to_string(b + 1) + ".conv" + std::to_string(i + 1),
                          i == 0 ? in : w, w, stride);
    }
    blocks_.push_back(std::move(layers));
    in = w;
  }
  fc1_ = Dense<T>("fc1", in, config_.hidden);
  fc2_ = Dense<T>("fc2", config_.hidden, 1);
}

template <typename T> void BasicDiscriminator<T>::init(nn::Rng &rng) {
  stem_.conv.init(rng);
  for (auto &blk : blocks_)
    for (auto &l : blk)
      l.conv.init(rng);
  fc1_.init(rng);
  fc2_.init(rng);
}

template <typename T>
BasicTensor<T> BasicDiscriminator<T>::forward(const BasicTensor<T> &x) {
  const nn::Shape s = x.shape();
  if (s.c != config_.channels || s.h != config_.input_size || s.w != config_.input_size)
    throw ShapeError("discriminator input " + s.str() + ": expected (n," +
                     std::to_string(config_.channels) + "," +
                     std::to_string(config_.input_size) + "," +
                     std::to_string(config_.input_size) + ")");
  BasicTensor<T> h = stem_.forward(x);
  for (auto &blk : blocks_)
    for (auto &l : blk)
      h = l.forward(h);
  h = nn::avg_pool(h, 4);
  hidden_pre_ = fc1_.forward(h);
  return fc2_.forward(nn::lrelu(hidden_pre_, static_cast<T>(kLreluSlope)));
}

template <typename T>
BasicTensor<T> BasicDiscriminator<T>::backward(const BasicTensor<T> &grad_logits) {
  BasicTensor<T> g = fc2_.backward(grad_logits);
  g = fc1_.backward(nn::lrelu_backward(hidden_pre_, g, static_cast<T>(kLreluSlope)));
  g = nn::avg_pool_backward(g, 4);
  for (auto b = blocks_.rbegin(); b != blocks_.rend(); ++b)
    for (auto l = b->rbegin(); l != b->rend(); ++l)
      g = l->backward(g);
  return stem_.backward(g);
}

template <typename T> ParameterList<T> BasicDiscriminator<T>::parameters() {
  ParameterList<T> out;
  stem_.conv.collect(out);
  for (auto &blk : blocks_)
    for (auto &l : blk)
      l.conv.collect(out);
  fc1_.collect(out);
  fc2_.collect(out);
  return out;
}

template <typename T> std::uint64_t BasicDiscriminator<T>::activation_pattern() const {
  std::uint64_t h = 1469598103934665603ull;
  hash_signs(h, stem_.pre);
  for (const auto &blk : blocks_)
    for (const auto &l : blk)
      hash_signs(h, l.pre);
  hash_signs(h, hidden_pre_);
  return h;
}

template <typename T> void BasicDiscriminator<T>::zero_grad() {
  for (auto *p : parameters())
    p->zero_grad();
}

template class BasicDiscriminator<float>;
template class BasicDiscriminator<double>;

} // namespace cxgan::models
