// SPDX-License-Identifier: Apache-2.0
#include "cxgan/models/generator.hpp"

namespace cxgan::models {

void GeneratorConfig::validate() const {
  if (channels == 0 || base_width == 0)
    throw Error("generator: channels and base width must be positive");
  if (depth == 0 || depth > 8)
    throw Error("generator: depth must be in [1, 8]");
}

template <typename T>
BasicTensor<T> BasicGenerator<T>::ResidualBlock::forward(const BasicTensor<T> &x) {
  const BasicTensor<T> t = transition.forward(x);
  BasicTensor<T> r = t;
  for (auto &layer : body)
    r = layer.forward(r);
  out = nn::add(t, r);
  return out;
}

template <typename T>
BasicTensor<T> BasicGenerator<T>::ResidualBlock::backward(const BasicTensor<T> &g) {
  // d = t + body(t): the skip path carries g straight to t
  BasicTensor<T> gb = g;
  for (auto it = body.rbegin(); it != body.rend(); ++it)
    gb = it->backward(gb);
  detail::accumulate(gb, g);
  return transition.backward(gb);
}

template <typename T>
BasicGenerator<T>::BasicGenerator(const GeneratorConfig &config) : config_(config) {
  config_.validate();
  auto residual = [](const std::string &name, std::size_t in, std::size_t w) {
    ResidualBlock b;
    b.transition = ConvAct<T>(name + ".transition", in, w);
    for (std::size_t i = 0; i < 3; ++i)
      b.body[i] = ConvAct<T>(name + ".conv" + std::to_string(i + 1), w, w);
    return b;
  };
  std::size_t in = config_.channels;
  for (std::size_t k = 0; k < config_.depth; ++k) {
    down_.push_back(residual("down" + std::to_string(k + 1), in, config_.width(k)));
    in = config_.width(k);
  }
  bottleneck_ = residual("bottleneck", in, config_.width(config_.depth));
  std::size_t prev = config_.width(config_.depth);
  for (std::size_t k = 1; k <= config_.depth; ++k) {
    const std::size_t skip_w = config_.width(config_.depth - k);
    const std::string name = "up" + std::to_string(k);
    UpBlock u;
    u.skip_channels = skip_w;
    u.convs[0] = ConvAct<T>(name + ".conv1", skip_w + prev, skip_w);
    u.convs[1] = ConvAct<T>(name + ".conv2", skip_w, skip_w);
    u.convs[2] = ConvAct<T>(name + ".conv3", skip_w, skip_w);
    up_.push_back(std::move(u));
    prev = skip_w;
  }
  head_ = ConvAct<T>("head", prev, config_.channels);
}

template <typename T> void BasicGenerator<T>::init(nn::Rng &rng) {
  for (auto &b : down_) {
    b.transition.conv.init(rng);
    for (auto &l : b.body)
      l.conv.init(rng);
  }
  bottleneck_.transition.conv.init(rng);
  for (auto &l : bottleneck_.body)
    l.conv.init(rng);
  for (auto &u : up_)
    for (auto &l : u.convs)
      l.conv.init(rng);
  head_.conv.init(rng);
}

template <typename T> BasicTensor<T> BasicGenerator<T>::forward(const BasicTensor<T> &x) {
  const nn::Shape s = x.shape();
  const std::size_t m = config_.multiple();
  if (s.c != config_.channels || s.h == 0 || s.w == 0 || s.h % m != 0 || s.w % m != 0)
    throw ShapeError("generator input " + s.str() + ": need " +
                     std::to_string(config_.channels) + " channels and spatial dims divisible by " +
                     std::to_string(m));
  BasicTensor<T> h = x;
  for (auto &b : down_)
    h = nn::avg_pool(b.forward(h), 2);
  BasicTensor<T> u = bottleneck_.forward(h);
  for (std::size_t k = 0; k < up_.size(); ++k) {
    UpBlock &blk = up_[k];
    blk.cat = nn::concat_channels(down_[config_.depth - 1 - k].out, nn::upsample_nn(u, 2));
    u = blk.cat;
    for (auto &l : blk.convs)
      u = l.forward(u);
  }
  return head_.forward(u);
}

template <typename T>
BasicTensor<T> BasicGenerator<T>::backward(const BasicTensor<T> &grad_output) {
  BasicTensor<T> g = head_.backward(grad_output);
  // skip gradients arrive before the down blocks run backward
  std::vector<BasicTensor<T>> skip_grads(config_.depth);
  for (std::size_t k = up_.size(); k-- > 0;) {
    UpBlock &blk = up_[k];
    for (auto it = blk.convs.rbegin(); it != blk.convs.rend(); ++it)
      g = it->backward(g);
    auto [g_skip, g_up] = nn::split_channels(g, blk.skip_channels);
    skip_grads[config_.depth - 1 - k] = std::move(g_skip);
    g = nn::upsample_nn_backward(g_up, 2);
  }
  g = bottleneck_.backward(g);
  for (std::size_t k = down_.size(); k-- > 0;) {
    BasicTensor<T> gd = nn::avg_pool_backward(g, 2);
    detail::accumulate(gd, skip_grads[k]);
    g = down_[k].backward(gd);
  }
  return g;
}

template <typename T> ParameterList<T> BasicGenerator<T>::parameters() {
  ParameterList<T> out;
  auto block = [&out](ResidualBlock &b) {
    b.transition.conv.collect(out);
    for (auto &l : b.body)
      l.conv.collect(out);
  };
  for (auto &b : down_)
    block(b);
  block(bottleneck_);
  for (auto &u : up_)
    for (auto &l : u.convs)
      l.conv.collect(out);
  head_.conv.collect(out);
  return out;
}

template <typename T> std::uint64_t BasicGenerator<T>::activation_pattern() const {
  std::uint64_t h = 1469598103934665603ull;
  auto block = [&h](const ResidualBlock &b) {
    hash_signs(h, b.transition.pre);
    for (const auto &l : b.body)
      hash_signs(h, l.pre);
  };
  for (const auto &b : down_)
    block(b);
  block(bottleneck_);
  for (const auto &u : up_)
    for (const auto &l : u.convs)
      hash_signs(h, l.pre);
  hash_signs(h, head_.pre);
  return h;
}

template <typename T> void BasicGenerator<T>::zero_grad() {
  for (auto *p : parameters())
    p->zero_grad();
}

template <typename T> std::array<Conv<T> *, 3> BasicGenerator<T>::residual_convs(std::size_t k) {
  auto &b = down_.at(k - 1);
  return {&b.body[0].conv, &b.body[1].conv, &b.body[2].conv};
}

template class BasicGenerator<float>;
template class BasicGenerator<double>;

} // namespace cxgan::models
