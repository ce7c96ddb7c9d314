// SPDX-License-Identifier: Apache-2.0
/**
 * @file   adam.hpp
 * @brief  Adam with bias-corrected moments.
 */
#pragma once

#include "cxgan/error.hpp"
#include "cxgan/nn/parameter.hpp"

#include <cmath>
#include <vector>

namespace cxgan::train {

struct AdamOptions {
  double learning_rate = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
      throw Error("adam: learning rate must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
      throw Error("adam: betas must lie in [0, 1)");
    if (!(epsilon > 0.0))
      throw Error("adam: epsilon must be positive");
  }
};

/// Moments are allocated on the first step to match the parameters.
template <typename T> struct AdamState {
  AdamOptions options;
  std::size_t step = 0;
  std::vector<nn::BasicTensor<T>> m;
  std::vector<nn::BasicTensor<T>> v;
};

/// One update of every parameter from its accumulated gradient. All
/// gradients are checked before any parameter is touched.
template <typename T>
void adam_step(const nn::ParameterList<T> &params, AdamState<T> &state) {
  state.options.validate();
  if (state.m.empty() && state.step == 0) {
    for (const auto *p : params) {
      state.m.emplace_back(p->value.shape());
      state.v.emplace_back(p->value.shape());
    }
  }
  if (state.m.size() != params.size() || state.v.size() != params.size())
    throw ShapeError("adam: state holds " + std::to_string(state.m.size()) +
                     " moments for " + std::to_string(params.size()) + " parameters");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto *p = params[i];
    if (p->grad.shape() != p->value.shape() || state.m[i].shape() != p->value.shape() ||
        state.v[i].shape() != p->value.shape())
      throw ShapeError("adam: shape mismatch for " + p->name);
    if (!p->grad.all_finite())
      throw Error("adam: non-finite gradient in " + p->name);
  }

  ++state.step;
  const auto &o = state.options;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(o.beta1, t);
  const double c2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto &value = params[i]->value;
    const auto &grad = params[i]->grad;
    auto &m = state.m[i];
    auto &v = state.v[i];
    for (std::size_t k = 0; k < value.size(); ++k) {
      const double g = grad[k];
      const double mk = o.beta1 * m[k] + (1.0 - o.beta1) * g;
      const double vk = o.beta2 * v[k] + (1.0 - o.beta2) * g * g;
      m[k] = static_cast<T>(mk);
      v[k] = static_cast<T>(vk);
      value[k] = static_cast<T>(value[k] - o.learning_rate * (mk / c1) /
                                               (std::sqrt(vk / c2) + o.epsilon));
    }
  }
}

} // namespace cxgan::train
