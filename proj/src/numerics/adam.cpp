// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#include "chronosteer/numerics/adam.hpp"

#include <cmath>

#include "chronosteer/errors.hpp"

namespace chronosteer::num {

AdamState::AdamState(std::span<Tensor* const> params, AdamConfig config) : config_(config) {
  if (!(config_.learning_rate > 0.0)) throw UsageError("Adam learning rate must be positive");
  for (const Tensor* p : params) {
    shapes_.push_back(p->shape());
    m_.emplace_back(p->size(), 0.0);
    v_.emplace_back(p->size(), 0.0);
  }
}

void adam_step(std::span<Tensor* const> params, AdamState& state) {
  if (params.size() != state.shapes_.size())
    throw DimensionError("adam_step: parameter count differs from optimizer state");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->shape() != state.shapes_[i])
      throw DimensionError("adam_step: parameter " + std::to_string(i) + " has shape " +
                           shape_string(params[i]->shape()) + ", state expects " +
                           shape_string(state.shapes_[i]));
    if (!params[i]->requires_grad())
      throw UsageError("adam_step: parameter " + std::to_string(i) + " is frozen");
  }
  const AdamConfig& c = state.config_;
  state.steps_ += 1;
  const double t = static_cast<double>(state.steps_);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    std::span<double> w = params[i]->data();
    std::span<const double> g = std::as_const(*params[i]).grad();
    std::vector<double>& m = state.m_[i];
    std::vector<double>& v = state.v_[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      w[j] -= c.learning_rate * mhat / (std::sqrt(vhat) + c.epsilon);
    }
  }
}

}  // namespace chronosteer::num
