// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "chronosteer/numerics/tensor.hpp"

namespace chronosteer::num {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First and second moments for an ordered parameter list.
class AdamState {
 public:
  AdamState(std::span<Tensor* const> params, AdamConfig config);

  const AdamConfig& config() const { return config_; }
  std::uint64_t step_count() const { return steps_; }
  std::span<const double> first_moment(std::size_t param) const { return m_.at(param); }
  std::span<const double> second_moment(std::size_t param) const { return v_.at(param); }

 private:
  friend void adam_step(std::span<Tensor* const> params, AdamState& state);

  AdamConfig config_;
  std::vector<Shape> shapes_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::uint64_t steps_ = 0;
};

// One bias-corrected Adam update using each parameter's accumulated grad.
// Parameters that do not require grad (frozen) are rejected with UsageError;
// a list that disagrees with the state's shapes raises DimensionError.
void adam_step(std::span<Tensor* const> params, AdamState& state);

}  // namespace chronosteer::num
