// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "chronosteer/seriesops.hpp"

// Independent reference checks shared by the unit tests and the acceptance
// runner.
namespace chronosteer::checks {

// ---- finite differences ---------------------------------------------------------

inline constexpr double kFiniteDifferenceStep = 1e-5;
inline constexpr double kGradientTolerance = 1e-4;

struct GradientResult {
  std::string name;
  // max over inputs of |analytic - numeric| / max(1, |analytic|, |numeric|)
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

// Every differentiable operation, the composite losses, and a steered
// forward pass through a small frozen backbone, on inputs drawn from `seed`.
std::vector<GradientResult> gradient_suite(std::uint64_t seed);

// ---- reference transforms --------------------------------------------------------

// MinMaxScaler-style fit: scale_ = 1 / range (1 for a zero range),
// min_ = -data_min * scale_.
struct ReferenceScaler {
  double scale = 1.0;
  double offset = 0.0;
};

ReferenceScaler reference_fit(std::span<const double> values);
// ((x * scale + offset) - 0.5) * 2
std::vector<double> reference_normalize(std::span<const double> values, const ReferenceScaler& s);
// ((x / 2 + 0.5) - offset) / scale
std::vector<double> reference_denormalize(std::span<const double> values,
                                          const ReferenceScaler& s);
// tanh(linspace(0, n, length)) * factor
std::vector<double> reference_tanh_curve(std::size_t length, double factor, double n = 8.0);
// The nine transformation functions written out one by one.
std::vector<double> reference_transform(std::size_t kind, std::span<const double> values,
                                        double factor);

}  // namespace chronosteer::checks
