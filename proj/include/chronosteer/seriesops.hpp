// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace chronosteer::series {

using Series = std::vector<double>;

// Min-max record of one slice. Normalized values live in [-1, 1].
struct NormRecord {
  double min = 0.0;
  double max = 0.0;

  // Zero-range series use a unit scale, so a constant maps to -1.
  double scale() const { return max > min ? max - min : 1.0; }
};

// One window: history (length H) followed by future (length P).
struct Slice {
  Series history;
  Series future;
  bool raw = true;
  std::optional<NormRecord> norm;
};

struct Normalized {
  Series values;
  NormRecord record;
};

// v -> ((v - min) / scale - 0.5) * 2. UsageError on empty input.
Normalized normalize(std::span<const double> values);
Series normalize_with(std::span<const double> values, const NormRecord& record);
Series denormalize(std::span<const double> values, const NormRecord& record);

// Slice in the frame of its own history; future values may leave [-1, 1].
Slice normalize_slice(const Slice& raw);
// Source-frame copy of a normalized slice.
Slice denormalize_slice(const Slice& normalized);

enum class TransformKind : std::size_t {
  kKeepUnchanged = 0,
  kIncreaseTrend,
  kReduceTrend,
  kExpandAmplitude,
  kCompressAmplitude,
  kElevatePeaks,
  kLowerPeaks,
  kRaiseTroughs,
  kDeepenTroughs,
};

inline constexpr std::size_t kTransformCount = 9;

struct FactorRange {
  double min_factor;
  double max_factor;
  double midpoint() const { return 0.5 * (min_factor + max_factor); }
};

const std::array<TransformKind, kTransformCount>& all_transforms();
TransformKind transform_from_index(std::size_t index);
inline std::size_t index_of(TransformKind kind) { return static_cast<std::size_t>(kind); }
// Default sampling range of the factor; KeepUnchanged reports [0, 0].
FactorRange factor_range(TransformKind kind);
// Canonical instruction text, e.g. "Elevate Peaks".
std::string_view anchor_text(TransformKind kind);

// tanh of `length` evenly spaced points on [0, n], times factor.
Series tanh_curve(std::size_t length, double factor, double n = 8.0);

// Normalizes `values` by their own min-max, applies the kind's formula with
// the given factor, and maps back to the input frame. KeepUnchanged returns
// the input unchanged. factor must lie inside factor_range(kind) unless
// `allow_any_factor` is set. DomainError on non-finite input.
Series apply_transform(TransformKind kind, std::span<const double> values, double factor,
                       bool allow_any_factor = false);

// The formula alone, in the normalized frame.
Series transform_normalized(TransformKind kind, std::span<const double> normalized, double factor);

struct WindowSpec {
  std::size_t window = 160;
  std::size_t stride = 32;
  std::size_t history = 128;
  std::size_t horizon = 32;
};

// Left-aligned windows at 0, stride, 2*stride, ... that fit entirely; each is
// split into history and future. Series shorter than a window yield nothing.
std::vector<Slice> slide_windows(std::span<const double> values, const WindowSpec& spec = {});

double mse(std::span<const double> a, std::span<const double> b);
double mae(std::span<const double> a, std::span<const double> b);

}  // namespace chronosteer::series
