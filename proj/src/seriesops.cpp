// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#include "chronosteer/seriesops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "chronosteer/errors.hpp"

namespace chronosteer::series {

Normalized normalize(std::span<const double> values) {
  if (values.empty()) throw UsageError("normalize: empty series");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  NormRecord record{*lo, *hi};
  return {normalize_with(values, record), record};
}

Series normalize_with(std::span<const double> values, const NormRecord& record) {
  const double scale = record.scale();
  Series out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    out[i] = ((values[i] - record.min) / scale - 0.5) * 2.0;
  return out;
}

Series denormalize(std::span<const double> values, const NormRecord& record) {
  Series out(values.size());
  if (!(record.max > record.min)) {
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] / 2.0 + 0.5) + record.min;
    return out;
  }
  // Interpolating between the ends maps -1 and 1 back to min and max exactly.
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double u = values[i] / 2.0 + 0.5;
    out[i] = (1.0 - u) * record.min + u * record.max;
  }
  return out;
}

Slice normalize_slice(const Slice& raw) {
  if (!raw.raw) return raw;
  Normalized h = normalize(raw.history);
  Slice out;
  out.history = std::move(h.values);
  out.future = normalize_with(raw.future, h.record);
  out.raw = false;
  out.norm = h.record;
  return out;
}

Slice denormalize_slice(const Slice& normalized) {
  if (normalized.raw) return normalized;
  if (!normalized.norm) throw UsageError("denormalize_slice: normalized slice lacks a record");
  Slice out;
  out.history = denormalize(normalized.history, *normalized.norm);
  out.future = denormalize(normalized.future, *normalized.norm);
  return out;
}

const std::array<TransformKind, kTransformCount>& all_transforms() {
  static const std::array<TransformKind, kTransformCount> kinds = {
      TransformKind::kKeepUnchanged,     TransformKind::kIncreaseTrend,
      TransformKind::kReduceTrend,       TransformKind::kExpandAmplitude,
      TransformKind::kCompressAmplitude, TransformKind::kElevatePeaks,
      TransformKind::kLowerPeaks,        TransformKind::kRaiseTroughs,
      TransformKind::kDeepenTroughs,
  };
  return kinds;
}

TransformKind transform_from_index(std::size_t index) {
  if (index >= kTransformCount)
    throw UsageError("transform index " + std::to_string(index) + " out of range");
  return static_cast<TransformKind>(index);
}

FactorRange factor_range(TransformKind kind) {
  switch (kind) {
    case TransformKind::kKeepUnchanged:
      return {0.0, 0.0};
    case TransformKind::kIncreaseTrend:
    case TransformKind::kReduceTrend:
    case TransformKind::kExpandAmplitude:
    case TransformKind::kCompressAmplitude:
      return {0.2, 0.8};
    case TransformKind::kElevatePeaks:
    case TransformKind::kLowerPeaks:
    case TransformKind::kRaiseTroughs:
    case TransformKind::kDeepenTroughs:
      return {0.1, 0.4};
  }
  throw UsageError("unknown transform kind");
}

std::string_view anchor_text(TransformKind kind) {
  switch (kind) {
    case TransformKind::kKeepUnchanged:
      return "Keep Unchanged";
    case TransformKind::kIncreaseTrend:
      return "Increase Trend";
    case TransformKind::kReduceTrend:
      return "Reduce Trend";
    case TransformKind::kExpandAmplitude:
      return "Expand Amplitude";
    case TransformKind::kCompressAmplitude:
      return "Compress Amplitude";
    case TransformKind::kElevatePeaks:
      return "Elevate Peaks";
    case TransformKind::kLowerPeaks:
      return "Lower Peaks";
    case TransformKind::kRaiseTroughs:
      return "Raise Troughs";
    case TransformKind::kDeepenTroughs:
      return "Deepen Troughs";
  }
  throw UsageError("unknown transform kind");
}

Series tanh_curve(std::size_t length, double factor, double n) {
  if (length < 1) throw UsageError("tanh_curve: length must be >= 1");
  Series out(length);
  // Same spacing rule as numpy.linspace: start + i * step, endpoint pinned.
  if (length == 1) {
    out[0] = std::tanh(0.0) * factor;
    return out;
  }
  const double step = n / static_cast<double>(length - 1);
  for (std::size_t i = 0; i < length; ++i) {
    const double x = (i + 1 == length) ? n : static_cast<double>(i) * step;
    out[i] = std::tanh(x) * factor;
  }
  return out;
}

Series transform_normalized(TransformKind kind, std::span<const double> s, double a) {
  Series out(s.begin(), s.end());
  const bool curve_kind = kind == TransformKind::kIncreaseTrend ||
                          kind == TransformKind::kReduceTrend ||
                          kind == TransformKind::kExpandAmplitude ||
                          kind == TransformKind::kCompressAmplitude;
  const Series c = curve_kind ? tanh_curve(s.size(), a) : Series{};
  for (std::size_t i = 0; i < s.size(); ++i) {
    switch (kind) {
      case TransformKind::kKeepUnchanged:
        break;
      case TransformKind::kIncreaseTrend:
        out[i] = s[i] + c[i];
        break;
      case TransformKind::kReduceTrend:
        out[i] = s[i] - c[i];
        break;
      case TransformKind::kExpandAmplitude:
        out[i] = s[i] * (1.0 + c[i]);
        break;
      case TransformKind::kCompressAmplitude:
        out[i] = s[i] * (1.0 - c[i]);
        break;
      case TransformKind::kElevatePeaks:
        out[i] = (s[i] + 1.0) * (1.0 + a) - 1.0;
        break;
      case TransformKind::kLowerPeaks:
        out[i] = (s[i] + 1.0) * (1.0 - a) - 1.0;
        break;
      case TransformKind::kRaiseTroughs:
        out[i] = (s[i] - 1.0) * (1.0 - a) + 1.0;
        break;
      case TransformKind::kDeepenTroughs:
        out[i] = (s[i] - 1.0) * (1.0 + a) + 1.0;
        break;
    }
  }
  return out;
}

Series apply_transform(TransformKind kind, std::span<const double> values, double factor,
                       bool allow_any_factor) {
  if (values.empty()) throw UsageError("apply_transform: empty series");
  for (double v : values)
    if (!std::isfinite(v)) throw DomainError("apply_transform: non-finite input");
  if (kind == TransformKind::kKeepUnchanged) return Series(values.begin(), values.end());
  const FactorRange range = factor_range(kind);
  if (!allow_any_factor && (factor < range.min_factor || factor > range.max_factor))
    throw UsageError("apply_transform: factor " + std::to_string(factor) + " outside [" +
                     std::to_string(range.min_factor) + ", " + std::to_string(range.max_factor) +
                     "] for " + std::string(anchor_text(kind)));
  const Normalized n = normalize(values);
  return denormalize(transform_normalized(kind, n.values, factor), n.record);
}

std::vector<Slice> slide_windows(std::span<const double> values, const WindowSpec& spec) {
  if (spec.window != spec.history + spec.horizon)
    throw UsageError("slide_windows: window must equal history + horizon");
  if (spec.stride == 0 || spec.history == 0 || spec.horizon == 0)
    throw UsageError("slide_windows: stride, history and horizon must be positive");
  std::vector<Slice> out;
  for (std::size_t start = 0; start + spec.window <= values.size(); start += spec.stride) {
    Slice s;
    s.history.assign(values.begin() + start, values.begin() + start + spec.history);
    s.future.assign(values.begin() + start + spec.history, values.begin() + start + spec.window);
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

void check_pair(std::span<const double> a, std::span<const double> b, const char* name) {
  if (a.size() != b.size())
    throw UsageError(std::string(name) + ": length mismatch (" + std::to_string(a.size()) +
                     " vs " + std::to_string(b.size()) + ")");
  if (a.empty()) throw UsageError(std::string(name) + ": empty input");
}

}  // namespace

double mse(std::span<const double> a, std::span<const double> b) {
  check_pair(a, b, "mse");
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += (a[i] - b[i]) * (a[i] - b[i]);
  return total / static_cast<double>(a.size());
}

double mae(std::span<const double> a, std::span<const double> b) {
  check_pair(a, b, "mae");
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += std::abs(a[i] - b[i]);
  return total / static_cast<double>(a.size());
}

}  // namespace chronosteer::series
