// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "checks.hpp"
#include "chronosteer/errors.hpp"
#include "chronosteer/random.hpp"
#include "chronosteer/seriesops.hpp"

namespace chronosteer::series {
namespace {

Series random_series(Rng& rng, std::size_t n) {
  Series s(n);
  const double level = uniform(rng, -50.0, 50.0);
  const double spread = uniform(rng, 0.01, 20.0);
  for (double& v : s) v = level + spread * uniform(rng, -1.0, 1.0);
  return s;
}

TEST(Normalize, HandExamples) {
  const Normalized n = normalize(std::vector<double>{1, 2, 3});
  EXPECT_EQ(n.values, (Series{-1, 0, 1}));
  EXPECT_EQ(n.record.min, 1.0);
  EXPECT_EQ(n.record.max, 3.0);
  EXPECT_EQ(normalize(std::vector<double>{5, 5, 5}).values, (Series{-1, -1, -1}));
  EXPECT_THROW(normalize(std::vector<double>{}), UsageError);
}

TEST(Normalize, RoundTripAndRange) {
  Rng rng = substream(10, 0);
  for (int rep = 0; rep < 200; ++rep) {
    const Series x = random_series(rng, 40);
    const Normalized n = normalize(x);
    double lo = 1e300, hi = -1e300;
    for (double v : n.values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    EXPECT_EQ(lo, -1.0);
    EXPECT_EQ(hi, 1.0);
    const Series back = denormalize(n.values, n.record);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(back[i], x[i], 1e-9);
  }
}

TEST(Normalize, SliceFramesFollowHistory) {
  Slice raw{{0.0, 2.0, 4.0}, {6.0, -2.0}, true, std::nullopt};
  const Slice n = normalize_slice(raw);
  EXPECT_FALSE(n.raw);
  ASSERT_TRUE(n.norm.has_value());
  EXPECT_EQ(n.future, (Series{2.0, -2.0}));
  const Slice back = denormalize_slice(n);
  EXPECT_EQ(back.history, raw.history);
  EXPECT_EQ(back.future, raw.future);
}

TEST(TanhCurve, Examples) {
  const Series c = tanh_curve(3, 1.0);
  EXPECT_EQ(c[0], 0.0);
  EXPECT_NEAR(c[1], 0.999329, 1e-6);
  EXPECT_NEAR(c[2], 0.99999977, 1e-8);
  for (double v : tanh_curve(10, 0.0)) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(tanh_curve(0, 1.0), UsageError);
}

TEST(Transforms, NineKindsInFixedOrderWithRanges) {
  ASSERT_EQ(all_transforms().size(), 9u);
  const char* names[] = {"Keep Unchanged",     "Increase Trend", "Reduce Trend",
                         "Expand Amplitude",   "Compress Amplitude", "Elevate Peaks",
                         "Lower Peaks",        "Raise Troughs",  "Deepen Troughs"};
  for (std::size_t i = 0; i < 9; ++i) {
    EXPECT_EQ(index_of(all_transforms()[i]), i);
    EXPECT_EQ(anchor_text(all_transforms()[i]), names[i]);
  }
  for (std::size_t i = 1; i <= 4; ++i) {
    EXPECT_EQ(factor_range(transform_from_index(i)).min_factor, 0.2);
    EXPECT_EQ(factor_range(transform_from_index(i)).max_factor, 0.8);
  }
  for (std::size_t i = 5; i <= 8; ++i) {
    EXPECT_EQ(factor_range(transform_from_index(i)).min_factor, 0.1);
    EXPECT_EQ(factor_range(transform_from_index(i)).max_factor, 0.4);
  }
  EXPECT_THROW(transform_from_index(9), UsageError);
}

TEST(Transforms, KeepUnchangedIsExactIdentity) {
  const Series x = {0.1, -3.0, 7.25};
  EXPECT_EQ(apply_transform(TransformKind::kKeepUnchanged, x, 0.0), x);
}

TEST(Transforms, IncreaseTrendHandExample) {
  const Series n = transform_normalized(TransformKind::kIncreaseTrend, Series{-1, 0, 1}, 0.5);
  EXPECT_EQ(n[0], -1.0);
  EXPECT_NEAR(n[1], 0.4997, 1e-4);
  EXPECT_NEAR(n[2], 1.5, 1e-6);
}

TEST(Transforms, FactorOutsideRangeIsRejected) {
  const Series x = {1, 2, 3};
  EXPECT_THROW(apply_transform(TransformKind::kElevatePeaks, x, 0.5), UsageError);
  EXPECT_NO_THROW(apply_transform(TransformKind::kElevatePeaks, x, 0.5, true));
}

TEST(Transforms, NonFiniteInputIsDomainError) {
  const Series x = {1, NAN, 3};
  EXPECT_THROW(apply_transform(TransformKind::kIncreaseTrend, x, 0.5), DomainError);
}

TEST(Transforms, MatchReferenceTranscription) {
  Rng rng = substream(11, 0);
  for (int rep = 0; rep < 300; ++rep) {
    const Series x = random_series(rng, 32);
    for (TransformKind kind : all_transforms()) {
      const FactorRange r = factor_range(kind);
      const double f = kind == TransformKind::kKeepUnchanged ? 0.0 : uniform(rng, r.min_factor, r.max_factor);
      const Series ours = apply_transform(kind, x, f);
      const std::vector<double> ref = checks::reference_transform(index_of(kind), x, f);
      ASSERT_EQ(ours.size(), x.size());
      for (std::size_t i = 0; i < x.size(); ++i)
        ASSERT_NEAR(ours[i], ref[i], 1e-9) << anchor_text(kind);
    }
  }
}

TEST(Transforms, ExtremesAreFixedPointsExactly) {
  Rng rng = substream(12, 0);
  for (int rep = 0; rep < 300; ++rep) {
    const Series x = random_series(rng, 32);
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    const std::size_t imin = lo - x.begin(), imax = hi - x.begin();
    for (TransformKind k : {TransformKind::kElevatePeaks, TransformKind::kLowerPeaks})
      EXPECT_EQ(apply_transform(k, x, uniform(rng, 0.1, 0.4))[imin], x[imin]);
    for (TransformKind k : {TransformKind::kRaiseTroughs, TransformKind::kDeepenTroughs})
      EXPECT_EQ(apply_transform(k, x, uniform(rng, 0.1, 0.4))[imax], x[imax]);
  }
}

TEST(Transforms, ZeroFactorIsIdentityInTheNormalizedFrame) {
  const Series s = {-1.0, -0.2, 0.6, 1.0};
  for (TransformKind kind : all_transforms()) {
    const Series out = transform_normalized(kind, s, 0.0);
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_DOUBLE_EQ(out[i], s[i]);
  }
}

TEST(Windows, Counts) {
  EXPECT_EQ(slide_windows(Series(160, 1.0)).size(), 1u);
  const auto two = slide_windows(Series(192, 1.0));
  EXPECT_EQ(two.size(), 2u);
  EXPECT_EQ(slide_windows(Series(159, 1.0)).size(), 0u);
  Series ramp(192);
  for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = static_cast<double>(i);
  const auto w = slide_windows(ramp);
  EXPECT_EQ(w[1].history.front(), 32.0);
  EXPECT_EQ(w[1].history.size(), 128u);
  EXPECT_EQ(w[1].future.front(), 160.0);
  EXPECT_EQ(w[1].future.size(), 32u);
  EXPECT_THROW(slide_windows(ramp, {.window = 100}), UsageError);
}

TEST(Metrics, Basics) {
  const Series a = {0, 2}, b = {1, 3};
  EXPECT_EQ(mse(a, a), 0.0);
  EXPECT_EQ(mse(a, b), 1.0);
  EXPECT_EQ(mae(a, b), 1.0);
  const Series ka = {0, 6}, kb = {3, 9};
  EXPECT_DOUBLE_EQ(mse(ka, kb), 9.0 * mse(a, b));
  EXPECT_THROW(mse(a, Series{1.0}), UsageError);
}

}  // namespace
}  // namespace chronosteer::series
