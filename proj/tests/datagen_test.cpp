// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include "chronosteer/datagen.hpp"
#include "chronosteer/errors.hpp"
#include "chronosteer/random.hpp"

namespace chronosteer::datagen {
namespace {

backbone::BackboneConfig small_backbone() {
  backbone::BackboneConfig c;
  c.history = 16;
  c.horizon = 8;
  c.patch = 4;
  c.width = 8;
  c.heads = 2;
  c.ffn = 16;
  return c;
}

std::vector<series::Slice> random_slices(std::size_t n, std::size_t h, std::size_t p,
                                         std::uint64_t seed) {
  Rng rng = substream(seed, 0);
  std::vector<series::Slice> out;
  for (std::size_t i = 0; i < n; ++i) {
    series::Slice s;
    for (std::size_t t = 0; t < h; ++t) s.history.push_back(uniform(rng, -5.0, 5.0));
    for (std::size_t t = 0; t < p; ++t) s.future.push_back(uniform(rng, -5.0, 5.0));
    out.push_back(series::normalize_slice(s));
  }
  return out;
}

TEST(Sources, PureSinusoid) {
  SyntheticSourceConfig cfg;
  cfg.count = 2;
  cfg.length = 100;
  cfg.mixes = {SourceMix{.name = "sine",
                         .level = {1.5, 1.5},
                         .slope = {0.0, 0.0},
                         .periods = {24.0},
                         .amplitude = {2.0, 2.0},
                         .noise_sigma = 0.0,
                         .random_phase = false}};
  for (const SourceSeries& s : generate_source_series(cfg))
    for (std::size_t t = 0; t < s.values.size(); ++t)
      EXPECT_NEAR(s.values[t], 1.5 + 2.0 * std::sin(2.0 * std::numbers::pi * t / 24.0), 1e-12);
}

TEST(Sources, DeterministicAndShaped) {
  SyntheticSourceConfig cfg;
  cfg.count = 100;
  cfg.length = 640;
  const auto a = generate_source_series(cfg);
  const auto b = generate_source_series(cfg);
  ASSERT_EQ(a.size(), 100u);
  std::set<std::string> domains;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].values.size(), 640u);
    EXPECT_EQ(a[i].values, b[i].values);
    domains.insert(a[i].domain);
  }
  EXPECT_EQ(domains.size(), cfg.mixes.size());
  cfg.seed = 2;
  EXPECT_NE(generate_source_series(cfg)[0].values, a[0].values);
}

TEST(Sources, InvalidRangesAreRejected) {
  SyntheticSourceConfig cfg;
  cfg.mixes[0].amplitude = {2.0, 1.0};
  EXPECT_THROW(cfg.validate(), UsageError);
  cfg = {};
  cfg.count = 0;
  EXPECT_THROW(cfg.validate(), UsageError);
}

TEST(Kmeans, TwoPairsMatchBruteForce) {
  const std::vector<std::vector<double>> pts = {{0, 0}, {0, 1}, {10, 10}, {10, 11}};
  const ClusterModel m = kmeans(pts, 2, 50, 3);
  // Brute force over all 2-partitions.
  double best = std::numeric_limits<double>::infinity();
  unsigned best_mask = 0;
  for (unsigned mask = 1; mask < 15; ++mask) {
    double total = 0.0;
    for (unsigned side = 0; side < 2; ++side) {
      double cx = 0, cy = 0, cnt = 0;
      for (unsigned i = 0; i < 4; ++i)
        if (((mask >> i) & 1u) == side) cx += pts[i][0], cy += pts[i][1], ++cnt;
      cx /= cnt, cy /= cnt;
      for (unsigned i = 0; i < 4; ++i)
        if (((mask >> i) & 1u) == side)
          total += (pts[i][0] - cx) * (pts[i][0] - cx) + (pts[i][1] - cy) * (pts[i][1] - cy);
    }
    if (total < best) best = total, best_mask = mask;
  }
  EXPECT_EQ(best_mask & 1u, (best_mask >> 1) & 1u);
  EXPECT_NEAR(m.inertia.back(), best, 1e-12);
  std::set<std::pair<double, double>> centroids;
  for (std::size_t c = 0; c < 2; ++c) centroids.insert({m.centroids[2 * c], m.centroids[2 * c + 1]});
  EXPECT_EQ(centroids, (std::set<std::pair<double, double>>{{0, 0.5}, {10, 10.5}}));
}

TEST(Kmeans, EveryPointItsOwnCentroid) {
  const std::vector<std::vector<double>> pts = {{1, 2}, {3, 4}, {-1, 0}, {7, 7}, {0, 9}};
  const ClusterModel m = kmeans(pts, 5, 10, 1);
  EXPECT_EQ(m.inertia.back(), 0.0);
  std::set<std::size_t> used(m.assignment.begin(), m.assignment.end());
  EXPECT_EQ(used.size(), 5u);
}

TEST(Kmeans, InertiaNeverIncreases) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng = substream(seed, 5);
    std::vector<std::vector<double>> pts(300, std::vector<double>(6));
    for (auto& p : pts)
      for (double& v : p) v = uniform(rng, -1.0, 1.0);
    const ClusterModel m = kmeans(pts, 12, 100, seed);
    ASSERT_FALSE(m.inertia.empty());
    for (std::size_t t = 1; t < m.inertia.size(); ++t) EXPECT_LE(m.inertia[t], m.inertia[t - 1]);
    for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_EQ(m.assignment[i], nearest_centroid(m, pts[i]));
  }
}

TEST(Kmeans, KBeyondPointsIsUsageError) {
  EXPECT_THROW(kmeans({{1.0}}, 2, 5, 0), UsageError);
}

std::vector<TaggedSlice> two_families(std::size_t per_family) {
  Rng rng = substream(9, 0);
  std::vector<TaggedSlice> out;
  for (std::size_t i = 0; i < 2 * per_family; ++i) {
    const bool rising = i % 2 == 0;
    series::Slice s;
    for (std::size_t t = 0; t < 16; ++t) {
      const double base = rising ? static_cast<double>(t) : std::cos(2.0 * t);
      s.history.push_back(base + 0.01 * uniform(rng, -1.0, 1.0));
    }
    for (std::size_t t = 0; t < 8; ++t) s.future.push_back(rising ? 16.0 + t : std::cos(2.0 * (16 + t)));
    out.push_back({s, rising ? "rising" : "wave"});
  }
  return out;
}

TEST(ClusterSample, OneRepresentativePerSeparatedFamily) {
  const auto slices = two_families(20);
  const auto picked = cluster_sample(slices, 2, 4);
  ASSERT_EQ(picked.size(), 2u);
  EXPECT_NE(picked[0].domain, picked[1].domain);
}

TEST(ClusterSample, FullKIsAPermutationAndDeterministic) {
  const auto slices = two_families(5);
  const auto a = cluster_sample(slices, slices.size(), 8);
  ASSERT_EQ(a.size(), slices.size());
  std::multiset<std::vector<double>> in, out;
  for (const auto& s : slices) in.insert(s.slice.history);
  for (const auto& s : a) out.insert(s.slice.history);
  EXPECT_EQ(in, out);
  const auto b = cluster_sample(slices, slices.size(), 8);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].slice.history, b[i].slice.history);
  EXPECT_THROW(cluster_sample(slices, slices.size() + 1, 8), UsageError);
}

TEST(PtDataset, NineTripletsPerSliceWithIdentityAnchor) {
  backbone::BackboneModel bb = backbone::BackboneModel::initialize(small_backbone());
  const auto slices = random_slices(100, 16, 8, 1);
  EXPECT_THROW(build_pt_dataset(slices, bb, 3), UsageError);  // not frozen
  backbone::freeze(bb);
  const auto pt = build_pt_dataset(slices, bb, 3);
  ASSERT_EQ(pt.size(), 900u);
  std::vector<std::size_t> freq(9, 0);
  std::vector<series::Series> hist;
  for (const auto& s : slices) hist.push_back(s.history);
  const auto base = backbone::predict(bb, hist);
  for (std::size_t i = 0; i < pt.size(); ++i) {
    const Triplet& t = pt[i];
    EXPECT_EQ(t.anchor_id, i % 9);
    EXPECT_EQ(t.stage, Stage::kPT);
    ++freq[t.anchor_id];
    if (t.anchor_id == 0) {
      EXPECT_EQ(t.target, base[i / 9]);
    }
  }
  for (std::size_t f : freq) EXPECT_EQ(f, 100u);
  const auto again = build_pt_dataset(slices, bb, 3);
  for (std::size_t i = 0; i < pt.size(); ++i) EXPECT_EQ(pt[i].target, again[i].target);
}

TEST(PtDataset, RawSlicesAreRejected) {
  backbone::BackboneModel bb = backbone::BackboneModel::initialize(small_backbone());
  backbone::freeze(bb);
  std::vector<series::Slice> raw = {series::Slice{series::Series(16, 1.0), series::Series(8, 1.0), true, std::nullopt}};
  EXPECT_THROW(build_pt_dataset(raw, bb, 1), UsageError);
}

TEST(PseudoLabel, ExactMatchAndBruteForce) {
  Rng rng = substream(4, 4);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<series::Series> cands(9, series::Series(8));
    for (auto& c : cands)
      for (double& v : c) v = uniform(rng, -1.0, 1.0);
    series::Series future(8);
    for (double& v : future) v = uniform(rng, -1.0, 1.0);
    std::size_t brute = 0;
    for (std::size_t j = 1; j < 9; ++j)
      if (series::mse(cands[j], future) < series::mse(cands[brute], future)) brute = j;
    EXPECT_EQ(pseudo_label(cands, future), brute);
    EXPECT_EQ(pseudo_label(cands, cands[2]), 2u);
  }
  std::vector<series::Series> ties(9, series::Series(8, 0.0));
  EXPECT_EQ(pseudo_label(ties, series::Series(8, 1.0)), 0u);
}

TEST(FtDataset, OneTripletPerSliceWithArgminLabel) {
  backbone::BackboneModel bb = backbone::BackboneModel::initialize(small_backbone());
  backbone::freeze(bb);
  steering::ModelBundle bundle =
      steering::ModelBundle::assemble(std::move(bb), steering::TextEmbedder::trigram(16), {});
  const auto slices = random_slices(100, 16, 8, 2);
  const auto ft = build_ft_dataset(slices, bundle);
  ASSERT_EQ(ft.size(), 100u);
  std::vector<series::Series> hist;
  for (const auto& s : slices) hist.push_back(s.history);
  const auto cands = steering::steer_all_anchors(bundle, hist);
  for (std::size_t i = 0; i < ft.size(); ++i) {
    EXPECT_EQ(ft[i].stage, Stage::kFT);
    EXPECT_EQ(ft[i].target, slices[i].future);
    EXPECT_EQ(ft[i].anchor_id, pseudo_label(cands[i], slices[i].future));
  }
}

TEST(Stage, NamesRoundTrip) {
  EXPECT_EQ(parse_stage(stage_name(Stage::kPT)), Stage::kPT);
  EXPECT_EQ(parse_stage(stage_name(Stage::kFT)), Stage::kFT);
  EXPECT_THROW(parse_stage("XX"), FormatError);
}

}  // namespace
}  // namespace chronosteer::datagen
