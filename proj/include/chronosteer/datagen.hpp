// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "chronosteer/backbone.hpp"
#include "chronosteer/seriesops.hpp"
#include "chronosteer/steering.hpp"

namespace chronosteer::datagen {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

// One family of synthetic series: level + slope * t + sum of sines + noise,
// with optional step events that shift the level or rescale the seasonal
// part from a random time onward.
struct SourceMix {
  std::string name;
  Range level{-1.0, 1.0};
  Range slope{-0.005, 0.005};
  std::vector<double> periods{24.0};
  Range amplitude{0.5, 2.0};
  double noise_sigma = 0.1;
  double event_rate = 0.0;
  Range level_shift{-1.5, 1.5};
  Range amplitude_shift{0.5, 1.8};
  bool random_phase = true;
};

struct SyntheticSourceConfig {
  std::size_t count = 200;
  std::size_t length = 640;
  std::vector<SourceMix> mixes = default_mixes();
  std::uint64_t seed = 1;

  static std::vector<SourceMix> default_mixes();
  void validate() const;
};

struct SourceSeries {
  std::string domain;
  series::Series values;
};

// Series i uses mix i % mixes.size() and its own seeded substream.
std::vector<SourceSeries> generate_source_series(const SyntheticSourceConfig& cfg);

// Every window of every source, tagged with its source's domain.
struct TaggedSlice {
  series::Slice slice;
  std::string domain;
};
std::vector<TaggedSlice> window_sources(const std::vector<SourceSeries>& sources,
                                        const series::WindowSpec& spec = {});

struct ClusterModel {
  std::size_t k = 0;
  std::size_t dim = 0;
  std::vector<double> centroids;  // k x dim
  std::vector<std::size_t> assignment;
  // Inertia after each assignment pass.
  std::vector<double> inertia;
  std::size_t iterations = 0;
};

// k-means++ seeding, then Lloyd passes until the assignment stops changing
// or max_iter passes ran. Ties go to the lower centroid index; a cluster
// left empty is re-seeded at the point farthest from its centroid.
ClusterModel kmeans(const std::vector<std::vector<double>>& points, std::size_t k,
                    std::size_t max_iter, std::uint64_t seed);
std::size_t nearest_centroid(const ClusterModel& model, std::span<const double> point);

// One uniformly chosen member per non-empty cluster, in cluster order.
// Features are the normalized history followed by the normalized future.
std::vector<TaggedSlice> cluster_sample(const std::vector<TaggedSlice>& slices, std::size_t k,
                                        std::uint64_t seed, std::size_t max_iter = 25);

enum class Stage { kPT, kFT };
std::string_view stage_name(Stage s);
Stage parse_stage(std::string_view s);

struct Triplet {
  series::Series history;
  std::size_t anchor_id = 0;
  series::Series target;
  Stage stage = Stage::kPT;
  std::optional<series::NormRecord> norm;
};

// Nine triplets per normalized slice, slice-major in anchor order. The
// factor for (slice i, anchor a) comes from substream(factor_seed, i, a).
std::vector<Triplet> build_pt_dataset(const std::vector<series::Slice>& slices,
                                      const backbone::BackboneModel& backbone,
                                      std::uint64_t factor_seed);

// One triplet per slice labelled with the anchor whose steered output has
// the lowest MSE against the real future (lowest index on ties).
std::vector<Triplet> build_ft_dataset(const std::vector<series::Slice>& slices,
                                      const steering::ModelBundle& bundle);

std::size_t pseudo_label(std::span<const series::Series> candidates,
                         std::span<const double> future);

}  // namespace chronosteer::datagen
