// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#include "chronosteer/datagen.hpp"
#include "chronosteer/errors.hpp"
#include "chronosteer/random.hpp"

namespace chronosteer::datagen {

std::string_view stage_name(Stage s) { return s == Stage::kPT ? "PT" : "FT"; }

Stage parse_stage(std::string_view s) {
  if (s == "PT") return Stage::kPT;
  if (s == "FT") return Stage::kFT;
  throw FormatError("unknown stage '" + std::string(s) + "'");
}

namespace {

void require_normalized(const std::vector<series::Slice>& slices, const char* what) {
  for (const series::Slice& s : slices)
    if (s.raw) throw UsageError(std::string(what) + ": slices must be normalized");
}

}  // namespace

std::vector<Triplet> build_pt_dataset(const std::vector<series::Slice>& slices,
                                      const backbone::BackboneModel& backbone,
                                      std::uint64_t factor_seed) {
  if (!backbone.frozen) throw UsageError("build_pt_dataset: backbone must be frozen");
  require_normalized(slices, "build_pt_dataset");
  std::vector<series::Series> histories;
  histories.reserve(slices.size());
  for (const series::Slice& s : slices) histories.push_back(s.history);
  const std::vector<series::Series> base = backbone::predict(backbone, histories);

  std::vector<Triplet> out;
  out.reserve(slices.size() * series::kTransformCount);
  for (std::size_t i = 0; i < slices.size(); ++i) {
    if (base[i].size() != backbone.config.horizon)
      throw FormatError("build_pt_dataset: backbone returned " + std::to_string(base[i].size()) +
                        " values, expected " + std::to_string(backbone.config.horizon));
    for (series::TransformKind kind : series::all_transforms()) {
      const std::size_t a = series::index_of(kind);
      const series::FactorRange range = series::factor_range(kind);
      Rng rng = substream(factor_seed, i, a);
      const double factor = kind == series::TransformKind::kKeepUnchanged
                                ? 0.0
                                : uniform(rng, range.min_factor, range.max_factor);
      out.push_back({slices[i].history, a, series::apply_transform(kind, base[i], factor),
                     Stage::kPT, slices[i].norm});
    }
  }
  return out;
}

std::size_t pseudo_label(std::span<const series::Series> candidates,
                         std::span<const double> future) {
  if (candidates.empty()) throw UsageError("pseudo_label: no candidates");
  std::size_t best = 0;
  double best_mse = series::mse(candidates[0], future);
  for (std::size_t j = 1; j < candidates.size(); ++j) {
    const double m = series::mse(candidates[j], future);
    if (m < best_mse) {
      best_mse = m;
      best = j;
    }
  }
  return best;
}

std::vector<Triplet> build_ft_dataset(const std::vector<series::Slice>& slices,
                                      const steering::ModelBundle& bundle) {
  require_normalized(slices, "build_ft_dataset");
  std::vector<series::Series> histories;
  histories.reserve(slices.size());
  for (const series::Slice& s : slices) histories.push_back(s.history);
  const auto candidates = steering::steer_all_anchors(bundle, histories);
  std::vector<Triplet> out;
  out.reserve(slices.size());
  for (std::size_t i = 0; i < slices.size(); ++i)
    out.push_back({slices[i].history, pseudo_label(candidates[i], slices[i].future),
                   slices[i].future, Stage::kFT, slices[i].norm});
  return out;
}

}  // namespace chronosteer::datagen
