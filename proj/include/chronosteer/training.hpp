// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "chronosteer/datagen.hpp"
#include "chronosteer/numerics/tape.hpp"
#include "chronosteer/steering.hpp"

namespace chronosteer::training {

// Symmetric cross-entropy over row cosine similarities of two N x P sets.
// DomainError on a zero row.
num::Var contrastive_loss(num::Tape& tape, num::Var pred, num::Var target);
// mean MSE over the rows + alpha * contrastive_loss.
num::Var composite_loss(num::Tape& tape, num::Var pred, num::Var target, double alpha);
// Same over `groups` stacked sets of `set_size` rows each: MSE over all rows
// plus alpha times the mean per-set contrastive term. alpha == 0 skips the
// contrastive graph.
num::Var grouped_composite_loss(num::Tape& tape, num::Var pred, num::Var target,
                                std::size_t set_size, double alpha);

double contrastive_value(const num::Tensor& pred, const num::Tensor& target);
double composite_value(const num::Tensor& pred, const num::Tensor& target, double alpha);

// Frame in which stage-1 losses compare predictions with targets.
enum class LossFrame { kNormalized, kRaw };

struct TrainConfig {
  double learning_rate = 1e-3;
  double alpha = 1e-3;
  std::size_t batch_pt = 32;
  std::size_t batch_ft = 256;
  std::size_t max_epochs = 100;
  std::size_t patience = 10;
  double split = 0.8;
  std::uint64_t seed = 3;
  bool contrastive_off = false;
  bool linear_mapper = false;
  LossFrame frame = LossFrame::kNormalized;

  void validate() const;
  double effective_alpha() const { return contrastive_off ? 0.0 : alpha; }
};

struct TrainReport {
  std::string stage;
  std::vector<double> train_loss;
  std::vector<double> validation_loss;
  // Validation loss of the mapper handed in, before any update.
  double initial_validation = 0.0;
  std::size_t best_epoch = 0;
  double best_validation = 0.0;
  std::string stop_reason;
  std::string mapper_checksum;
  std::string backbone_checksum_before;
  std::string backbone_checksum_after;
  std::size_t train_count = 0;
  std::size_t validation_count = 0;
  double seconds = 0.0;
};

// The 80/20 split both stages use, over `count` units (slices for stage 1,
// triplets for stage 2): shuffled with the seed, train part first.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};
Split split_indices(std::size_t count, double train_fraction, std::uint64_t seed);

// PT triplets regrouped per slice: one history with targets for anchors
// 0..N-1. FormatError when the triplets are not in slice-major anchor order.
struct AnchorSet {
  series::Series history;
  std::vector<series::Series> targets;
  std::optional<series::NormRecord> norm;
};
std::vector<AnchorSet> group_pt(const std::vector<datagen::Triplet>& pt);

TrainReport train_stage1(steering::ModelBundle& bundle, const std::vector<datagen::Triplet>& pt,
                         const TrainConfig& cfg);
TrainReport train_stage2(steering::ModelBundle& bundle, const std::vector<datagen::Triplet>& ft,
                         const TrainConfig& cfg);

// Validation losses for a given mapper state, matching the training
// objectives.
double stage1_loss(const steering::ModelBundle& bundle, const std::vector<AnchorSet>& sets,
                   std::span<const std::size_t> pick, const TrainConfig& cfg);
double stage2_loss(const steering::ModelBundle& bundle, const std::vector<datagen::Triplet>& ft,
                   std::span<const std::size_t> pick, const TrainConfig& cfg);

// Fraction of slices per anchor i for which the steered output under i is
// closer to target i than to every other target.
struct Discrimination {
  std::vector<double> per_anchor;
  double overall = 0.0;
  double worst = 0.0;
};
Discrimination discrimination(const steering::ModelBundle& bundle,
                              const std::vector<AnchorSet>& sets,
                              std::span<const std::size_t> pick);

}  // namespace chronosteer::training
