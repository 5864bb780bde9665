// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <chrono>
#include <limits>
#include <numeric>

#include <spdlog/spdlog.h>

#include "chronosteer/errors.hpp"
#include "chronosteer/numerics/adam.hpp"
#include "chronosteer/numerics/ops.hpp"
#include "chronosteer/random.hpp"
#include "chronosteer/training.hpp"

namespace chronosteer::training {

using num::Tape;
using num::Tensor;
using num::Var;
using steering::ModelBundle;

void TrainConfig::validate() const {
  if (!(split > 0.0 && split < 1.0)) throw UsageError("train config: split must lie in (0, 1)");
  if (!(learning_rate > 0.0)) throw UsageError("train config: lr must be positive");
  if (alpha < 0.0) throw UsageError("train config: alpha must be non-negative");
  if (max_epochs == 0 || patience == 0 || patience > max_epochs)
    throw UsageError("train config: need 0 < patience <= max_epochs");
  if (batch_pt == 0 || batch_ft == 0) throw UsageError("train config: batch sizes must be positive");
}

Split split_indices(std::size_t count, double train_fraction, std::uint64_t seed) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = substream(seed, 100);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t n_train = static_cast<std::size_t>(train_fraction * static_cast<double>(count));
  n_train = std::clamp<std::size_t>(n_train, count > 1 ? 1 : 0, count > 1 ? count - 1 : count);
  Split s;
  s.train.assign(order.begin(), order.begin() + n_train);
  s.validation.assign(order.begin() + n_train, order.end());
  return s;
}

std::vector<AnchorSet> group_pt(const std::vector<datagen::Triplet>& pt) {
  constexpr std::size_t kN = series::kTransformCount;
  if (pt.size() % kN != 0)
    throw FormatError("PT dataset size " + std::to_string(pt.size()) + " is not a multiple of " +
                      std::to_string(kN));
  std::vector<AnchorSet> sets;
  sets.reserve(pt.size() / kN);
  for (std::size_t g = 0; g < pt.size(); g += kN) {
    AnchorSet s{pt[g].history, {}, pt[g].norm};
    for (std::size_t a = 0; a < kN; ++a) {
      const datagen::Triplet& t = pt[g + a];
      if (t.stage != datagen::Stage::kPT || t.anchor_id != a || t.history != s.history)
        throw FormatError("PT dataset: record " + std::to_string(g + a) +
                          " breaks slice-major anchor order");
      s.targets.push_back(t.target);
    }
    sets.push_back(std::move(s));
  }
  return sets;
}

namespace {

struct Batch {
  Tensor histories;
  Tensor targets;
  // Per output row: scale/2 and offset mapping normalized values to raw.
  Tensor gain;
  Tensor offset;
};

void fill_frame(Batch& b, std::size_t row, const std::optional<series::NormRecord>& norm,
                std::size_t width) {
  if (!norm) throw UsageError("raw loss frame needs normalization records in the dataset");
  const double g = 0.5 * norm->scale();
  const double o = norm->min + g;
  for (std::size_t j = 0; j < width; ++j) {
    b.gain[row * width + j] = g;
    b.offset[row * width + j] = o;
  }
}

Batch stage1_batch(const std::vector<AnchorSet>& sets, std::span<const std::size_t> pick,
                   std::size_t h, std::size_t p, LossFrame frame) {
  constexpr std::size_t kN = series::kTransformCount;
  Batch b{Tensor({pick.size(), h}), Tensor({pick.size() * kN, p}), {}, {}};
  if (frame == LossFrame::kRaw) {
    b.gain = Tensor({pick.size() * kN, p});
    b.offset = Tensor({pick.size() * kN, p});
  }
  for (std::size_t i = 0; i < pick.size(); ++i) {
    const AnchorSet& s = sets[pick[i]];
    std::copy(s.history.begin(), s.history.end(), b.histories.data().begin() + i * h);
    for (std::size_t a = 0; a < kN; ++a) {
      if (s.targets[a].size() != p) throw FormatError("PT target has the wrong length");
      std::copy(s.targets[a].begin(), s.targets[a].end(),
                b.targets.data().begin() + (i * kN + a) * p);
      if (frame == LossFrame::kRaw) fill_frame(b, i * kN + a, s.norm, p);
    }
  }
  return b;
}

Batch stage2_batch(const std::vector<datagen::Triplet>& ft, std::span<const std::size_t> pick,
                   std::size_t h, std::size_t p, LossFrame frame, std::vector<std::size_t>& ids) {
  Batch b{Tensor({pick.size(), h}), Tensor({pick.size(), p}), {}, {}};
  if (frame == LossFrame::kRaw) {
    b.gain = Tensor({pick.size(), p});
    b.offset = Tensor({pick.size(), p});
  }
  ids.clear();
  for (std::size_t i = 0; i < pick.size(); ++i) {
    const datagen::Triplet& t = ft[pick[i]];
    if (t.history.size() != h || t.target.size() != p)
      throw FormatError("FT triplet has the wrong length");
    std::copy(t.history.begin(), t.history.end(), b.histories.data().begin() + i * h);
    std::copy(t.target.begin(), t.target.end(), b.targets.data().begin() + i * p);
    if (frame == LossFrame::kRaw) fill_frame(b, i, t.norm, p);
    ids.push_back(t.anchor_id);
  }
  return b;
}

// Maps a normalized-frame prediction/target pair into the loss frame.
std::pair<Var, Var> in_frame(Tape& tape, Var pred, const Batch& b, LossFrame frame) {
  Var target = tape.view(b.targets);
  if (frame == LossFrame::kNormalized) return {pred, target};
  auto to_raw = [&](Var v) {
    return num::add(tape, num::mul(tape, v, tape.view(b.gain)), tape.view(b.offset));
  };
  return {to_raw(pred), to_raw(target)};
}

Var stage1_graph(Tape& tape, const backbone::BoundBackbone& bb, const steering::BoundMapper& bm,
                 const Tensor& embeddings, const Batch& b, const TrainConfig& cfg) {
  const Var pred = steering::steered_graph(tape, bb, bm, tape.view(b.histories), tape.view(embeddings));
  const auto [p, t] = in_frame(tape, pred, b, cfg.frame);
  return grouped_composite_loss(tape, p, t, series::kTransformCount, cfg.effective_alpha());
}

Var stage2_graph(Tape& tape, const backbone::BoundBackbone& bb, const steering::BoundMapper& bm,
                 const Tensor& embeddings, const Batch& b, std::vector<std::size_t> ids,
                 const TrainConfig& cfg) {
  const Var pred = steering::steered_pairs(tape, bb, bm, tape.view(b.histories),
                                           tape.view(embeddings), std::move(ids));
  const auto [p, t] = in_frame(tape, pred, b, cfg.frame);
  return num::mse_loss(tape, p, t);
}

constexpr std::size_t kEvalChunk = 64;

// Shared epoch loop with early stopping and best-epoch restore.
template <typename TrainEpoch, typename Validate>
TrainReport run(ModelBundle& bundle, const TrainConfig& cfg, std::string stage,
                std::size_t train_count, std::size_t validation_count, TrainEpoch&& train_epoch,
                Validate&& validate) {
  if (!bundle.backbone.frozen) throw UsageError(stage + ": backbone must be frozen");
  const auto t0 = std::chrono::steady_clock::now();
  TrainReport r;
  r.stage = std::move(stage);
  r.train_count = train_count;
  r.validation_count = validation_count;
  r.backbone_checksum_before = bundle.backbone.checksum();

  std::vector<Tensor*> params = bundle.mapper.parameters();
  num::AdamState adam(params, {.learning_rate = cfg.learning_rate});
  r.initial_validation = validate();
  double best = std::numeric_limits<double>::infinity();
  steering::AlignmentMapper best_mapper = bundle.mapper;
  std::size_t since = 0;
  r.stop_reason = "max_epochs";
  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    r.train_loss.push_back(train_epoch(epoch, params, adam));
    r.validation_loss.push_back(validate());
    spdlog::info("{} epoch {}: train {:.6f} val {:.6f}", r.stage, epoch, r.train_loss.back(),
                 r.validation_loss.back());
    if (r.validation_loss.back() < best) {
      best = r.validation_loss.back();
      r.best_epoch = epoch;
      best_mapper = bundle.mapper;
      since = 0;
    } else if (++since >= cfg.patience) {
      r.stop_reason = "patience";
      break;
    }
  }
  bundle.mapper = best_mapper;
  r.best_validation = best;
  r.mapper_checksum = bundle.mapper.checksum();
  r.backbone_checksum_after = bundle.backbone.checksum();
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace

double stage1_loss(const ModelBundle& bundle, const std::vector<AnchorSet>& sets,
                   std::span<const std::size_t> pick, const TrainConfig& cfg) {
  if (pick.empty()) throw UsageError("stage1_loss: empty selection");
  const auto& c = bundle.backbone.config;
  const Tensor embeddings = bundle.codebook.matrix();
  double total = 0.0;
  for (std::size_t begin = 0; begin < pick.size(); begin += kEvalChunk) {
    const auto part = pick.subspan(begin, std::min(kEvalChunk, pick.size() - begin));
    const Batch b = stage1_batch(sets, part, c.history, c.horizon, cfg.frame);
    Tape tape;
    const auto bb = backbone::bind(tape, bundle.backbone);
    const auto bm = steering::bind(tape, bundle.mapper);
    total += tape.value(stage1_graph(tape, bb, bm, embeddings, b, cfg)).item() *
             static_cast<double>(part.size());
  }
  return total / static_cast<double>(pick.size());
}

double stage2_loss(const ModelBundle& bundle, const std::vector<datagen::Triplet>& ft,
                   std::span<const std::size_t> pick, const TrainConfig& cfg) {
  if (pick.empty()) throw UsageError("stage2_loss: empty selection");
  const auto& c = bundle.backbone.config;
  const Tensor embeddings = bundle.codebook.matrix();
  double total = 0.0;
  std::vector<std::size_t> ids;
  for (std::size_t begin = 0; begin < pick.size(); begin += 4 * kEvalChunk) {
    const auto part = pick.subspan(begin, std::min(4 * kEvalChunk, pick.size() - begin));
    const Batch b = stage2_batch(ft, part, c.history, c.horizon, cfg.frame, ids);
    Tape tape;
    const auto bb = backbone::bind(tape, bundle.backbone);
    const auto bm = steering::bind(tape, bundle.mapper);
    total += tape.value(stage2_graph(tape, bb, bm, embeddings, b, ids, cfg)).item() *
             static_cast<double>(part.size());
  }
  return total / static_cast<double>(pick.size());
}

TrainReport train_stage1(ModelBundle& bundle, const std::vector<datagen::Triplet>& pt,
                         const TrainConfig& cfg) {
  cfg.validate();
  if (pt.empty()) throw UsageError("train_stage1: empty dataset");
  const std::vector<AnchorSet> sets = group_pt(pt);
  const Split split = split_indices(sets.size(), cfg.split, cfg.seed);
  const auto& c = bundle.backbone.config;
  const Tensor embeddings = bundle.codebook.matrix();
  std::vector<std::size_t> order = split.train;

  auto train_epoch = [&](std::size_t epoch, std::vector<Tensor*>& params, num::AdamState& adam) {
    Rng rng = substream(cfg.seed, 101, epoch);
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_pt) {
      const std::span<const std::size_t> part(order.data() + begin,
                                              std::min(cfg.batch_pt, order.size() - begin));
      const Batch b = stage1_batch(sets, part, c.history, c.horizon, cfg.frame);
      for (Tensor* t : params) t->zero_grad();
      Tape tape;
      const auto bb = backbone::bind(tape, bundle.backbone);
      const auto bm = steering::bind_trainable(tape, bundle.mapper);
      const Var loss = stage1_graph(tape, bb, bm, embeddings, b, cfg);
      tape.backward(loss);
      num::adam_step(params, adam);
      total += tape.value(loss).item() * static_cast<double>(part.size());
    }
    return total / static_cast<double>(order.size());
  };
  auto validate = [&] { return stage1_loss(bundle, sets, split.validation, cfg); };
  return run(bundle, cfg, "stage1", split.train.size(), split.validation.size(), train_epoch,
             validate);
}

TrainReport train_stage2(ModelBundle& bundle, const std::vector<datagen::Triplet>& ft,
                         const TrainConfig& cfg) {
  cfg.validate();
  if (ft.empty()) throw UsageError("train_stage2: empty dataset");
  for (const datagen::Triplet& t : ft)
    if (t.stage != datagen::Stage::kFT) throw FormatError("train_stage2: expected FT triplets");
  const Split split = split_indices(ft.size(), cfg.split, cfg.seed);
  const auto& c = bundle.backbone.config;
  const Tensor embeddings = bundle.codebook.matrix();
  std::vector<std::size_t> order = split.train;

  auto train_epoch = [&](std::size_t epoch, std::vector<Tensor*>& params, num::AdamState& adam) {
    Rng rng = substream(cfg.seed, 102, epoch);
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    std::vector<std::size_t> ids;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_ft) {
      const std::span<const std::size_t> part(order.data() + begin,
                                              std::min(cfg.batch_ft, order.size() - begin));
      const Batch b = stage2_batch(ft, part, c.history, c.horizon, cfg.frame, ids);
      for (Tensor* t : params) t->zero_grad();
      Tape tape;
      const auto bb = backbone::bind(tape, bundle.backbone);
      const auto bm = steering::bind_trainable(tape, bundle.mapper);
      const Var loss = stage2_graph(tape, bb, bm, embeddings, b, ids, cfg);
      tape.backward(loss);
      num::adam_step(params, adam);
      total += tape.value(loss).item() * static_cast<double>(part.size());
    }
    return total / static_cast<double>(order.size());
  };
  auto validate = [&] { return stage2_loss(bundle, ft, split.validation, cfg); };
  return run(bundle, cfg, "stage2", split.train.size(), split.validation.size(), train_epoch,
             validate);
}

Discrimination discrimination(const ModelBundle& bundle, const std::vector<AnchorSet>& sets,
                              std::span<const std::size_t> pick) {
  constexpr std::size_t kN = series::kTransformCount;
  if (pick.empty()) throw UsageError("discrimination: empty selection");
  std::vector<series::Series> histories;
  for (std::size_t i : pick) histories.push_back(sets[i].history);
  const auto steered = steering::steer_all_anchors(bundle, histories);
  Discrimination d;
  d.per_anchor.assign(kN, 0.0);
  for (std::size_t s = 0; s < pick.size(); ++s) {
    const AnchorSet& set = sets[pick[s]];
    for (std::size_t i = 0; i < kN; ++i) {
      const double own = series::mse(steered[s][i], set.targets[i]);
      double other = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < kN; ++j)
        if (j != i) other = std::min(other, series::mse(steered[s][i], set.targets[j]));
      if (own < other) d.per_anchor[i] += 1.0;
    }
  }
  double sum = 0.0;
  d.worst = 1.0;
  for (double& f : d.per_anchor) {
    f /= static_cast<double>(pick.size());
    sum += f;
    d.worst = std::min(d.worst, f);
  }
  d.overall = sum / static_cast<double>(kN);
  return d;
}

}  // namespace chronosteer::training
