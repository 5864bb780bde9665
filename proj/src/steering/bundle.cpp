// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>

#include "chronosteer/errors.hpp"
#include "chronosteer/numerics/ops.hpp"
#include "chronosteer/steering.hpp"

namespace chronosteer::steering {

using num::Tape;
using num::Tensor;
using num::Var;

ModelBundle ModelBundle::assemble(backbone::BackboneModel backbone, TextEmbedder embedder,
                                  const MapperConfig& mapper_config) {
  if (!backbone.frozen) backbone::freeze(backbone);
  MapperConfig mc = mapper_config;
  mc.text_dim = embedder.dim();
  mc.series_dim = backbone.config.width;
  ModelBundle b{std::move(backbone), std::move(embedder), {}, AlignmentMapper::initialize(mc)};
  b.codebook = AnchorCodebook::build(b.embedder);
  return b;
}

std::size_t ModelBundle::total_parameters() const {
  return backbone.parameter_count() + codebook.parameter_count() + mapper.parameter_count();
}

namespace {

constexpr std::size_t kChunk = 64;

Tensor stack(const std::vector<series::Series>& rows, std::size_t begin, std::size_t count,
             std::size_t width) {
  Tensor t({count, width});
  for (std::size_t i = 0; i < count; ++i) {
    const series::Series& r = rows[begin + i];
    if (r.size() != width)
      throw UsageError("history has " + std::to_string(r.size()) + " values, expected " +
                       std::to_string(width));
    std::copy(r.begin(), r.end(), t.data().begin() + i * width);
  }
  return t;
}

// Instruction tokens for every anchor, anchors x width.
Tensor anchor_tokens(const ModelBundle& bundle) {
  Tape tape;
  const BoundMapper bm = bind(tape, bundle.mapper);
  return tape.value(map_tokens(tape, bm, tape.constant(bundle.codebook.matrix())));
}

}  // namespace

Var steered_graph(Tape& tape, const backbone::BoundBackbone& bb, const BoundMapper& mapper,
                  Var histories, Var anchor_embeddings) {
  const std::size_t n = tape.value(histories).rows();
  const std::size_t a = tape.value(anchor_embeddings).rows();
  const std::size_t l = bb.config->tokens();
  const Var body = backbone::embed_tokens(tape, bb, histories);
  const Var tokens = map_tokens(tape, mapper, anchor_embeddings);
  std::vector<std::size_t> body_rows;
  std::vector<std::size_t> token_rows;
  body_rows.reserve(n * a * l);
  token_rows.reserve(n * a);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t j = 0; j < a; ++j) {
      for (std::size_t t = 0; t < l; ++t) body_rows.push_back(s * l + t);
      token_rows.push_back(j);
    }
  const Var expanded = num::gather_rows(tape, body, std::move(body_rows));
  const Var prefix = num::gather_rows(tape, tokens, std::move(token_rows));
  return backbone::encode(tape, bb, expanded, prefix, backbone::prefix_mask(tape.value(prefix)));
}

Var steered_pairs(Tape& tape, const backbone::BoundBackbone& bb, const BoundMapper& mapper,
                  Var histories, Var anchor_embeddings, std::vector<std::size_t> anchor_ids) {
  if (anchor_ids.size() != tape.value(histories).rows())
    throw UsageError("steered_pairs: one anchor per history required");
  const std::size_t a = tape.value(anchor_embeddings).rows();
  for (std::size_t id : anchor_ids)
    if (id >= a) throw UsageError("steered_pairs: anchor index " + std::to_string(id) + " out of range");
  const Var body = backbone::embed_tokens(tape, bb, histories);
  const Var tokens = map_tokens(tape, mapper, anchor_embeddings);
  const Var prefix = num::gather_rows(tape, tokens, std::move(anchor_ids));
  return backbone::encode(tape, bb, body, prefix, backbone::prefix_mask(tape.value(prefix)));
}

std::vector<series::Series> steer_normalized(const ModelBundle& bundle,
                                             const std::vector<series::Series>& histories,
                                             std::span<const std::optional<std::size_t>> anchors) {
  if (anchors.size() != histories.size())
    throw UsageError("steer: one anchor slot per history required");
  const std::size_t h = bundle.backbone.config.history;
  const std::size_t p = bundle.backbone.config.horizon;
  const std::size_t d = bundle.backbone.config.width;
  const Tensor tokens = anchor_tokens(bundle);
  std::vector<series::Series> out;
  out.reserve(histories.size());
  for (std::size_t begin = 0; begin < histories.size(); begin += kChunk) {
    const std::size_t count = std::min(kChunk, histories.size() - begin);
    Tensor prefix({count, d});
    for (std::size_t i = 0; i < count; ++i) {
      const std::optional<std::size_t>& a = anchors[begin + i];
      if (!a) continue;
      if (*a >= bundle.codebook.size())
        throw UsageError("steer: anchor index " + std::to_string(*a) + " out of range");
      for (std::size_t j = 0; j < d; ++j) prefix.at(i, j) = tokens.at(*a, j);
    }
    const num::PrefixMask mask = backbone::prefix_mask(prefix);
    Tape tape;
    const backbone::BoundBackbone bb = backbone::bind(tape, bundle.backbone);
    const Var body = backbone::embed_tokens(tape, bb, tape.constant(stack(histories, begin, count, h)));
    const Var y = backbone::encode(tape, bb, body, tape.constant(std::move(prefix)), mask);
    const Tensor& yv = tape.value(y);
    for (std::size_t i = 0; i < count; ++i)
      out.emplace_back(yv.data().begin() + i * p, yv.data().begin() + (i + 1) * p);
  }
  return out;
}

series::Series steer_normalized(const ModelBundle& bundle, const series::Series& history,
                                std::optional<std::size_t> anchor) {
  const std::vector<series::Series> hs{history};
  const std::optional<std::size_t> slots[] = {anchor};
  return steer_normalized(bundle, hs, slots).front();
}

std::vector<std::array<series::Series, series::kTransformCount>> steer_all_anchors(
    const ModelBundle& bundle, const std::vector<series::Series>& histories) {
  const std::size_t h = bundle.backbone.config.history;
  const std::size_t p = bundle.backbone.config.horizon;
  constexpr std::size_t kA = series::kTransformCount;
  const Tensor embeddings = bundle.codebook.matrix();
  std::vector<std::array<series::Series, kA>> out;
  out.reserve(histories.size());
  for (std::size_t begin = 0; begin < histories.size(); begin += kChunk) {
    const std::size_t count = std::min(kChunk, histories.size() - begin);
    Tape tape;
    const backbone::BoundBackbone bb = backbone::bind(tape, bundle.backbone);
    const BoundMapper bm = bind(tape, bundle.mapper);
    const Var y = steered_graph(tape, bb, bm, tape.constant(stack(histories, begin, count, h)),
                                tape.view(embeddings));
    const Tensor& yv = tape.value(y);
    for (std::size_t i = 0; i < count; ++i) {
      std::array<series::Series, kA> row;
      for (std::size_t a = 0; a < kA; ++a) {
        const auto first = yv.data().begin() + (i * kA + a) * p;
        row[a].assign(first, first + p);
      }
      out.push_back(std::move(row));
    }
  }
  return out;
}

SteerResult chronosteer_forward(const ModelBundle& bundle, std::span<const double> history,
                                const std::optional<std::string>& instruction) {
  const std::size_t h = bundle.backbone.config.history;
  if (history.size() != h)
    throw UsageError("history has " + std::to_string(history.size()) + " values, expected " +
                     std::to_string(h));
  const series::Normalized norm = series::normalize(history);
  SteerResult r;
  std::optional<std::size_t> anchor;
  if (instruction) {
    r.match = bundle.codebook.match(bundle.embedder.embed(*instruction));
    anchor = r.match->index;
  }
  const std::vector<series::Series> unimodal = backbone::predict(bundle.backbone, {norm.values});
  r.unimodal = series::denormalize(unimodal.front(), norm.record);
  r.prediction = series::denormalize(steer_normalized(bundle, norm.values, anchor), norm.record);
  return r;
}

}  // namespace chronosteer::steering
