// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "chronosteer/backbone.hpp"
#include "chronosteer/numerics/tape.hpp"
#include "chronosteer/numerics/tensor.hpp"
#include "chronosteer/seriesops.hpp"

namespace chronosteer::steering {

using Vector = std::vector<double>;

// Deterministic text -> unit vector map.
//
// kTrigramHash lowercases the text, pads it as "^text$", hashes every
// character trigram into one of `dim` buckets with a +-1 sign and
// L2-normalizes. kFileTable looks the exact text up in a loaded table.
class TextEmbedder {
 public:
  enum class Mode { kTrigramHash, kFileTable };

  static TextEmbedder trigram(std::size_t dim = 64, std::uint64_t seed = 0);
  // Rows are (text, vector); vectors are normalized on load.
  static TextEmbedder table(std::vector<std::pair<std::string, Vector>> rows);
  // "text<TAB>v0 v1 ..." per line.
  static TextEmbedder load_table(const std::string& path);

  Vector embed(std::string_view text) const;

  Mode mode() const { return mode_; }
  std::size_t dim() const { return dim_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<std::pair<std::string, Vector>>& rows() const { return rows_; }

 private:
  Mode mode_ = Mode::kTrigramHash;
  std::size_t dim_ = 64;
  std::uint64_t seed_ = 0;
  std::vector<std::pair<std::string, Vector>> rows_;
};

double cosine(std::span<const double> a, std::span<const double> b);

struct AnchorMatch {
  std::size_t index = 0;
  double similarity = 0.0;
};

struct Anchor {
  std::string text;
  Vector embedding;
};

// The nine canonical instructions with their embeddings, in TransformKind
// order.
class AnchorCodebook {
 public:
  static AnchorCodebook build(const TextEmbedder& embedder);
  // Validates count, dimensions, non-zero norms and pairwise distinctness.
  static AnchorCodebook from_anchors(std::vector<Anchor> anchors);
  static AnchorCodebook load_table(const std::string& path);
  void save_table(const std::string& path) const;
  std::string to_table() const;
  static AnchorCodebook parse_table(std::string_view text);

  std::size_t size() const { return anchors_.size(); }
  std::size_t dim() const { return anchors_.front().embedding.size(); }
  const Anchor& anchor(std::size_t i) const { return anchors_.at(i); }
  const std::vector<Anchor>& anchors() const { return anchors_; }

  // argmax cosine, lowest index on ties. UsageError on a zero query.
  AnchorMatch match(std::span<const double> query) const;
  // embeddings stacked as size() x dim().
  num::Tensor matrix() const;
  std::size_t parameter_count() const { return size() * dim(); }
  std::string checksum() const;

 private:
  std::vector<Anchor> anchors_;
};

enum class MapperVariant { kTwoLayerRelu, kLinear };
std::string_view variant_name(MapperVariant v);
MapperVariant parse_variant(std::string_view name);

struct MapperConfig {
  MapperVariant variant = MapperVariant::kTwoLayerRelu;
  std::size_t text_dim = 64;
  std::size_t hidden = 128;
  std::size_t series_dim = 64;
  std::uint64_t seed = 5;
};

// relu(h W1 + b1) W2 + b2, or h W1 + b1 for the linear variant (W2, b2 then
// stay empty).
struct AlignmentMapper {
  MapperConfig config;
  num::Tensor w1, b1, w2, b2;

  // Uniform in +-1/sqrt(fan_in) per layer.
  static AlignmentMapper initialize(const MapperConfig& config);

  std::vector<std::pair<std::string, num::Tensor*>> named_parameters();
  std::vector<std::pair<std::string, const num::Tensor*>> named_parameters() const;
  std::vector<num::Tensor*> parameters();
  std::size_t parameter_count() const;
  std::string checksum() const;

  Vector align(std::span<const double> embedding) const;
};

struct BoundMapper {
  MapperVariant variant;
  num::Var w1, b1, w2, b2;
};

BoundMapper bind(num::Tape& tape, const AlignmentMapper& mapper);
BoundMapper bind_trainable(num::Tape& tape, AlignmentMapper& mapper);
// embeddings: n x text_dim -> n x series_dim instruction tokens.
num::Var map_tokens(num::Tape& tape, const BoundMapper& mapper, num::Var embeddings);

// Frozen backbone, trainable mapper, and the text side.
struct ModelBundle {
  backbone::BackboneModel backbone;
  TextEmbedder embedder;
  AnchorCodebook codebook;
  AlignmentMapper mapper;

  static ModelBundle assemble(backbone::BackboneModel backbone, TextEmbedder embedder,
                              const MapperConfig& mapper_config);

  std::size_t total_parameters() const;
  std::size_t trainable_parameters() const { return mapper.parameter_count(); }
};

// Steered predictions for normalized histories in their own frame. A
// missing anchor selects the revert path: a zero instruction token, which
// the backbone treats as absent.
std::vector<series::Series> steer_normalized(const ModelBundle& bundle,
                                             const std::vector<series::Series>& histories,
                                             std::span<const std::optional<std::size_t>> anchors);
series::Series steer_normalized(const ModelBundle& bundle, const series::Series& history,
                                std::optional<std::size_t> anchor);
// All nine anchors per history: result[i][a].
std::vector<std::array<series::Series, series::kTransformCount>> steer_all_anchors(
    const ModelBundle& bundle, const std::vector<series::Series>& histories);

// Graph builder shared with training: (n * anchors) steered predictions for
// n histories, each paired with every row of `anchor_embeddings` (anchors x
// text_dim), slice-major. The backbone is bound read-only.
num::Var steered_graph(num::Tape& tape, const backbone::BoundBackbone& bb,
                       const BoundMapper& mapper, num::Var histories, num::Var anchor_embeddings);
// One prediction per history, steered by the anchor in `anchor_ids` at the
// same position.
num::Var steered_pairs(num::Tape& tape, const backbone::BoundBackbone& bb,
                       const BoundMapper& mapper, num::Var histories, num::Var anchor_embeddings,
                       std::vector<std::size_t> anchor_ids);

struct SteerResult {
  series::Series unimodal;
  series::Series prediction;
  std::optional<AnchorMatch> match;
};

// Raw-frame entry point: normalizes the history by its own min-max, matches
// the instruction to an anchor, and denormalizes the output.
SteerResult chronosteer_forward(const ModelBundle& bundle, std::span<const double> history,
                                const std::optional<std::string>& instruction);

}  // namespace chronosteer::steering
