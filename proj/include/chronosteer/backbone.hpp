// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "chronosteer/numerics/nn_ops.hpp"
#include "chronosteer/numerics/tape.hpp"
#include "chronosteer/numerics/tensor.hpp"
#include "chronosteer/seriesops.hpp"

// Patch-transformer forecaster that plays the frozen unimodal backbone.
//
// A history of length H is cut into L = H / patch patches, each mapped to a
// width-D token plus a positional embedding. The encoder accepts either those
// L tokens or L + 1 tokens with an instruction token in front. An all-zero
// instruction token marks "no instruction": it is excluded from attention
// keys and from pooling, which makes the L + 1 path reproduce the L path.
namespace chronosteer::backbone {

// How the head reads the encoder output: the mean over present tokens, or
// the L patch tokens concatenated (the instruction slot is never read).
enum class Head { kMeanPool, kFlatten };
std::string_view head_name(Head h);
Head parse_head(std::string_view name);

struct BackboneConfig {
  std::size_t history = 128;
  std::size_t horizon = 32;
  std::size_t patch = 16;
  std::size_t width = 64;
  std::size_t depth = 2;
  std::size_t heads = 4;
  std::size_t ffn = 512;
  Head head = Head::kMeanPool;
  std::uint64_t seed = 7;

  std::size_t tokens() const { return history / patch; }
  void validate() const;
};

struct EncoderBlock {
  num::Tensor ln1_gain, ln1_bias;
  num::Tensor qkv_w, qkv_b;
  num::Tensor proj_w, proj_b;
  num::Tensor ln2_gain, ln2_bias;
  num::Tensor ff1_w, ff1_b;
  num::Tensor ff2_w, ff2_b;
};

struct BackboneModel {
  BackboneConfig config;
  num::Tensor patch_w, patch_b;
  // Row 0 belongs to the instruction slot, rows 1..L to the patches.
  num::Tensor positions;
  std::vector<EncoderBlock> blocks;
  num::Tensor final_gain, final_bias;
  num::Tensor head_w, head_b;
  bool frozen = false;

  static BackboneModel initialize(const BackboneConfig& config);

  // Canonical order and names used by checkpoints and checksums.
  std::vector<std::pair<std::string, num::Tensor*>> named_parameters();
  std::vector<std::pair<std::string, const num::Tensor*>> named_parameters() const;
  std::size_t parameter_count() const;
  std::string checksum() const;
};

// Tape handles for every backbone parameter.
struct BoundBlock {
  num::Var ln1_gain, ln1_bias, qkv_w, qkv_b, proj_w, proj_b;
  num::Var ln2_gain, ln2_bias, ff1_w, ff1_b, ff2_w, ff2_b;
};

struct BoundBackbone {
  const BackboneConfig* config = nullptr;
  num::Var patch_w, patch_b, positions, slot_position;
  std::vector<BoundBlock> blocks;
  num::Var final_gain, final_bias, head_w, head_b;
};

// Read-only binding; no gradient reaches the parameters.
BoundBackbone bind(num::Tape& tape, const BackboneModel& model);
// Gradient-carrying binding. Frozen models bind read-only.
BoundBackbone bind_trainable(num::Tape& tape, BackboneModel& model);

// histories: n x H normalized values -> (n * L) x D tokens with positions.
num::Var embed_tokens(num::Tape& tape, const BoundBackbone& bb, num::Var histories);

// Runs the encoder over n sequences. `body` is (n * L) x D from
// embed_tokens; `prefix`, when given, is n x D raw instruction tokens and
// `mask` marks which of them are present. Returns n x P predictions.
num::Var encode(num::Tape& tape, const BoundBackbone& bb, num::Var body,
                std::optional<num::Var> prefix, const num::PrefixMask& mask);

// 1 where the prefix row holds any non-zero value, else 0.
num::PrefixMask prefix_mask(const num::Tensor& prefix);

// Single-sequence helpers over the graph functions above.
num::Tensor embed_history(const BackboneModel& model, std::span<const double> history);
// tokens: L or L + 1 rows of width D. L + 1 rows put the instruction token
// first.
series::Series forward(const BackboneModel& model, const num::Tensor& tokens);

// Unimodal predictions for normalized histories, in the same frame.
std::vector<series::Series> predict(const BackboneModel& model,
                                    const std::vector<series::Series>& histories);

struct PretrainConfig {
  std::size_t epochs = 20;
  std::size_t batch = 32;
  double learning_rate = 1e-3;
  double validation_fraction = 0.1;
  std::uint64_t seed = 11;
};

struct PretrainReport {
  std::vector<double> train_loss;
  std::vector<double> validation_loss;
  double naive_validation_mse = 0.0;
  double seconds = 0.0;
};

// Minimises future MSE on normalized slices. Batches alternate between the
// L-token input and the L + 1 input with a zero instruction token.
PretrainReport pretrain(BackboneModel& model, const std::vector<series::Slice>& slices,
                        const PretrainConfig& config);

// Excludes every parameter from gradient tracking for good.
void freeze(BackboneModel& model);

}  // namespace chronosteer::backbone
