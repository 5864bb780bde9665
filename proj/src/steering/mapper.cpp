// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "chronosteer/errors.hpp"
#include "chronosteer/hashing.hpp"
#include "chronosteer/numerics/nn_ops.hpp"
#include "chronosteer/numerics/ops.hpp"
#include "chronosteer/random.hpp"
#include "chronosteer/steering.hpp"

namespace chronosteer::steering {

std::string_view variant_name(MapperVariant v) {
  return v == MapperVariant::kTwoLayerRelu ? "two_layer_relu" : "linear";
}

MapperVariant parse_variant(std::string_view name) {
  if (name == "two_layer_relu") return MapperVariant::kTwoLayerRelu;
  if (name == "linear") return MapperVariant::kLinear;
  throw UsageError("unknown mapper variant '" + std::string(name) + "'");
}

namespace {

num::Tensor uniform_init(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng& rng) {
  num::Tensor t({rows, cols});
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& v : t.data()) v = uniform(rng, -bound, bound);
  return t;
}

}  // namespace

AlignmentMapper AlignmentMapper::initialize(const MapperConfig& config) {
  if (config.text_dim == 0 || config.series_dim == 0 ||
      (config.variant == MapperVariant::kTwoLayerRelu && config.hidden == 0))
    throw UsageError("mapper: dimensions must be positive");
  AlignmentMapper m;
  m.config = config;
  Rng rng = substream(config.seed, 0);
  if (config.variant == MapperVariant::kTwoLayerRelu) {
    m.w1 = uniform_init(config.text_dim, config.hidden, config.text_dim, rng);
    m.b1 = uniform_init(1, config.hidden, config.text_dim, rng);
    m.w2 = uniform_init(config.hidden, config.series_dim, config.hidden, rng);
    m.b2 = uniform_init(1, config.series_dim, config.hidden, rng);
  } else {
    m.w1 = uniform_init(config.text_dim, config.series_dim, config.text_dim, rng);
    m.b1 = uniform_init(1, config.series_dim, config.text_dim, rng);
  }
  for (num::Tensor* t : m.parameters()) t->set_requires_grad(true);
  return m;
}

std::vector<std::pair<std::string, num::Tensor*>> AlignmentMapper::named_parameters() {
  std::vector<std::pair<std::string, num::Tensor*>> out{{"mapper.w1", &w1}, {"mapper.b1", &b1}};
  if (config.variant == MapperVariant::kTwoLayerRelu) {
    out.emplace_back("mapper.w2", &w2);
    out.emplace_back("mapper.b2", &b2);
  }
  return out;
}

std::vector<std::pair<std::string, const num::Tensor*>> AlignmentMapper::named_parameters() const {
  std::vector<std::pair<std::string, const num::Tensor*>> out{{"mapper.w1", &w1},
                                                              {"mapper.b1", &b1}};
  if (config.variant == MapperVariant::kTwoLayerRelu) {
    out.emplace_back("mapper.w2", &w2);
    out.emplace_back("mapper.b2", &b2);
  }
  return out;
}

std::vector<num::Tensor*> AlignmentMapper::parameters() {
  std::vector<num::Tensor*> out;
  for (auto& [name, t] : named_parameters()) out.push_back(t);
  return out;
}

std::size_t AlignmentMapper::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : named_parameters()) n += t->size();
  return n;
}

std::string AlignmentMapper::checksum() const {
  Sha256 h;
  h.update(variant_name(config.variant));
  for (const auto& [name, t] : named_parameters()) h.update(name, *t);
  return h.hex();
}

Vector AlignmentMapper::align(std::span<const double> embedding) const {
  if (embedding.size() != config.text_dim)
    throw DimensionError("align: embedding has " + std::to_string(embedding.size()) +
                         " values, expected " + std::to_string(config.text_dim));
  num::Tape tape;
  const BoundMapper bm = bind(tape, *this);
  const num::Var h = tape.constant(
      num::Tensor({1, embedding.size()}, Vector(embedding.begin(), embedding.end())));
  return tape.value(map_tokens(tape, bm, h)).values();
}

BoundMapper bind(num::Tape& tape, const AlignmentMapper& mapper) {
  BoundMapper b{mapper.config.variant, tape.view(mapper.w1), tape.view(mapper.b1), {}, {}};
  if (b.variant == MapperVariant::kTwoLayerRelu) {
    b.w2 = tape.view(mapper.w2);
    b.b2 = tape.view(mapper.b2);
  }
  return b;
}

BoundMapper bind_trainable(num::Tape& tape, AlignmentMapper& mapper) {
  BoundMapper b{mapper.config.variant, tape.param(mapper.w1), tape.param(mapper.b1), {}, {}};
  if (b.variant == MapperVariant::kTwoLayerRelu) {
    b.w2 = tape.param(mapper.w2);
    b.b2 = tape.param(mapper.b2);
  }
  return b;
}

num::Var map_tokens(num::Tape& tape, const BoundMapper& mapper, num::Var embeddings) {
  const num::Var first = num::linear(tape, embeddings, mapper.w1, mapper.b1);
  if (mapper.variant == MapperVariant::kLinear) return first;
  return num::linear(tape, num::relu(tape, first), mapper.w2, mapper.b2);
}

}  // namespace chronosteer::steering
