// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#include <fmt/format.h>

#include <fstream>
#include <sstream>

#include "chronosteer/errors.hpp"
#include "chronosteer/hashing.hpp"
#include "chronosteer/steering.hpp"
#include "vector_table.hpp"

namespace chronosteer::steering {

AnchorCodebook AnchorCodebook::build(const TextEmbedder& embedder) {
  std::vector<Anchor> anchors;
  for (series::TransformKind kind : series::all_transforms()) {
    const std::string text(series::anchor_text(kind));
    anchors.push_back({text, embedder.embed(text)});
  }
  return from_anchors(std::move(anchors));
}

AnchorCodebook AnchorCodebook::from_anchors(std::vector<Anchor> anchors) {
  if (anchors.size() != series::kTransformCount)
    throw FormatError("codebook needs " + std::to_string(series::kTransformCount) +
                      " anchors, got " + std::to_string(anchors.size()));
  const std::size_t d = anchors.front().embedding.size();
  for (const Anchor& a : anchors) {
    if (a.embedding.size() != d || d == 0)
      throw FormatError("codebook: anchor '" + a.text + "' has the wrong dimension");
    double n = 0.0;
    for (double x : a.embedding) n += x * x;
    if (!(n > 0.0)) throw FormatError("codebook: anchor '" + a.text + "' has zero norm");
  }
  for (std::size_t i = 0; i < anchors.size(); ++i)
    for (std::size_t j = i + 1; j < anchors.size(); ++j)
      if (!(cosine(anchors[i].embedding, anchors[j].embedding) < 1.0))
        throw FormatError("codebook: anchors '" + anchors[i].text + "' and '" + anchors[j].text +
                          "' are indistinguishable");
  AnchorCodebook cb;
  cb.anchors_ = std::move(anchors);
  return cb;
}

std::string AnchorCodebook::to_table() const {
  std::string out;
  for (const Anchor& a : anchors_) {
    out += a.text;
    out += '\t';
    for (std::size_t j = 0; j < a.embedding.size(); ++j) {
      if (j) out += ' ';
      out += fmt::format("{:.17g}", a.embedding[j]);
    }
    out += '\n';
  }
  return out;
}

AnchorCodebook AnchorCodebook::parse_table(std::string_view text) {
  std::vector<Anchor> anchors;
  for (auto& [t, v] : parse_vector_table(text)) anchors.push_back({std::move(t), std::move(v)});
  return from_anchors(std::move(anchors));
}

AnchorCodebook AnchorCodebook::load_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open codebook table " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_table(ss.str());
}

void AnchorCodebook::save_table(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write codebook table " + path);
  out << to_table();
}

AnchorMatch AnchorCodebook::match(std::span<const double> query) const {
  if (query.size() != dim())
    throw DimensionError("match_anchor: query has " + std::to_string(query.size()) +
                         " values, expected " + std::to_string(dim()));
  bool nonzero = false;
  for (double x : query) nonzero = nonzero || x != 0.0;
  if (!nonzero) throw UsageError("match_anchor: zero query vector");
  AnchorMatch best{0, cosine(query, anchors_[0].embedding)};
  for (std::size_t i = 1; i < anchors_.size(); ++i) {
    const double s = cosine(query, anchors_[i].embedding);
    if (s > best.similarity) best = {i, s};
  }
  return best;
}

num::Tensor AnchorCodebook::matrix() const {
  num::Tensor m({size(), dim()});
  for (std::size_t i = 0; i < size(); ++i)
    for (std::size_t j = 0; j < dim(); ++j) m.at(i, j) = anchors_[i].embedding[j];
  return m;
}

std::string AnchorCodebook::checksum() const {
  Sha256 h;
  for (const Anchor& a : anchors_) {
    h.update(a.text);
    h.update(a.text, num::Tensor({a.embedding.size()}, a.embedding));
  }
  return h.hex();
}

}  // namespace chronosteer::steering
