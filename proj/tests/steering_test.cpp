// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "chronosteer/errors.hpp"
#include "chronosteer/numerics/ops.hpp"
#include "chronosteer/random.hpp"
#include "chronosteer/steering.hpp"

namespace chronosteer::steering {
namespace {

backbone::BackboneModel tiny_backbone() {
  backbone::BackboneConfig c;
  c.history = 32;
  c.horizon = 8;
  c.patch = 8;
  c.width = 16;
  c.heads = 2;
  c.ffn = 16;
  return backbone::BackboneModel::initialize(c);
}

double norm(const Vector& v) { return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0)); }

TEST(TextEmbedder, TrigramIsUnitNormDeterministicAndCaseBlind) {
  const TextEmbedder e = TextEmbedder::trigram(64);
  const Vector a = e.embed("Elevate Peaks");
  EXPECT_EQ(a.size(), 64u);
  EXPECT_NEAR(norm(a), 1.0, 1e-12);
  EXPECT_EQ(a, TextEmbedder::trigram(64).embed("Elevate Peaks"));
  EXPECT_EQ(a, e.embed("elevate peaks"));
  EXPECT_NE(a, e.embed("Flatten Peaks"));
  EXPECT_THROW(e.embed(""), UsageError);
  EXPECT_THROW(TextEmbedder::trigram(0), UsageError);
}

TEST(TextEmbedder, TableLooksUpExactText) {
  const TextEmbedder e = TextEmbedder::table({{"up", {3.0, 4.0}}, {"down", {0.0, -2.0}}});
  EXPECT_EQ(e.mode(), TextEmbedder::Mode::kFileTable);
  EXPECT_EQ(e.embed("up"), (Vector{0.6, 0.8}));
  EXPECT_EQ(e.embed("down"), (Vector{0.0, -1.0}));
  EXPECT_THROW(e.embed("sideways"), LookupError);
  EXPECT_THROW(TextEmbedder::table({{"up", {1.0, 0.0}}, {"x", {1.0}}}), FormatError);
  EXPECT_THROW(TextEmbedder::table({{"z", {0.0, 0.0}}}), DomainError);
}

TEST(Cosine, BasicsAndErrors) {
  EXPECT_DOUBLE_EQ(cosine(Vector{1, 0}, Vector{0, 2}), 0.0);
  EXPECT_DOUBLE_EQ(cosine(Vector{1, 1}, Vector{2, 2}), 1.0);
  EXPECT_THROW(cosine(Vector{1}, Vector{1, 2}), DimensionError);
  EXPECT_THROW(cosine(Vector{0, 0}, Vector{1, 2}), UsageError);
}

TEST(Codebook, NineDistinctAnchorsInTransformOrder) {
  const AnchorCodebook cb = AnchorCodebook::build(TextEmbedder::trigram());
  ASSERT_EQ(cb.size(), 9u);
  EXPECT_EQ(cb.parameter_count(), 9u * 64u);
  for (std::size_t i = 0; i < 9; ++i) {
    EXPECT_EQ(cb.anchor(i).text, series::anchor_text(series::transform_from_index(i)));
    const AnchorMatch m = cb.match(cb.anchor(i).embedding);
    EXPECT_EQ(m.index, i);
    EXPECT_NEAR(m.similarity, 1.0, 1e-12);
  }
  const num::Tensor mat = cb.matrix();
  EXPECT_EQ(mat.rows(), 9u);
  EXPECT_EQ(mat.cols(), 64u);
}

TEST(Codebook, TiesGoToLowestIndexAndBadQueriesThrow) {
  std::vector<Anchor> anchors;
  for (std::size_t i = 0; i < 9; ++i) {
    Vector v(9, 0.0);
    v[i] = 1.0;
    anchors.push_back({"a" + std::to_string(i), v});
  }
  const AnchorCodebook cb = AnchorCodebook::from_anchors(anchors);
  Vector q(9, 0.0);
  q[4] = q[7] = 1.0;
  EXPECT_EQ(cb.match(q).index, 4u);
  EXPECT_THROW(cb.match(Vector(9, 0.0)), UsageError);
  EXPECT_THROW(cb.match(Vector(3, 1.0)), DimensionError);

  auto dup = anchors;
  dup[8].embedding = dup[0].embedding;
  EXPECT_THROW(AnchorCodebook::from_anchors(dup), FormatError);
  anchors.pop_back();
  EXPECT_THROW(AnchorCodebook::from_anchors(anchors), FormatError);
}

TEST(Codebook, AntipodeAndRescaling) {
  const AnchorCodebook cb = AnchorCodebook::build(TextEmbedder::trigram());
  Vector neg = cb.anchor(3).embedding;
  for (double& v : neg) v = -v;
  EXPECT_NE(cb.match(neg).index, 3u);
  const TextEmbedder e = TextEmbedder::trigram();
  for (const char* text : {"please raise the peaks", "flatten it", "trend up a bit", "Lower Peaks"}) {
    Vector q = e.embed(text);
    std::size_t brute = 0;
    for (std::size_t j = 1; j < 9; ++j)
      if (cosine(q, cb.anchor(j).embedding) > cosine(q, cb.anchor(brute).embedding)) brute = j;
    EXPECT_EQ(cb.match(q).index, brute) << text;
    for (double& v : q) v *= 7.5;
    EXPECT_EQ(cb.match(q).index, brute) << text;
  }
  EXPECT_LT(cosine(e.embed("Elevate Peaks"), e.embed("Lower Peaks")), 1.0);
}

TEST(Codebook, TableRoundTripIsExact) {
  const AnchorCodebook cb = AnchorCodebook::build(TextEmbedder::trigram(32, 4));
  const AnchorCodebook back = AnchorCodebook::parse_table(cb.to_table());
  EXPECT_EQ(back.checksum(), cb.checksum());
  EXPECT_EQ(back.to_table(), cb.to_table());
}

TEST(Mapper, ShapesCountsAndVariants) {
  const AlignmentMapper two = AlignmentMapper::initialize({.text_dim = 64, .hidden = 128, .series_dim = 64});
  EXPECT_EQ(two.parameter_count(), 64u * 128 + 128 + 128 * 64 + 64);
  const AlignmentMapper lin =
      AlignmentMapper::initialize({.variant = MapperVariant::kLinear, .text_dim = 64, .series_dim = 64});
  EXPECT_EQ(lin.parameter_count(), 64u * 64 + 64);
  EXPECT_TRUE(lin.w2.empty());
  EXPECT_EQ(two.align(Vector(64, 0.1)).size(), 64u);
  EXPECT_THROW(two.align(Vector(3, 0.1)), DimensionError);
  EXPECT_EQ(parse_variant(variant_name(MapperVariant::kLinear)), MapperVariant::kLinear);
  EXPECT_THROW(parse_variant("mlp3"), UsageError);
}

TEST(Mapper, ZeroWeightsGiveZeroTokenAndLinearIdentityCopies) {
  AlignmentMapper m = AlignmentMapper::initialize({.text_dim = 8, .hidden = 4, .series_dim = 6});
  for (num::Tensor* t : m.parameters())
    for (double& v : t->data()) v = 0.0;
  EXPECT_EQ(m.align(Vector(8, 0.3)), Vector(6, 0.0));
  AlignmentMapper lin =
      AlignmentMapper::initialize({.variant = MapperVariant::kLinear, .text_dim = 4, .series_dim = 6});
  for (double& v : lin.w1.data()) v = 0.0;
  for (double& v : lin.b1.data()) v = 0.0;
  for (std::size_t i = 0; i < 4; ++i) lin.w1.at(i, i) = 1.0;
  EXPECT_EQ(lin.align(Vector{1, 2, 3, 4}), (Vector{1, 2, 3, 4, 0, 0}));
}

TEST(Mapper, InitIsBoundedBySqrtFanIn) {
  const AlignmentMapper m = AlignmentMapper::initialize({.text_dim = 64, .hidden = 32, .series_dim = 16});
  for (double v : m.w1.data()) EXPECT_LE(std::abs(v), 1.0 / 8.0);
  for (double v : m.w2.data()) EXPECT_LE(std::abs(v), 1.0 / std::sqrt(32.0));
}

TEST(Bundle, TrainableShareStaysSmall) {
  ModelBundle b = ModelBundle::assemble(backbone::BackboneModel::initialize({}), TextEmbedder::trigram(),
                                        {.hidden = 128});
  EXPECT_TRUE(b.backbone.frozen);
  EXPECT_EQ(b.trainable_parameters(), b.mapper.parameter_count());
  EXPECT_EQ(b.total_parameters(),
            b.backbone.parameter_count() + b.codebook.parameter_count() + b.mapper.parameter_count());
  EXPECT_LE(static_cast<double>(b.trainable_parameters()) / b.total_parameters(), 0.10);
}

TEST(Bundle, RevertPathEqualsBackbone) {
  const ModelBundle b = ModelBundle::assemble(tiny_backbone(), TextEmbedder::trigram(16), {});
  Rng rng = substream(6, 0);
  std::vector<series::Series> hist(20, series::Series(32));
  for (auto& h : hist)
    for (double& v : h) v = uniform(rng, -1.0, 1.0);
  const std::vector<std::optional<std::size_t>> none(hist.size());
  EXPECT_EQ(steer_normalized(b, hist, none), backbone::predict(b.backbone, hist));
}

TEST(Bundle, BatchedPathsAgree) {
  const ModelBundle b = ModelBundle::assemble(tiny_backbone(), TextEmbedder::trigram(16), {});
  Rng rng = substream(7, 0);
  std::vector<series::Series> hist(5, series::Series(32));
  for (auto& h : hist)
    for (double& v : h) v = uniform(rng, -1.0, 1.0);
  const auto all = steer_all_anchors(b, hist);
  for (std::size_t i = 0; i < hist.size(); ++i)
    for (std::size_t a = 0; a < 9; ++a) {
      const series::Series one = steer_normalized(b, hist[i], a);
      ASSERT_EQ(one.size(), all[i][a].size());
      for (std::size_t t = 0; t < one.size(); ++t) EXPECT_NEAR(one[t], all[i][a][t], 1e-12);
    }
  EXPECT_THROW(steer_normalized(b, hist[0], std::size_t{9}), UsageError);
  EXPECT_THROW(steer_normalized(b, series::Series(31, 0.0), std::nullopt), UsageError);
}

TEST(Bundle, GradientReachesTheMapperThroughTheFrozenBackbone) {
  ModelBundle b = ModelBundle::assemble(tiny_backbone(), TextEmbedder::trigram(16), {});
  for (num::Tensor* t : b.mapper.parameters()) t->zero_grad();
  num::Tape tape;
  const auto bb = backbone::bind(tape, b.backbone);
  const BoundMapper bm = bind_trainable(tape, b.mapper);
  num::Tensor h({2, 32});
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = std::sin(0.37 * static_cast<double>(i));
  const num::Var out = steered_graph(tape, bb, bm, tape.constant(h), tape.constant(b.codebook.matrix()));
  tape.backward(num::sum(tape, num::mul(tape, out, out)));
  for (num::Tensor* t : b.mapper.parameters()) {
    double total = 0.0;
    for (double g : t->grad()) total += std::abs(g);
    EXPECT_GT(total, 0.0);
  }
}

TEST(Bundle, RawForwardMatchesAnchorAndDenormalizes) {
  const ModelBundle b = ModelBundle::assemble(tiny_backbone(), TextEmbedder::trigram(16), {});
  series::Series raw(32);
  for (std::size_t t = 0; t < raw.size(); ++t) raw[t] = 100.0 + 10.0 * std::sin(0.3 * t);
  const SteerResult plain = chronosteer_forward(b, raw, std::nullopt);
  EXPECT_FALSE(plain.match.has_value());
  EXPECT_EQ(plain.prediction, plain.unimodal);

  const SteerResult exact = chronosteer_forward(b, raw, "Elevate Peaks");
  const SteerResult shouted = chronosteer_forward(b, raw, "ELEVATE PEAKS");
  EXPECT_EQ(exact.match->index, shouted.match->index);
  EXPECT_EQ(exact.prediction, shouted.prediction);

  const SteerResult up = chronosteer_forward(b, raw, "Increase Trend");
  ASSERT_TRUE(up.match.has_value());
  EXPECT_EQ(up.match->index, series::index_of(series::TransformKind::kIncreaseTrend));
  const series::Normalized n = series::normalize(raw);
  const series::Series expected = series::denormalize(
      steer_normalized(b, n.values, up.match->index), n.record);
  EXPECT_EQ(up.prediction, expected);
}

}  // namespace
}  // namespace chronosteer::steering
