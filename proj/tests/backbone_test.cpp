// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "chronosteer/backbone.hpp"
#include "chronosteer/errors.hpp"
#include "chronosteer/numerics/ops.hpp"
#include "chronosteer/random.hpp"

namespace chronosteer::backbone {
namespace {

BackboneConfig tiny(Head head) {
  BackboneConfig c;
  c.history = 32;
  c.horizon = 8;
  c.patch = 8;
  c.width = 16;
  c.heads = 4;
  c.ffn = 32;
  c.head = head;
  return c;
}

series::Series random_history(std::size_t n, Rng& rng) {
  series::Series h(n);
  for (double& v : h) v = uniform(rng, -1.0, 1.0);
  return h;
}

class BothHeads : public ::testing::TestWithParam<Head> {};

TEST_P(BothHeads, ZeroInstructionTokenRevertsExactly) {
  const BackboneModel m = BackboneModel::initialize(tiny(GetParam()));
  Rng rng = substream(1, 1);
  for (int rep = 0; rep < 50; ++rep) {
    const series::Series h = random_history(32, rng);
    const num::Tensor body = embed_history(m, h);
    num::Tensor with_slot({body.rows() + 1, body.cols()});
    std::copy(body.data().begin(), body.data().end(), with_slot.data().begin() + body.cols());
    const series::Series a = forward(m, body);
    const series::Series b = forward(m, with_slot);
    ASSERT_EQ(a.size(), 8u);
    EXPECT_EQ(a, b);
    EXPECT_EQ(predict(m, {h})[0], a);
  }
}

TEST_P(BothHeads, NonZeroTokenChangesTheOutput) {
  const BackboneModel m = BackboneModel::initialize(tiny(GetParam()));
  Rng rng = substream(2, 1);
  const series::Series h = random_history(32, rng);
  const num::Tensor body = embed_history(m, h);
  num::Tensor with_slot({body.rows() + 1, body.cols()});
  std::copy(body.data().begin(), body.data().end(), with_slot.data().begin() + body.cols());
  for (std::size_t c = 0; c < body.cols(); ++c) with_slot.at(0, c) = 0.5;
  EXPECT_NE(forward(m, body), forward(m, with_slot));
}

TEST_P(BothHeads, ParameterCountMatchesShapes) {
  const BackboneConfig c = tiny(GetParam());
  const BackboneModel m = BackboneModel::initialize(c);
  const std::size_t L = c.tokens(), D = c.width, F = c.ffn, P = c.horizon;
  const std::size_t block = 2 * D + (D * 3 * D + 3 * D) + (D * D + D) + 2 * D + (D * F + F) + (F * D + D);
  const std::size_t head = (GetParam() == Head::kFlatten ? L * D : D) * P + P;
  const std::size_t expected = (c.patch * D + D) + (L + 1) * D + c.depth * block + 2 * D + head;
  EXPECT_EQ(m.parameter_count(), expected);
  std::size_t summed = 0;
  for (const auto& [name, t] : m.named_parameters()) summed += t->size();
  EXPECT_EQ(summed, expected);
}

INSTANTIATE_TEST_SUITE_P(Heads, BothHeads, ::testing::Values(Head::kMeanPool, Head::kFlatten),
                         [](const auto& info) { return std::string(head_name(info.param)); });

TEST(Backbone, DefaultSizing) {
  const BackboneModel m = BackboneModel::initialize({});
  EXPECT_EQ(m.config.tokens(), 8u);
  EXPECT_GT(m.parameter_count(), 100000u);
}

TEST(Backbone, InitializationIsSeeded) {
  const BackboneModel a = BackboneModel::initialize(tiny(Head::kMeanPool));
  const BackboneModel b = BackboneModel::initialize(tiny(Head::kMeanPool));
  EXPECT_EQ(a.checksum(), b.checksum());
  BackboneConfig c = tiny(Head::kMeanPool);
  c.seed = 8;
  EXPECT_NE(BackboneModel::initialize(c).checksum(), a.checksum());
}

TEST(Backbone, InvalidConfigsAreRejected) {
  BackboneConfig c = tiny(Head::kMeanPool);
  c.patch = 7;
  EXPECT_THROW(c.validate(), UsageError);
  c = tiny(Head::kMeanPool);
  c.heads = 3;
  EXPECT_THROW(c.validate(), UsageError);
  EXPECT_THROW(parse_head("attention"), UsageError);
  EXPECT_EQ(parse_head(head_name(Head::kFlatten)), Head::kFlatten);
}

TEST(Backbone, WrongHistoryLengthIsUsageError) {
  const BackboneModel m = BackboneModel::initialize(tiny(Head::kMeanPool));
  EXPECT_THROW(embed_history(m, series::Series(31, 0.0)), UsageError);
}

TEST(Backbone, PretrainLowersLossAndFreezeHolds) {
  BackboneModel m = BackboneModel::initialize(tiny(Head::kMeanPool));
  std::vector<series::Slice> slices;
  Rng rng = substream(3, 0);
  for (int i = 0; i < 64; ++i) {
    const double phase = uniform(rng, 0.0, 6.28);
    series::Slice s;
    for (int t = 0; t < 40; ++t) (t < 32 ? s.history : s.future).push_back(std::sin(0.4 * t + phase));
    slices.push_back(series::normalize_slice(s));
  }
  PretrainConfig pc;
  pc.epochs = 15;
  pc.batch = 16;
  pc.learning_rate = 3e-3;
  const PretrainReport r = pretrain(m, slices, pc);
  ASSERT_EQ(r.train_loss.size(), 15u);
  EXPECT_LT(r.train_loss.back(), r.train_loss.front());

  freeze(m);
  const std::string sum = m.checksum();
  EXPECT_THROW(pretrain(m, slices, pc), UsageError);
  num::Tape tape;
  const BoundBackbone bb = bind_trainable(tape, m);
  num::Var h = tape.constant(num::Tensor({1, 32}, 0.3));
  num::Var out = encode(tape, bb, embed_tokens(tape, bb, h), std::nullopt, {});
  tape.backward(num::sum(tape, out));
  for (const auto& [name, t] : m.named_parameters()) EXPECT_FALSE(t->requires_grad()) << name;
  EXPECT_EQ(m.checksum(), sum);
}

TEST(Backbone, WithoutPositionsThePoolIsPermutationInvariant) {
  BackboneModel m = BackboneModel::initialize(tiny(Head::kMeanPool));
  for (double& v : m.positions.data()) v = 0.0;
  Rng rng = substream(5, 1);
  const num::Tensor body = embed_history(m, random_history(32, rng));
  num::Tensor shuffled(body.shape());
  const std::vector<std::size_t> order = {2, 0, 3, 1};
  for (std::size_t r = 0; r < order.size(); ++r)
    for (std::size_t c = 0; c < body.cols(); ++c) shuffled.at(r, c) = body.at(order[r], c);
  const series::Series a = forward(m, body), b = forward(m, shuffled);
  for (std::size_t t = 0; t < a.size(); ++t) EXPECT_NEAR(a[t], b[t], 1e-12);
}

TEST(Backbone, ZeroInputGivesPositionalTokens) {
  BackboneModel m = BackboneModel::initialize(tiny(Head::kMeanPool));
  for (double& v : m.patch_b.data()) v = 0.0;
  const num::Tensor tokens = embed_history(m, series::Series(32, 0.0));
  ASSERT_EQ(tokens.rows(), 4u);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < tokens.cols(); ++c) EXPECT_EQ(tokens.at(r, c), m.positions.at(r + 1, c));
}

TEST(Backbone, OtherTokenCountsAreRejected) {
  const BackboneModel m = BackboneModel::initialize(tiny(Head::kMeanPool));
  EXPECT_THROW(forward(m, num::Tensor({6, 16})), UsageError);
}

TEST(Backbone, PrefixMaskMarksNonZeroRows) {
  num::Tensor p({3, 2}, 0.0);
  p.at(1, 1) = -0.0001;
  EXPECT_EQ(prefix_mask(p), (num::PrefixMask{0, 1, 0}));
}

}  // namespace
}  // namespace chronosteer::backbone
