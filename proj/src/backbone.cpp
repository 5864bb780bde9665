// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#include "chronosteer/backbone.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include <spdlog/spdlog.h>

#include "chronosteer/errors.hpp"
#include "chronosteer/hashing.hpp"
#include "chronosteer/numerics/adam.hpp"
#include "chronosteer/numerics/ops.hpp"
#include "chronosteer/random.hpp"

namespace chronosteer::backbone {

using num::Tape;
using num::Tensor;
using num::Var;

std::string_view head_name(Head h) { return h == Head::kFlatten ? "flatten" : "mean_pool"; }

Head parse_head(std::string_view name) {
  if (name == "flatten") return Head::kFlatten;
  if (name == "mean_pool") return Head::kMeanPool;
  throw UsageError("unknown backbone head '" + std::string(name) + "'");
}

void BackboneConfig::validate() const {
  if (history == 0 || horizon == 0 || patch == 0 || width == 0 || depth == 0 || heads == 0 ||
      ffn == 0)
    throw UsageError("backbone config: all sizes must be positive");
  if (history % patch != 0) throw UsageError("backbone config: history must be divisible by patch");
  if (width % heads != 0) throw UsageError("backbone config: width must be divisible by heads");
}

namespace {

Tensor uniform_tensor(num::Shape shape, double bound, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = uniform(rng, -bound, bound);
  return t;
}

template <typename Model, typename Out>
void collect(Model& m, Out& out) {
  out.emplace_back("patch.w", &m.patch_w);
  out.emplace_back("patch.b", &m.patch_b);
  out.emplace_back("positions", &m.positions);
  for (std::size_t i = 0; i < m.blocks.size(); ++i) {
    auto& b = m.blocks[i];
    const std::string p = "block" + std::to_string(i) + ".";
    out.emplace_back(p + "ln1.gain", &b.ln1_gain);
    out.emplace_back(p + "ln1.bias", &b.ln1_bias);
    out.emplace_back(p + "qkv.w", &b.qkv_w);
    out.emplace_back(p + "qkv.b", &b.qkv_b);
    out.emplace_back(p + "proj.w", &b.proj_w);
    out.emplace_back(p + "proj.b", &b.proj_b);
    out.emplace_back(p + "ln2.gain", &b.ln2_gain);
    out.emplace_back(p + "ln2.bias", &b.ln2_bias);
    out.emplace_back(p + "ff1.w", &b.ff1_w);
    out.emplace_back(p + "ff1.b", &b.ff1_b);
    out.emplace_back(p + "ff2.w", &b.ff2_w);
    out.emplace_back(p + "ff2.b", &b.ff2_b);
  }
  out.emplace_back("final.gain", &m.final_gain);
  out.emplace_back("final.bias", &m.final_bias);
  out.emplace_back("head.w", &m.head_w);
  out.emplace_back("head.b", &m.head_b);
}

}  // namespace

BackboneModel BackboneModel::initialize(const BackboneConfig& config) {
  config.validate();
  BackboneModel m;
  m.config = config;
  const std::size_t d = config.width;
  const std::size_t f = config.ffn;
  const std::size_t l = config.tokens();
  std::uint64_t stream = 0;
  auto next = [&] { return substream(config.seed, stream++); };

  Rng r = next();
  m.patch_w = uniform_tensor({config.patch, d}, 1.0 / std::sqrt(double(config.patch)), r);
  m.patch_b = Tensor({1, d});
  r = next();
  m.positions = uniform_tensor({l + 1, d}, 0.1, r);
  for (std::size_t j = 0; j < d; ++j) m.positions.at(0, j) = 0.0;
  for (std::size_t i = 0; i < config.depth; ++i) {
    EncoderBlock b;
    b.ln1_gain = Tensor({1, d}, 1.0);
    b.ln1_bias = Tensor({1, d});
    r = next();
    b.qkv_w = uniform_tensor({d, 3 * d}, 1.0 / std::sqrt(double(d)), r);
    b.qkv_b = Tensor({1, 3 * d});
    r = next();
    b.proj_w = uniform_tensor({d, d}, 1.0 / std::sqrt(double(d)), r);
    b.proj_b = Tensor({1, d});
    b.ln2_gain = Tensor({1, d}, 1.0);
    b.ln2_bias = Tensor({1, d});
    r = next();
    b.ff1_w = uniform_tensor({d, f}, 1.0 / std::sqrt(double(d)), r);
    b.ff1_b = Tensor({1, f});
    r = next();
    b.ff2_w = uniform_tensor({f, d}, 1.0 / std::sqrt(double(f)), r);
    b.ff2_b = Tensor({1, d});
    m.blocks.push_back(std::move(b));
  }
  m.final_gain = Tensor({1, d}, 1.0);
  m.final_bias = Tensor({1, d});
  r = next();
  const std::size_t head_in = config.head == Head::kFlatten ? config.tokens() * d : d;
  m.head_w = uniform_tensor({head_in, config.horizon}, 1.0 / std::sqrt(double(head_in)), r);
  m.head_b = Tensor({1, config.horizon});
  for (auto& [name, t] : m.named_parameters()) t->set_requires_grad(true);
  return m;
}

std::vector<std::pair<std::string, Tensor*>> BackboneModel::named_parameters() {
  std::vector<std::pair<std::string, Tensor*>> out;
  collect(*this, out);
  return out;
}

std::vector<std::pair<std::string, const Tensor*>> BackboneModel::named_parameters() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  collect(*this, out);
  return out;
}

std::size_t BackboneModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : named_parameters()) n += t->size();
  return n;
}

std::string BackboneModel::checksum() const {
  Sha256 h;
  for (const auto& [name, t] : named_parameters()) h.update(name, *t);
  return h.hex();
}

namespace {

template <typename Bind>
BoundBackbone bind_with(Tape& tape, const BackboneModel& model, Bind&& bind_one) {
  BoundBackbone bb;
  bb.config = &model.config;
  bb.patch_w = bind_one(model.patch_w);
  bb.patch_b = bind_one(model.patch_b);
  bb.positions = bind_one(model.positions);
  bb.slot_position = num::gather_rows(tape, bb.positions, {0});
  for (const EncoderBlock& b : model.blocks) {
    bb.blocks.push_back(BoundBlock{bind_one(b.ln1_gain), bind_one(b.ln1_bias), bind_one(b.qkv_w),
                                   bind_one(b.qkv_b), bind_one(b.proj_w), bind_one(b.proj_b),
                                   bind_one(b.ln2_gain), bind_one(b.ln2_bias), bind_one(b.ff1_w),
                                   bind_one(b.ff1_b), bind_one(b.ff2_w), bind_one(b.ff2_b)});
  }
  bb.final_gain = bind_one(model.final_gain);
  bb.final_bias = bind_one(model.final_bias);
  bb.head_w = bind_one(model.head_w);
  bb.head_b = bind_one(model.head_b);
  return bb;
}

}  // namespace

BoundBackbone bind(Tape& tape, const BackboneModel& model) {
  return bind_with(tape, model, [&tape](const Tensor& t) { return tape.view(t); });
}

BoundBackbone bind_trainable(Tape& tape, BackboneModel& model) {
  if (model.frozen) return bind(tape, model);
  return bind_with(tape, model,
                   [&tape](const Tensor& t) { return tape.param(const_cast<Tensor&>(t)); });
}

Var embed_tokens(Tape& tape, const BoundBackbone& bb, Var histories) {
  const BackboneConfig& c = *bb.config;
  const Tensor& h = tape.value(histories);
  if (h.cols() != c.history)
    throw UsageError("embed: history length " + std::to_string(h.cols()) + ", expected " +
                     std::to_string(c.history));
  const std::size_t n = h.rows();
  const std::size_t l = c.tokens();
  const Var patches = num::reshape(tape, histories, {n * l, c.patch});
  const Var tokens = num::linear(tape, patches, bb.patch_w, bb.patch_b);
  std::vector<std::size_t> rows(n * l);
  for (std::size_t i = 0; i < n * l; ++i) rows[i] = 1 + i % l;
  return num::add(tape, tokens, num::gather_rows(tape, bb.positions, std::move(rows)));
}

Var encode(Tape& tape, const BoundBackbone& bb, Var body, std::optional<Var> prefix,
           const num::PrefixMask& mask) {
  const BackboneConfig& c = *bb.config;
  const std::size_t l = c.tokens();
  const Tensor& bv = tape.value(body);
  if (bv.cols() != c.width || bv.rows() % l != 0)
    throw UsageError("encode: body must be (n * " + std::to_string(l) + ") x " +
                     std::to_string(c.width));
  const std::size_t n = bv.rows() / l;
  Var x = body;
  std::size_t tokens = l;
  num::PrefixMask active;
  if (prefix) {
    const Tensor& pv = tape.value(*prefix);
    if (pv.rows() != n || pv.cols() != c.width)
      throw UsageError("encode: instruction tokens must be n x width");
    if (mask.size() != n) throw UsageError("encode: mask size mismatch");
    x = num::prepend_rows(tape, num::add_row(tape, *prefix, bb.slot_position), body, l);
    tokens = l + 1;
    active = mask;
  }
  for (const BoundBlock& b : bb.blocks) {
    const Var h = num::layer_norm(tape, x, b.ln1_gain, b.ln1_bias);
    const Var qkv = num::linear(tape, h, b.qkv_w, b.qkv_b);
    const Var att = num::multi_head_attention(tape, qkv, n, tokens, c.heads, active);
    x = num::add(tape, x, num::linear(tape, att, b.proj_w, b.proj_b));
    const Var h2 = num::layer_norm(tape, x, b.ln2_gain, b.ln2_bias);
    const Var ff = num::relu(tape, num::linear(tape, h2, b.ff1_w, b.ff1_b));
    x = num::add(tape, x, num::linear(tape, ff, b.ff2_w, b.ff2_b));
  }
  const Var normed = num::layer_norm(tape, x, bb.final_gain, bb.final_bias);
  if (c.head == Head::kMeanPool) {
    const Var pooled = num::mean_pool(tape, normed, n, tokens, active);
    return num::linear(tape, pooled, bb.head_w, bb.head_b);
  }
  Var patches = normed;
  if (tokens != l) {
    std::vector<std::size_t> rows;
    rows.reserve(n * l);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t t = 1; t <= l; ++t) rows.push_back(i * tokens + t);
    patches = num::gather_rows(tape, normed, std::move(rows));
  }
  const Var flat = num::reshape(tape, patches, {n, l * c.width});
  return num::linear(tape, flat, bb.head_w, bb.head_b);
}

num::PrefixMask prefix_mask(const Tensor& prefix) {
  const std::size_t n = prefix.rows();
  const std::size_t d = prefix.cols();
  num::PrefixMask mask(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j)
      if (prefix[i * d + j] != 0.0) {
        mask[i] = 1;
        break;
      }
  return mask;
}

Tensor embed_history(const BackboneModel& model, std::span<const double> history) {
  if (history.size() != model.config.history)
    throw UsageError("embed_history: expected " + std::to_string(model.config.history) +
                     " values, got " + std::to_string(history.size()));
  Tape tape;
  const BoundBackbone bb = bind(tape, model);
  const Var h = tape.constant(Tensor({1, history.size()},
                                     std::vector<double>(history.begin(), history.end())));
  return tape.value(embed_tokens(tape, bb, h));
}

series::Series forward(const BackboneModel& model, const Tensor& tokens) {
  const std::size_t l = model.config.tokens();
  const std::size_t d = model.config.width;
  if (tokens.cols() != d || (tokens.rows() != l && tokens.rows() != l + 1))
    throw UsageError("forward: expected " + std::to_string(l) + " or " + std::to_string(l + 1) +
                     " tokens of width " + std::to_string(d) + ", got " +
                     num::shape_string(tokens.shape()));
  Tape tape;
  const BoundBackbone bb = bind(tape, model);
  Var out;
  if (tokens.rows() == l) {
    out = encode(tape, bb, tape.view(tokens), std::nullopt, {});
  } else {
    const auto& v = tokens.values();
    Tensor prefix({1, d}, std::vector<double>(v.begin(), v.begin() + d));
    Tensor body({l, d}, std::vector<double>(v.begin() + d, v.end()));
    const num::PrefixMask mask = prefix_mask(prefix);
    out = encode(tape, bb, tape.constant(std::move(body)), tape.constant(std::move(prefix)), mask);
  }
  const auto& y = tape.value(out).values();
  return series::Series(y.begin(), y.end());
}

namespace {

Tensor stack_rows(const std::vector<series::Series>& rows, std::span<const std::size_t> pick,
                  std::size_t width, const char* what) {
  Tensor t({pick.size(), width});
  for (std::size_t i = 0; i < pick.size(); ++i) {
    const series::Series& r = rows[pick[i]];
    if (r.size() != width)
      throw UsageError(std::string(what) + ": expected length " + std::to_string(width) +
                       ", got " + std::to_string(r.size()));
    std::copy(r.begin(), r.end(), t.data().begin() + i * width);
  }
  return t;
}

}  // namespace

std::vector<series::Series> predict(const BackboneModel& model,
                                    const std::vector<series::Series>& histories) {
  std::vector<series::Series> out;
  out.reserve(histories.size());
  constexpr std::size_t kChunk = 256;
  for (std::size_t start = 0; start < histories.size(); start += kChunk) {
    const std::size_t count = std::min(kChunk, histories.size() - start);
    std::vector<std::size_t> pick(count);
    std::iota(pick.begin(), pick.end(), start);
    Tape tape;
    const BoundBackbone bb = bind(tape, model);
    const Var h = tape.constant(stack_rows(histories, pick, model.config.history, "predict"));
    const Var y = encode(tape, bb, embed_tokens(tape, bb, h), std::nullopt, {});
    const Tensor& yv = tape.value(y);
    for (std::size_t i = 0; i < count; ++i)
      out.emplace_back(yv.data().begin() + i * model.config.horizon,
                       yv.data().begin() + (i + 1) * model.config.horizon);
  }
  return out;
}

PretrainReport pretrain(BackboneModel& model, const std::vector<series::Slice>& slices,
                        const PretrainConfig& config) {
  if (model.frozen) throw UsageError("pretrain: backbone is frozen");
  if (slices.size() < 2) throw UsageError("pretrain: need at least two slices");
  const auto t0 = std::chrono::steady_clock::now();
  const BackboneConfig& c = model.config;
  std::vector<series::Series> xs, ys;
  for (const series::Slice& s : slices) {
    if (s.raw) throw UsageError("pretrain: slices must be normalized");
    xs.push_back(s.history);
    ys.push_back(s.future);
  }
  Rng split_rng = substream(config.seed, 0);
  std::vector<std::size_t> order(slices.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), split_rng);
  const std::size_t n_val = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(config.validation_fraction * slices.size())));
  std::vector<std::size_t> val(order.end() - n_val, order.end());
  std::vector<std::size_t> train(order.begin(), order.end() - n_val);

  std::vector<Tensor*> params;
  for (auto& [name, t] : model.named_parameters()) params.push_back(t);
  num::AdamState adam(params, {.learning_rate = config.learning_rate});

  PretrainReport report;
  {
    double naive = 0.0;
    for (std::size_t i : val) {
      series::Series last(c.horizon, xs[i].back());
      naive += series::mse(last, ys[i]);
    }
    report.naive_validation_mse = naive / static_cast<double>(val.size());
  }

  Rng shuffle_rng = substream(config.seed, 1);
  std::size_t batch_index = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(train.begin(), train.end(), shuffle_rng);
    double total = 0.0;
    for (std::size_t start = 0; start < train.size(); start += config.batch) {
      const std::size_t count = std::min(config.batch, train.size() - start);
      std::span<const std::size_t> pick(train.data() + start, count);
      for (Tensor* p : params) p->zero_grad();
      Tape tape;
      const BoundBackbone bb = bind_trainable(tape, model);
      const Var h = tape.constant(stack_rows(xs, pick, c.history, "pretrain"));
      const Var y = tape.constant(stack_rows(ys, pick, c.horizon, "pretrain"));
      const Var body = embed_tokens(tape, bb, h);
      Var pred;
      if (batch_index++ % 2 == 0) {
        pred = encode(tape, bb, body, std::nullopt, {});
      } else {
        const Var zero = tape.constant(Tensor({count, c.width}));
        pred = encode(tape, bb, body, zero, num::PrefixMask(count, 0));
      }
      const Var loss = num::mse_loss(tape, pred, y);
      tape.backward(loss);
      num::adam_step(params, adam);
      total += tape.value(loss).item() * static_cast<double>(count);
    }
    report.train_loss.push_back(total / static_cast<double>(train.size()));
    const std::vector<series::Series> val_pred = [&] {
      std::vector<series::Series> hs;
      for (std::size_t i : val) hs.push_back(xs[i]);
      return predict(model, hs);
    }();
    double vl = 0.0;
    for (std::size_t i = 0; i < val.size(); ++i) vl += series::mse(val_pred[i], ys[val[i]]);
    report.validation_loss.push_back(vl / static_cast<double>(val.size()));
    spdlog::info("backbone epoch {}: train {:.6f} val {:.6f} (naive {:.6f})", epoch,
                 report.train_loss.back(), report.validation_loss.back(),
                 report.naive_validation_mse);
  }
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

void freeze(BackboneModel& model) {
  for (auto& [name, t] : model.named_parameters()) t->set_requires_grad(false);
  model.frozen = true;
}

}  // namespace chronosteer::backbone
