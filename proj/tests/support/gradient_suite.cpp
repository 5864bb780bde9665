// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>

#include "checks.hpp"
#include "chronosteer/backbone.hpp"
#include "chronosteer/numerics/nn_ops.hpp"
#include "chronosteer/numerics/ops.hpp"
#include "chronosteer/random.hpp"
#include "chronosteer/steering.hpp"
#include "chronosteer/training.hpp"

namespace chronosteer::checks {

namespace {

using num::Shape;
using num::Tape;
using num::Tensor;
using num::Var;

constexpr std::size_t kMaxProbesPerTensor = 48;

Tensor random_tensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = uniform(rng, lo, hi);
  return t;
}

// Values bounded away from zero so relu kinks stay out of reach of the step.
Tensor away_from_zero(Rng& rng, Shape shape) {
  Tensor t = random_tensor(rng, std::move(shape), 0.05, 1.0);
  for (double& v : t.data())
    if (uniform(rng, 0.0, 1.0) < 0.5) v = -v;
  return t;
}

using Loss = std::function<Var(Tape&, const std::vector<Var>&)>;

// Reduces a node to a scalar with fixed random weights.
class Weighted {
 public:
  explicit Weighted(std::uint64_t seed) : seed_(seed) {}
  Var operator()(Tape& tape, Var out) {
    const Tensor& v = tape.value(out);
    if (v.size() == 1) return num::sum(tape, out);
    if (!weights_ || weights_->shape() != v.shape()) {
      Rng rng = substream(seed_, 77);
      weights_ = random_tensor(rng, v.shape());
    }
    return num::sum(tape, num::mul(tape, out, tape.constant(*weights_)));
  }

 private:
  std::uint64_t seed_;
  std::optional<Tensor> weights_;
};

GradientResult fd_check(std::string name, std::vector<Tensor*> params, const Loss& loss,
                        std::uint64_t seed) {
  GradientResult r{std::move(name), 0.0, 0};
  auto bind = [&](Tape& tape) {
    std::vector<Var> vars;
    for (Tensor* p : params) vars.push_back(tape.param(*p));
    return vars;
  };
  for (Tensor* p : params) {
    p->set_requires_grad(true);
    p->zero_grad();
  }
  {
    Tape tape;
    const std::vector<Var> vars = bind(tape);
    tape.backward(loss(tape, vars));
  }
  auto value = [&] {
    Tape tape;
    return tape.value(loss(tape, bind(tape))).item();
  };
  Rng pick = substream(seed, 91);
  const double h = kFiniteDifferenceStep;
  for (Tensor* p : params) {
    const std::vector<double> analytic(p->grad().begin(), p->grad().end());
    std::vector<std::size_t> idx(p->size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    if (idx.size() > kMaxProbesPerTensor) {
      std::shuffle(idx.begin(), idx.end(), pick);
      idx.resize(kMaxProbesPerTensor);
    }
    for (std::size_t i : idx) {
      const double saved = (*p)[i];
      (*p)[i] = saved + h;
      const double up = value();
      (*p)[i] = saved - h;
      const double down = value();
      (*p)[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double denom = std::max({1.0, std::abs(analytic[i]), std::abs(numeric)});
      r.max_rel_error = std::max(r.max_rel_error, std::abs(analytic[i] - numeric) / denom);
      ++r.checked;
    }
  }
  return r;
}

// Tensors owned by one check; pointers stay stable.
struct Inputs {
  std::vector<std::unique_ptr<Tensor>> owned;
  Tensor* add(Tensor t) {
    owned.push_back(std::make_unique<Tensor>(std::move(t)));
    return owned.back().get();
  }
  std::vector<Tensor*> all() const {
    std::vector<Tensor*> out;
    for (const auto& t : owned) out.push_back(t.get());
    return out;
  }
};

GradientResult op_check(const std::string& name, std::vector<Tensor> inputs,
                        std::function<Var(Tape&, const std::vector<Var>&)> op, std::uint64_t seed) {
  Inputs in;
  for (Tensor& t : inputs) in.add(std::move(t));
  auto weighted = std::make_shared<Weighted>(seed);
  return fd_check(
      name, in.all(),
      [&](Tape& tape, const std::vector<Var>& v) { return (*weighted)(tape, op(tape, v)); }, seed);
}

backbone::BackboneConfig tiny_backbone(backbone::Head head, std::uint64_t seed) {
  backbone::BackboneConfig c;
  c.history = 8;
  c.horizon = 4;
  c.patch = 4;
  c.width = 8;
  c.depth = 2;
  c.heads = 2;
  c.ffn = 8;
  c.head = head;
  c.seed = seed;
  return c;
}

}  // namespace

std::vector<GradientResult> gradient_suite(std::uint64_t seed) {
  std::vector<GradientResult> out;
  Rng rng = substream(seed, 1);
  auto r = [&](Shape s) { return random_tensor(rng, std::move(s)); };
  const std::size_t m = 3, k = 4, n = 5;

  out.push_back(op_check("matmul", {r({m, k}), r({k, n})},
                         [](Tape& t, const auto& v) { return num::matmul(t, v[0], v[1]); }, seed));
  out.push_back(op_check("add", {r({m, n}), r({m, n})},
                         [](Tape& t, const auto& v) { return num::add(t, v[0], v[1]); }, seed));
  out.push_back(op_check("add_scalar_broadcast", {r({m, n}), r({1})},
                         [](Tape& t, const auto& v) { return num::add(t, v[0], v[1]); }, seed));
  out.push_back(op_check("sub", {r({m, n}), r({m, n})},
                         [](Tape& t, const auto& v) { return num::sub(t, v[0], v[1]); }, seed));
  out.push_back(op_check("mul", {r({m, n}), r({m, n})},
                         [](Tape& t, const auto& v) { return num::mul(t, v[0], v[1]); }, seed));
  out.push_back(op_check("mul_scalar_broadcast", {r({1}), r({m, n})},
                         [](Tape& t, const auto& v) { return num::mul(t, v[0], v[1]); }, seed));
  out.push_back(op_check("scale", {r({m, n})},
                         [](Tape& t, const auto& v) { return num::scale(t, v[0], -1.7); }, seed));
  out.push_back(op_check("relu", {away_from_zero(rng, {m, n})},
                         [](Tape& t, const auto& v) { return num::relu(t, v[0]); }, seed));
  out.push_back(op_check("tanh", {r({m, n})},
                         [](Tape& t, const auto& v) { return num::tanh(t, v[0]); }, seed));
  out.push_back(op_check("exp", {r({m, n})},
                         [](Tape& t, const auto& v) { return num::exp(t, v[0]); }, seed));
  out.push_back(op_check("log", {random_tensor(rng, {m, n}, 0.2, 2.0)},
                         [](Tape& t, const auto& v) { return num::log(t, v[0]); }, seed));
  out.push_back(op_check("elementwise_dispatch", {r({m, n}), r({m, n})},
                         [](Tape& t, const auto& v) {
                           const Var args[] = {v[0], v[1]};
                           return num::elementwise(t, num::ElementwiseOp::kMul, args);
                         },
                         seed));
  out.push_back(op_check("softmax_row", {r({m, n})},
                         [](Tape& t, const auto& v) { return num::softmax_row(t, v[0]); }, seed));
  out.push_back(op_check("log_softmax_row", {r({m, n})},
                         [](Tape& t, const auto& v) { return num::log_softmax_row(t, v[0]); }, seed));
  out.push_back(op_check("sum", {r({m, n})},
                         [](Tape& t, const auto& v) { return num::sum(t, v[0]); }, seed));
  out.push_back(op_check("mean", {r({m, n})},
                         [](Tape& t, const auto& v) { return num::mean(t, v[0]); }, seed));
  out.push_back(op_check("mse_loss", {r({m, n}), r({m, n})},
                         [](Tape& t, const auto& v) { return num::mse_loss(t, v[0], v[1]); }, seed));
  out.push_back(op_check("reshape", {r({m, n})},
                         [](Tape& t, const auto& v) { return num::reshape(t, v[0], {n, m}); }, seed));
  out.push_back(op_check("transpose", {r({m, n})},
                         [](Tape& t, const auto& v) { return num::transpose(t, v[0]); }, seed));
  out.push_back(op_check("gather_rows", {r({4, n})},
                         [](Tape& t, const auto& v) {
                           return num::gather_rows(t, v[0], {2, 0, 2, 3});
                         },
                         seed));
  out.push_back(op_check("trace", {r({n, n})},
                         [](Tape& t, const auto& v) { return num::trace(t, v[0]); }, seed));
  out.push_back(op_check("diagonal_mean", {r({n, n})},
                         [](Tape& t, const auto& v) { return num::diagonal_mean(t, v[0]); }, seed));
  out.push_back(op_check("linear", {r({m, k}), r({k, n}), r({1, n})},
                         [](Tape& t, const auto& v) { return num::linear(t, v[0], v[1], v[2]); },
                         seed));
  out.push_back(op_check("add_row", {r({m, n}), r({1, n})},
                         [](Tape& t, const auto& v) { return num::add_row(t, v[0], v[1]); }, seed));
  out.push_back(op_check("layer_norm", {r({m, n}), r({1, n}), r({1, n})},
                         [](Tape& t, const auto& v) {
                           return num::layer_norm(t, v[0], v[1], v[2]);
                         },
                         seed));
  out.push_back(op_check("row_normalize", {random_tensor(rng, {m, n}, 0.1, 1.0)},
                         [](Tape& t, const auto& v) { return num::row_normalize(t, v[0]); }, seed));

  // Two sequences of three tokens, width 4, two heads.
  const std::size_t seqs = 2, tokens = 3, width = 4;
  out.push_back(op_check("multi_head_attention", {r({seqs * tokens, 3 * width})},
                         [=](Tape& t, const auto& v) {
                           return num::multi_head_attention(t, v[0], seqs, tokens, 2, {});
                         },
                         seed));
  out.push_back(op_check("multi_head_attention_masked_prefix", {r({seqs * tokens, 3 * width})},
                         [=](Tape& t, const auto& v) {
                           return num::multi_head_attention(t, v[0], seqs, tokens, 2, {0, 1});
                         },
                         seed));
  out.push_back(op_check("mean_pool", {r({seqs * tokens, width})},
                         [=](Tape& t, const auto& v) {
                           return num::mean_pool(t, v[0], seqs, tokens, {1, 0});
                         },
                         seed));
  out.push_back(op_check("prepend_rows", {r({seqs, width}), r({seqs * tokens, width})},
                         [=](Tape& t, const auto& v) {
                           return num::prepend_rows(t, v[0], v[1], tokens);
                         },
                         seed));

  out.push_back(op_check("sum_of_squared_product", {r({m, k}), r({k, n})},
                         [](Tape& t, const auto& v) {
                           const Var xw = num::matmul(t, v[0], v[1]);
                           return num::sum(t, num::mul(t, xw, xw));
                         },
                         seed));

  const std::size_t sets = 9, p = 6;
  out.push_back(op_check("contrastive_loss", {r({sets, p}), r({sets, p})},
                         [](Tape& t, const auto& v) {
                           return training::contrastive_loss(t, v[0], v[1]);
                         },
                         seed));
  out.push_back(op_check("composite_loss", {r({sets, p}), r({sets, p})},
                         [](Tape& t, const auto& v) {
                           return training::composite_loss(t, v[0], v[1], 0.5);
                         },
                         seed));
  out.push_back(op_check("composite_loss_n3_p4", {r({3, 4}), r({3, 4})},
                         [](Tape& t, const auto& v) {
                           return training::composite_loss(t, v[0], v[1], 1e-3);
                         },
                         seed));
  out.push_back(op_check("grouped_composite_loss", {r({2 * sets, p}), r({2 * sets, p})},
                         [=](Tape& t, const auto& v) {
                           return training::grouped_composite_loss(t, v[0], v[1], sets, 0.3);
                         },
                         seed));

  // Whole backbone, both heads, with and without a present instruction token.
  for (backbone::Head head : {backbone::Head::kMeanPool, backbone::Head::kFlatten}) {
    backbone::BackboneModel model = backbone::BackboneModel::initialize(tiny_backbone(head, seed));
    std::vector<Tensor*> params;
    for (auto& [name, t] : model.named_parameters()) params.push_back(t);
    const Tensor hist = r({2, 8});
    const Tensor prefix = r({2, 8});
    auto weighted = std::make_shared<Weighted>(seed);
    out.push_back(fd_check(
        "backbone_" + std::string(backbone::head_name(head)), params,
        [&](Tape& t, const std::vector<Var>&) {
          const backbone::BoundBackbone bb = backbone::bind_trainable(t, model);
          const Var body = backbone::embed_tokens(t, bb, t.view(hist));
          const Var pred = backbone::encode(t, bb, body, t.view(prefix), {1, 0});
          return (*weighted)(t, pred);
        },
        seed));
  }

  // Mapper parameters through a frozen backbone under the stage-1 objective.
  {
    backbone::BackboneModel model =
        backbone::BackboneModel::initialize(tiny_backbone(backbone::Head::kFlatten, seed));
    backbone::freeze(model);
    steering::MapperConfig mc;
    mc.text_dim = 6;
    mc.hidden = 5;
    mc.series_dim = 8;
    mc.seed = seed;
    steering::AlignmentMapper mapper = steering::AlignmentMapper::initialize(mc);
    const Tensor hist = r({2, 8});
    const Tensor emb = r({3, 6});
    const Tensor target = r({6, 4});
    out.push_back(fd_check(
        "steered_composite_loss", mapper.parameters(),
        [&](Tape& t, const std::vector<Var>&) {
          const backbone::BoundBackbone bb = backbone::bind(t, model);
          const steering::BoundMapper bm = steering::bind_trainable(t, mapper);
          const Var pred = steering::steered_graph(t, bb, bm, t.view(hist), t.view(emb));
          return training::grouped_composite_loss(t, pred, t.view(target), 3, 0.5);
        },
        seed));
  }
  return out;
}

}  // namespace chronosteer::checks
