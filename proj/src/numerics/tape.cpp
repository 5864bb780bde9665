// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#include "chronosteer/numerics/tape.hpp"

#include <algorithm>
#include <string>

#include "chronosteer/errors.hpp"

namespace chronosteer::num {

Var Tape::constant(Tensor value) {
  Node n;
  n.owned = std::make_unique<Tensor>(std::move(value));
  n.owned->set_requires_grad(false);
  n.value = n.owned.get();
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::view(const Tensor& tensor) {
  Node n;
  n.value = &tensor;
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::param(Tensor& tensor) {
  Node n;
  n.value = &tensor;
  if (tensor.requires_grad()) {
    n.external = &tensor;
    n.requires_grad = true;
  }
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::record(std::string_view op, Tensor value, std::initializer_list<Var> parents,
                 BackwardFn backward) {
  if (!value.all_finite())
    throw DomainError("non-finite value produced by " + std::string(op));
  Node n;
  n.owned = std::make_unique<Tensor>(std::move(value));
  n.value = n.owned.get();
  n.requires_grad = std::any_of(parents.begin(), parents.end(),
                                [this](Var p) { return node(p).requires_grad; });
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Tape::Node& Tape::node(Var v) {
  if (v.id >= nodes_.size()) throw UsageError("variable does not belong to this tape");
  return nodes_[v.id];
}

const Tape::Node& Tape::node(Var v) const {
  if (v.id >= nodes_.size()) throw UsageError("variable does not belong to this tape");
  return nodes_[v.id];
}

const Tensor& Tape::value(Var v) const { return *node(v).value; }

bool Tape::requires_grad(Var v) const { return node(v).requires_grad; }

std::span<double> Tape::grad(Var v) {
  Node& n = node(v);
  if (!n.requires_grad) throw UsageError("variable does not require grad");
  if (n.external != nullptr) return n.external->grad();
  return n.grad;
}

std::span<const double> Tape::grad(Var v) const {
  const Node& n = node(v);
  if (!n.requires_grad) throw UsageError("variable does not require grad");
  if (n.external != nullptr) return std::as_const(*n.external).grad();
  return n.grad;
}

void Tape::backward(Var loss) {
  Node& root = node(loss);
  if (root.value->size() != 1) throw UsageError("backward() needs a scalar loss");
  if (!root.requires_grad) return;
  for (std::size_t i = 0; i <= loss.id; ++i) {
    Node& n = nodes_[i];
    if (n.requires_grad && n.external == nullptr) n.grad.assign(n.value->size(), 0.0);
  }
  grad(loss)[0] += 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.requires_grad && n.backward) n.backward(*this, Var{static_cast<std::uint32_t>(i)});
  }
}

void Tape::clear() { nodes_.clear(); }

}  // namespace chronosteer::num
