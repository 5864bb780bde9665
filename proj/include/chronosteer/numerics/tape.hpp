// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "chronosteer/numerics/tensor.hpp"

namespace chronosteer::num {

class Tape;

// Handle to a node on a Tape. Cheap to copy; only meaningful for the tape
// that created it.
struct Var {
  static constexpr std::uint32_t kInvalid = std::numeric_limits<std::uint32_t>::max();
  std::uint32_t id = kInvalid;
  bool valid() const { return id != kInvalid; }
};

// Records forward operations in creation order, which is a topological order
// of the graph; backward() replays it in reverse.
//
// A tape is confined to one thread. Parameters bound with param() are never
// copied: their gradients accumulate straight into Tensor::grad(), so two
// backward() calls without zeroing produce twice the gradient.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, Var self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf holding its own copy. Never receives gradient.
  Var constant(Tensor value);
  // Read-only leaf aliasing an external tensor, which must outlive the tape.
  Var view(const Tensor& tensor);
  // Leaf aliasing a trainable tensor; gradient flows iff tensor.requires_grad().
  Var param(Tensor& tensor);

  // For op implementations: append a result node. Any non-finite value in
  // `value` raises DomainError naming `op`.
  Var record(std::string_view op, Tensor value, std::initializer_list<Var> parents,
             BackwardFn backward);

  const Tensor& value(Var v) const;
  const Shape& shape(Var v) const { return value(v).shape(); }
  bool requires_grad(Var v) const;
  // Gradient buffer of a node; valid during and after backward() for nodes
  // that require grad.
  std::span<double> grad(Var v);
  std::span<const double> grad(Var v) const;

  // Populates gradients of every grad-requiring node reachable from `loss`,
  // which must hold exactly one element.
  void backward(Var loss);

  void clear();
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    std::unique_ptr<Tensor> owned;
    const Tensor* value = nullptr;
    Tensor* external = nullptr;
    std::vector<double> grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  Node& node(Var v);
  const Node& node(Var v) const;

  std::vector<Node> nodes_;
};

}  // namespace chronosteer::num
