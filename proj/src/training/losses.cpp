// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#include <numeric>

#include "chronosteer/errors.hpp"
#include "chronosteer/numerics/nn_ops.hpp"
#include "chronosteer/numerics/ops.hpp"
#include "chronosteer/training.hpp"

namespace chronosteer::training {

using num::Tape;
using num::Var;

Var contrastive_loss(Tape& tape, Var pred, Var target) {
  const num::Tensor& p = tape.value(pred);
  const num::Tensor& t = tape.value(target);
  if (p.rows() != t.rows() || p.cols() != t.cols())
    throw DimensionError("contrastive_loss: sets differ in shape");
  const Var sim = num::matmul(tape, num::row_normalize(tape, pred),
                              num::transpose(tape, num::row_normalize(tape, target)));
  const Var forward = num::diagonal_mean(tape, num::log_softmax_row(tape, sim));
  const Var backward = num::diagonal_mean(tape, num::log_softmax_row(tape, num::transpose(tape, sim)));
  return num::scale(tape, num::add(tape, forward, backward), -0.5);
}

Var composite_loss(Tape& tape, Var pred, Var target, double alpha) {
  return grouped_composite_loss(tape, pred, target, tape.value(pred).rows(), alpha);
}

Var grouped_composite_loss(Tape& tape, Var pred, Var target, std::size_t set_size, double alpha) {
  if (alpha < 0.0) throw UsageError("composite_loss: alpha must be non-negative");
  const std::size_t rows = tape.value(pred).rows();
  if (set_size == 0 || rows % set_size != 0)
    throw DimensionError("composite_loss: rows are not a whole number of sets");
  const Var mse = num::mse_loss(tape, pred, target);
  if (alpha == 0.0) return mse;
  const std::size_t groups = rows / set_size;
  Var total;
  for (std::size_t g = 0; g < groups; ++g) {
    std::vector<std::size_t> idx(set_size);
    std::iota(idx.begin(), idx.end(), g * set_size);
    const Var c = contrastive_loss(tape, num::gather_rows(tape, pred, idx),
                                   num::gather_rows(tape, target, idx));
    total = total.valid() ? num::add(tape, total, c) : c;
  }
  return num::add(tape, mse, num::scale(tape, total, alpha / static_cast<double>(groups)));
}

double contrastive_value(const num::Tensor& pred, const num::Tensor& target) {
  Tape tape;
  return tape.value(contrastive_loss(tape, tape.view(pred), tape.view(target))).item();
}

double composite_value(const num::Tensor& pred, const num::Tensor& target, double alpha) {
  Tape tape;
  return tape.value(composite_loss(tape, tape.view(pred), tape.view(target), alpha)).item();
}

}  // namespace chronosteer::training
