// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "chronosteer/numerics/tape.hpp"

// Differentiable primitives recorded on a Tape. Binary elementwise ops accept
// operands of identical shape, or one operand with a single element that is
// broadcast as a scalar. Nothing else broadcasts.
namespace chronosteer::num {

// (m x k) * (k x n). Rank-1 operands are read as one row.
Var matmul(Tape& tape, Var a, Var b);

Var add(Tape& tape, Var a, Var b);
Var sub(Tape& tape, Var a, Var b);
Var mul(Tape& tape, Var a, Var b);
Var scale(Tape& tape, Var a, double factor);
Var relu(Tape& tape, Var a);
Var tanh(Tape& tape, Var a);
Var exp(Tape& tape, Var a);
// DomainError on any value <= 0.
Var log(Tape& tape, Var a);

enum class ElementwiseOp { kAdd, kSub, kMul, kRelu, kTanh, kExp, kLog, kScale };
// Uniform entry point over the ops above. `factor` is used by kScale only.
Var elementwise(Tape& tape, ElementwiseOp op, std::span<const Var> args, double factor = 1.0);

// Softmax over the last dimension, with max subtraction.
Var softmax_row(Tape& tape, Var a);
Var log_softmax_row(Tape& tape, Var a);

Var sum(Tape& tape, Var a);
Var mean(Tape& tape, Var a);
// mean((a - b)^2)
Var mse_loss(Tape& tape, Var a, Var b);

Var reshape(Tape& tape, Var a, Shape shape);
Var transpose(Tape& tape, Var a);
// Selects rows of a matrix; backward scatters and adds.
Var gather_rows(Tape& tape, Var a, std::vector<std::size_t> rows);
// Sum of the diagonal of a square matrix.
Var trace(Tape& tape, Var a);
// Mean of the diagonal, taken as d0 + sum(d_i - d0) / n so that a constant
// diagonal yields its value exactly.
Var diagonal_mean(Tape& tape, Var a);

}  // namespace chronosteer::num
