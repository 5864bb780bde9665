// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "chronosteer/numerics/tape.hpp"

// Fused network layers. Sequence batches are stored as a stacked matrix of
// (sequences * tokens) rows, sequence-major.
namespace chronosteer::num {

// x (m x k) * w (k x n) + bias, with bias holding n values.
Var linear(Tape& tape, Var x, Var w, Var bias);

// Adds a (1 x n) row to every row of x (m x n).
Var add_row(Tape& tape, Var x, Var row);

// Per-row normalization to zero mean, unit variance, then gain and bias.
Var layer_norm(Tape& tape, Var x, Var gain, Var bias, double eps = 1e-5);

// Scales every row to unit L2 norm. DomainError on a zero row.
Var row_normalize(Tape& tape, Var x);

// Per-sequence marker for the optional leading token. When a sequence's
// entry is 0, its first token is treated as absent: no query attends to it
// and pooling skips it. An empty vector means every token is present.
using PrefixMask = std::vector<std::uint8_t>;

// Multi-head self-attention without causal masking. `qkv` is
// (sequences * tokens) x (3 * width) holding [Q | K | V] per row; the result
// is (sequences * tokens) x width, heads concatenated.
Var multi_head_attention(Tape& tape, Var qkv, std::size_t sequences, std::size_t tokens,
                         std::size_t heads, const PrefixMask& prefix);

// Mean over the present tokens of each sequence: (sequences * tokens) x d
// to sequences x d.
Var mean_pool(Tape& tape, Var x, std::size_t sequences, std::size_t tokens,
              const PrefixMask& prefix);

// Places one prefix row (sequences x d) ahead of each sequence's body
// ((sequences * body_tokens) x d).
Var prepend_rows(Tape& tape, Var prefix, Var body, std::size_t body_tokens);

}  // namespace chronosteer::num
