// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string_view>

// Dense double-precision inner loops. Every routine exists as a scalar
// reference and, where the host supports it, an AVX2+FMA variant. Both
// variants accumulate in the same order with fused multiply-adds, so their
// results are bit-identical; tests/kernels_test.cpp enforces that.
namespace chronosteer::kernels {

enum class Isa { kScalar, kAvx2 };

struct KernelTable {
  // C(m x n) += A(m x k) * B(k x n), all row-major and contiguous.
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c);
  // C(m x n) += A^T * B where A is stored k x m and B is k x n.
  void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c);
  // sum_i (a_i - b_i)^2
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
  // sum_i a_i * b_i
  double (*dot)(const double* a, const double* b, std::size_t n);
  Isa isa;
};

const KernelTable& scalar_table();
// Nullptr when the running CPU (or build) lacks the instruction set.
const KernelTable* avx2_table();

bool isa_supported(Isa isa);
const KernelTable& table(Isa isa);

// The table every caller should use. Picks the widest supported ISA unless
// CHRONOSTEER_SIMD=scalar is set in the environment at first use.
const KernelTable& active();

std::string_view isa_name(Isa isa);

}  // namespace chronosteer::kernels
