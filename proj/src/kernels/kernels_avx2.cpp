// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0
//
// Compiled with -mavx2 -mfma. Nothing here may run before dispatch.cpp has
// confirmed CPU support.

#include <immintrin.h>

#include <cmath>

#include "kernels_internal.hpp"

namespace chronosteer::kernels {
namespace {

// Register block of 4 rows x 8 columns. A(i, p) lives at a[i * rs + p * cs],
// which covers both the plain and the transposed-A layouts.
template <bool kTransA>
void gemm_avx2(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
               double* c) {
  const std::size_t rs = kTransA ? 1 : k;
  const std::size_t cs = kTransA ? m : 1;
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    double* c0 = c + (i + 0) * n;
    double* c1 = c + (i + 1) * n;
    double* c2 = c + (i + 2) * n;
    double* c3 = c + (i + 3) * n;
    const double* a0 = a + (i + 0) * rs;
    const double* a1 = a + (i + 1) * rs;
    const double* a2 = a + (i + 2) * rs;
    const double* a3 = a + (i + 3) * rs;
    std::size_t j = 0;
    for (; j + 8 <= n; j += 8) {
      __m256d r00 = _mm256_loadu_pd(c0 + j), r01 = _mm256_loadu_pd(c0 + j + 4);
      __m256d r10 = _mm256_loadu_pd(c1 + j), r11 = _mm256_loadu_pd(c1 + j + 4);
      __m256d r20 = _mm256_loadu_pd(c2 + j), r21 = _mm256_loadu_pd(c2 + j + 4);
      __m256d r30 = _mm256_loadu_pd(c3 + j), r31 = _mm256_loadu_pd(c3 + j + 4);
      const double* bp = b + j;
      for (std::size_t p = 0; p < k; ++p, bp += n) {
        const __m256d b0 = _mm256_loadu_pd(bp);
        const __m256d b1 = _mm256_loadu_pd(bp + 4);
        const std::size_t off = p * cs;
        __m256d av = _mm256_broadcast_sd(a0 + off);
        r00 = _mm256_fmadd_pd(av, b0, r00);
        r01 = _mm256_fmadd_pd(av, b1, r01);
        av = _mm256_broadcast_sd(a1 + off);
        r10 = _mm256_fmadd_pd(av, b0, r10);
        r11 = _mm256_fmadd_pd(av, b1, r11);
        av = _mm256_broadcast_sd(a2 + off);
        r20 = _mm256_fmadd_pd(av, b0, r20);
        r21 = _mm256_fmadd_pd(av, b1, r21);
        av = _mm256_broadcast_sd(a3 + off);
        r30 = _mm256_fmadd_pd(av, b0, r30);
        r31 = _mm256_fmadd_pd(av, b1, r31);
      }
      _mm256_storeu_pd(c0 + j, r00);
      _mm256_storeu_pd(c0 + j + 4, r01);
      _mm256_storeu_pd(c1 + j, r10);
      _mm256_storeu_pd(c1 + j + 4, r11);
      _mm256_storeu_pd(c2 + j, r20);
      _mm256_storeu_pd(c2 + j + 4, r21);
      _mm256_storeu_pd(c3 + j, r30);
      _mm256_storeu_pd(c3 + j + 4, r31);
    }
    for (; j + 4 <= n; j += 4) {
      __m256d r0 = _mm256_loadu_pd(c0 + j), r1 = _mm256_loadu_pd(c1 + j);
      __m256d r2 = _mm256_loadu_pd(c2 + j), r3 = _mm256_loadu_pd(c3 + j);
      const double* bp = b + j;
      for (std::size_t p = 0; p < k; ++p, bp += n) {
        const __m256d bv = _mm256_loadu_pd(bp);
        const std::size_t off = p * cs;
        r0 = _mm256_fmadd_pd(_mm256_broadcast_sd(a0 + off), bv, r0);
        r1 = _mm256_fmadd_pd(_mm256_broadcast_sd(a1 + off), bv, r1);
        r2 = _mm256_fmadd_pd(_mm256_broadcast_sd(a2 + off), bv, r2);
        r3 = _mm256_fmadd_pd(_mm256_broadcast_sd(a3 + off), bv, r3);
      }
      _mm256_storeu_pd(c0 + j, r0);
      _mm256_storeu_pd(c1 + j, r1);
      _mm256_storeu_pd(c2 + j, r2);
      _mm256_storeu_pd(c3 + j, r3);
    }
    for (; j < n; ++j) {
      double* rows[4] = {c0, c1, c2, c3};
      const double* arows[4] = {a0, a1, a2, a3};
      for (int r = 0; r < 4; ++r) {
        double acc = rows[r][j];
        for (std::size_t p = 0; p < k; ++p) acc = std::fma(arows[r][p * cs], b[p * n + j], acc);
        rows[r][j] = acc;
      }
    }
  }
  for (; i < m; ++i) {
    double* crow = c + i * n;
    const double* arow = a + i * rs;
    std::size_t j = 0;
    for (; j + 8 <= n; j += 8) {
      __m256d r0 = _mm256_loadu_pd(crow + j), r1 = _mm256_loadu_pd(crow + j + 4);
      const double* bp = b + j;
      for (std::size_t p = 0; p < k; ++p, bp += n) {
        const __m256d av = _mm256_broadcast_sd(arow + p * cs);
        r0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bp), r0);
        r1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bp + 4), r1);
      }
      _mm256_storeu_pd(crow + j, r0);
      _mm256_storeu_pd(crow + j + 4, r1);
    }
    for (; j + 4 <= n; j += 4) {
      __m256d r0 = _mm256_loadu_pd(crow + j);
      const double* bp = b + j;
      for (std::size_t p = 0; p < k; ++p, bp += n)
        r0 = _mm256_fmadd_pd(_mm256_broadcast_sd(arow + p * cs), _mm256_loadu_pd(bp), r0);
      _mm256_storeu_pd(crow + j, r0);
    }
    for (; j < n; ++j) {
      double acc = crow[j];
      for (std::size_t p = 0; p < k; ++p) acc = std::fma(arow[p * cs], b[p * n + j], acc);
      crow[j] = acc;
    }
  }
}

void gemm_nn_avx2(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                  double* c) {
  gemm_avx2<false>(m, n, k, a, b, c);
}

void gemm_tn_avx2(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                  double* c) {
  gemm_avx2<true>(m, n, k, a, b, c);
}

double horizontal(__m256d v) {
  alignas(32) double lane[4];
  _mm256_store_pd(lane, v);
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

double squared_distance_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  const std::size_t n4 = n - n % 4;
  for (std::size_t i = 0; i < n4; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double total = horizontal(acc);
  for (std::size_t i = n4; i < n; ++i) {
    const double d = a[i] - b[i];
    total = std::fma(d, d, total);
  }
  return total;
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  const std::size_t n4 = n - n % 4;
  for (std::size_t i = 0; i < n4; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  double total = horizontal(acc);
  for (std::size_t i = n4; i < n; ++i) total = std::fma(a[i], b[i], total);
  return total;
}

}  // namespace

namespace detail {

const KernelTable& avx2_table_unchecked() {
  static const KernelTable table{gemm_nn_avx2, gemm_tn_avx2, squared_distance_avx2, dot_avx2,
                                 Isa::kAvx2};
  return table;
}

}  // namespace detail
}  // namespace chronosteer::kernels
