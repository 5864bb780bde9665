// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#include "chronosteer/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "chronosteer/errors.hpp"
#include "chronosteer/kernels.hpp"

namespace chronosteer::num {
namespace {

struct MatDims {
  std::size_t rows;
  std::size_t cols;
};

MatDims mat_dims(const Tensor& t) {
  if (t.rank() > 2) throw DimensionError("expected rank <= 2, got " + shape_string(t.shape()));
  return {t.rows(), t.cols()};
}

Shape matrix_shape(std::size_t rows, std::size_t cols) { return {rows, cols}; }

// Result shape of a binary elementwise op, or DimensionError.
Shape binary_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return a.shape();
  if (b.size() == 1) return a.shape();
  if (a.size() == 1) return b.shape();
  throw DimensionError(std::string(op) + ": shapes " + shape_string(a.shape()) + " and " +
                       shape_string(b.shape()) + " are neither equal nor scalar");
}

// Operand value at flat output index i under scalar broadcast.
inline double at_b(const Tensor& t, std::size_t i) { return t.size() == 1 ? t[0] : t[i]; }

// Adds `g` (output-sized) into an operand gradient, reducing when the operand
// was broadcast.
void accumulate(std::span<double> dst, std::span<const double> g, double sign = 1.0) {
  if (dst.size() == g.size()) {
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += sign * g[i];
  } else {
    double total = 0.0;
    for (double v : g) total += v;
    dst[0] += sign * total;
  }
}

template <typename Fn>
Tensor map_unary(const Tensor& x, Fn fn) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = fn(x[i]);
  return out;
}

}  // namespace

Var matmul(Tape& tape, Var a, Var b) {
  const Tensor& av = tape.value(a);
  const Tensor& bv = tape.value(b);
  const auto [m, k] = mat_dims(av);
  const auto [k2, n] = mat_dims(bv);
  if (k != k2)
    throw DimensionError("matmul: inner dimensions differ (" + shape_string(av.shape()) + " x " +
                         shape_string(bv.shape()) + ")");
  Tensor out(matrix_shape(m, n));
  kernels::active().gemm_nn(m, n, k, av.data().data(), bv.data().data(), out.data().data());
  return tape.record("matmul", std::move(out), {a, b}, [a, b, m, n, k](Tape& t, Var self) {
    const auto& kt = kernels::active();
    std::span<const double> g = t.grad(self);
    if (t.requires_grad(a)) {
      // dA += dC * B^T
      const Tensor& bv = t.value(b);
      std::vector<double> bt(n * k);
      for (std::size_t p = 0; p < k; ++p)
        for (std::size_t j = 0; j < n; ++j) bt[j * k + p] = bv[p * n + j];
      kt.gemm_nn(m, k, n, g.data(), bt.data(), t.grad(a).data());
    }
    if (t.requires_grad(b)) {
      // dB += A^T * dC
      kt.gemm_tn(k, n, m, t.value(a).data().data(), g.data(), t.grad(b).data());
    }
  });
}

Var add(Tape& tape, Var a, Var b) {
  const Tensor& av = tape.value(a);
  const Tensor& bv = tape.value(b);
  Tensor out(binary_shape(av, bv, "add"));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = at_b(av, i) + at_b(bv, i);
  return tape.record("add", std::move(out), {a, b}, [a, b](Tape& t, Var self) {
    std::span<const double> g = t.grad(self);
    if (t.requires_grad(a)) accumulate(t.grad(a), g);
    if (t.requires_grad(b)) accumulate(t.grad(b), g);
  });
}

Var sub(Tape& tape, Var a, Var b) {
  const Tensor& av = tape.value(a);
  const Tensor& bv = tape.value(b);
  Tensor out(binary_shape(av, bv, "sub"));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = at_b(av, i) - at_b(bv, i);
  return tape.record("sub", std::move(out), {a, b}, [a, b](Tape& t, Var self) {
    std::span<const double> g = t.grad(self);
    if (t.requires_grad(a)) accumulate(t.grad(a), g);
    if (t.requires_grad(b)) accumulate(t.grad(b), g, -1.0);
  });
}

Var mul(Tape& tape, Var a, Var b) {
  const Tensor& av = tape.value(a);
  const Tensor& bv = tape.value(b);
  Tensor out(binary_shape(av, bv, "mul"));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = at_b(av, i) * at_b(bv, i);
  return tape.record("mul", std::move(out), {a, b}, [a, b](Tape& t, Var self) {
    std::span<const double> g = t.grad(self);
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    std::vector<double> tmp(g.size());
    if (t.requires_grad(a)) {
      for (std::size_t i = 0; i < g.size(); ++i) tmp[i] = g[i] * at_b(bv, i);
      accumulate(t.grad(a), tmp);
    }
    if (t.requires_grad(b)) {
      for (std::size_t i = 0; i < g.size(); ++i) tmp[i] = g[i] * at_b(av, i);
      accumulate(t.grad(b), tmp);
    }
  });
}

Var scale(Tape& tape, Var a, double factor) {
  Tensor out = map_unary(tape.value(a), [factor](double x) { return x * factor; });
  return tape.record("scale", std::move(out), {a}, [a, factor](Tape& t, Var self) {
    std::span<const double> g = t.grad(self);
    std::span<double> ga = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * factor;
  });
}

Var relu(Tape& tape, Var a) {
  Tensor out = map_unary(tape.value(a), [](double x) { return x > 0.0 ? x : 0.0; });
  return tape.record("relu", std::move(out), {a}, [a](Tape& t, Var self) {
    std::span<const double> g = t.grad(self);
    const Tensor& x = t.value(a);
    std::span<double> ga = t.grad(a);
    // Gradient at exactly zero is zero.
    for (std::size_t i = 0; i < g.size(); ++i)
      if (x[i] > 0.0) ga[i] += g[i];
  });
}

Var tanh(Tape& tape, Var a) {
  Tensor out = map_unary(tape.value(a), [](double x) { return std::tanh(x); });
  return tape.record("tanh", std::move(out), {a}, [a](Tape& t, Var self) {
    std::span<const double> g = t.grad(self);
    const Tensor& y = t.value(self);
    std::span<double> ga = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var exp(Tape& tape, Var a) {
  Tensor out = map_unary(tape.value(a), [](double x) { return std::exp(x); });
  return tape.record("exp", std::move(out), {a}, [a](Tape& t, Var self) {
    std::span<const double> g = t.grad(self);
    const Tensor& y = t.value(self);
    std::span<double> ga = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
  });
}

Var log(Tape& tape, Var a) {
  const Tensor& x = tape.value(a);
  for (double v : x.data())
    if (!(v > 0.0)) throw DomainError("log of non-positive value " + std::to_string(v));
  Tensor out = map_unary(x, [](double v) { return std::log(v); });
  return tape.record("log", std::move(out), {a}, [a](Tape& t, Var self) {
    std::span<const double> g = t.grad(self);
    const Tensor& x = t.value(a);
    std::span<double> ga = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / x[i];
  });
}

Var elementwise(Tape& tape, ElementwiseOp op, std::span<const Var> args, double factor) {
  const std::size_t arity =
      (op == ElementwiseOp::kAdd || op == ElementwiseOp::kSub || op == ElementwiseOp::kMul) ? 2
                                                                                            : 1;
  if (args.size() != arity)
    throw UsageError("elementwise: expected " + std::to_string(arity) + " operand(s)");
  switch (op) {
    case ElementwiseOp::kAdd:
      return add(tape, args[0], args[1]);
    case ElementwiseOp::kSub:
      return sub(tape, args[0], args[1]);
    case ElementwiseOp::kMul:
      return mul(tape, args[0], args[1]);
    case ElementwiseOp::kRelu:
      return relu(tape, args[0]);
    case ElementwiseOp::kTanh:
      return tanh(tape, args[0]);
    case ElementwiseOp::kExp:
      return exp(tape, args[0]);
    case ElementwiseOp::kLog:
      return log(tape, args[0]);
    case ElementwiseOp::kScale:
      return scale(tape, args[0], factor);
  }
  throw UsageError("elementwise: unknown op");
}

namespace {

std::size_t last_dim(const Tensor& t) { return t.shape().back(); }

}  // namespace

Var softmax_row(Tape& tape, Var a) {
  const Tensor& x = tape.value(a);
  const std::size_t n = last_dim(x);
  const std::size_t rows = x.size() / n;
  Tensor out(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x.data().data() + r * n;
    double* yr = out.data().data() + r * n;
    const double mx = *std::max_element(xr, xr + n);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      yr[j] = std::exp(xr[j] - mx);
      total += yr[j];
    }
    for (std::size_t j = 0; j < n; ++j) yr[j] /= total;
  }
  return tape.record("softmax_row", std::move(out), {a}, [a, n, rows](Tape& t, Var self) {
    std::span<const double> g = t.grad(self);
    const Tensor& y = t.value(self);
    std::span<double> ga = t.grad(a);
    for (std::size_t r = 0; r < rows; ++r) {
      double dotgy = 0.0;
      for (std::size_t j = 0; j < n; ++j) dotgy += g[r * n + j] * y[r * n + j];
      for (std::size_t j = 0; j < n; ++j)
        ga[r * n + j] += y[r * n + j] * (g[r * n + j] - dotgy);
    }
  });
}

Var log_softmax_row(Tape& tape, Var a) {
  const Tensor& x = tape.value(a);
  const std::size_t n = last_dim(x);
  const std::size_t rows = x.size() / n;
  Tensor out(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x.data().data() + r * n;
    double* yr = out.data().data() + r * n;
    const double mx = *std::max_element(xr, xr + n);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) total += std::exp(xr[j] - mx);
    const double lse = std::log(total);
    for (std::size_t j = 0; j < n; ++j) yr[j] = (xr[j] - mx) - lse;
  }
  return tape.record("log_softmax_row", std::move(out), {a}, [a, n, rows](Tape& t, Var self) {
    std::span<const double> g = t.grad(self);
    const Tensor& y = t.value(self);
    std::span<double> ga = t.grad(a);
    for (std::size_t r = 0; r < rows; ++r) {
      double gsum = 0.0;
      for (std::size_t j = 0; j < n; ++j) gsum += g[r * n + j];
      for (std::size_t j = 0; j < n; ++j)
        ga[r * n + j] += g[r * n + j] - std::exp(y[r * n + j]) * gsum;
    }
  });
}

Var sum(Tape& tape, Var a) {
  const Tensor& x = tape.value(a);
  double total = 0.0;
  for (double v : x.data()) total += v;
  return tape.record("sum", Tensor::scalar(total), {a}, [a](Tape& t, Var self) {
    const double g = t.grad(self)[0];
    for (double& v : t.grad(a)) v += g;
  });
}

Var mean(Tape& tape, Var a) {
  const Tensor& x = tape.value(a);
  double total = 0.0;
  for (double v : x.data()) total += v;
  const double n = static_cast<double>(x.size());
  return tape.record("mean", Tensor::scalar(total / n), {a}, [a, n](Tape& t, Var self) {
    const double g = t.grad(self)[0] / n;
    for (double& v : t.grad(a)) v += g;
  });
}

Var mse_loss(Tape& tape, Var a, Var b) {
  const Var d = sub(tape, a, b);
  return mean(tape, mul(tape, d, d));
}

Var reshape(Tape& tape, Var a, Shape shape) {
  Tensor out = tape.value(a).reshaped(std::move(shape));
  return tape.record("reshape", std::move(out), {a}, [a](Tape& t, Var self) {
    std::span<const double> g = t.grad(self);
    std::span<double> ga = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Var transpose(Tape& tape, Var a) {
  const Tensor& x = tape.value(a);
  const auto [m, n] = mat_dims(x);
  Tensor out(matrix_shape(n, m));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = x[i * n + j];
  return tape.record("transpose", std::move(out), {a}, [a, m, n](Tape& t, Var self) {
    std::span<const double> g = t.grad(self);
    std::span<double> ga = t.grad(a);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += g[j * m + i];
  });
}

Var gather_rows(Tape& tape, Var a, std::vector<std::size_t> rows) {
  const Tensor& x = tape.value(a);
  const auto [m, n] = mat_dims(x);
  if (rows.empty()) throw UsageError("gather_rows: no rows selected");
  Tensor out(matrix_shape(rows.size(), n));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= m) throw DimensionError("gather_rows: row index out of range");
    std::copy_n(x.data().data() + rows[r] * n, n, out.data().data() + r * n);
  }
  return tape.record("gather_rows", std::move(out), {a},
                     [a, n, rows = std::move(rows)](Tape& t, Var self) {
                       std::span<const double> g = t.grad(self);
                       std::span<double> ga = t.grad(a);
                       for (std::size_t r = 0; r < rows.size(); ++r)
                         for (std::size_t j = 0; j < n; ++j) ga[rows[r] * n + j] += g[r * n + j];
                     });
}

Var trace(Tape& tape, Var a) {
  const Tensor& x = tape.value(a);
  const auto [m, n] = mat_dims(x);
  if (m != n) throw DimensionError("trace: matrix is not square");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += x[i * n + i];
  return tape.record("trace", Tensor::scalar(total), {a}, [a, n](Tape& t, Var self) {
    const double g = t.grad(self)[0];
    std::span<double> ga = t.grad(a);
    for (std::size_t i = 0; i < n; ++i) ga[i * n + i] += g;
  });
}

Var diagonal_mean(Tape& tape, Var a) {
  const Tensor& x = tape.value(a);
  const auto [m, n] = mat_dims(x);
  if (m != n || n == 0) throw DimensionError("diagonal_mean: matrix is not square");
  const double first = x[0];
  double spread = 0.0;
  for (std::size_t i = 1; i < n; ++i) spread += x[i * n + i] - first;
  const double mean = first + spread / static_cast<double>(n);
  return tape.record("diagonal_mean", Tensor::scalar(mean), {a}, [a, n](Tape& t, Var self) {
    const double g = t.grad(self)[0] / static_cast<double>(n);
    std::span<double> ga = t.grad(a);
    for (std::size_t i = 0; i < n; ++i) ga[i * n + i] += g;
  });
}

}  // namespace chronosteer::num
