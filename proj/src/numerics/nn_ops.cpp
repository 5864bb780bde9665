// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#include "chronosteer/numerics/nn_ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "chronosteer/errors.hpp"
#include "chronosteer/kernels.hpp"
#include "chronosteer/numerics/ops.hpp"

namespace chronosteer::num {
namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw DimensionError(msg);
}

bool token_present(const PrefixMask& prefix, std::size_t seq, std::size_t token) {
  return token != 0 || prefix.empty() || prefix[seq] != 0;
}

}  // namespace

Var add_row(Tape& tape, Var x, Var row) {
  const Tensor& xv = tape.value(x);
  const Tensor& rv = tape.value(row);
  const std::size_t m = xv.rows();
  const std::size_t n = xv.cols();
  require(rv.size() == n, "add_row: row has " + std::to_string(rv.size()) + " values, expected " +
                              std::to_string(n));
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = xv[i * n + j] + rv[j];
  return tape.record("add_row", std::move(out), {x, row}, [x, row, m, n](Tape& t, Var self) {
    std::span<const double> g = t.grad(self);
    if (t.requires_grad(x)) {
      std::span<double> gx = t.grad(x);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    }
    if (t.requires_grad(row)) {
      std::span<double> gr = t.grad(row);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gr[j] += g[i * n + j];
    }
  });
}

Var linear(Tape& tape, Var x, Var w, Var bias) { return add_row(tape, matmul(tape, x, w), bias); }

Var layer_norm(Tape& tape, Var x, Var gain, Var bias, double eps) {
  const Tensor& xv = tape.value(x);
  const std::size_t m = xv.rows();
  const std::size_t n = xv.cols();
  require(tape.value(gain).size() == n && tape.value(bias).size() == n,
          "layer_norm: gain/bias width mismatch");
  const Tensor& gv = tape.value(gain);
  const Tensor& bv = tape.value(bias);
  auto xhat = std::make_shared<std::vector<double>>(m * n);
  auto rstd = std::make_shared<std::vector<double>>(m);
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < m; ++i) {
    const double* xr = xv.data().data() + i * n;
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += xr[j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var /= static_cast<double>(n);
    const double r = 1.0 / std::sqrt(var + eps);
    (*rstd)[i] = r;
    for (std::size_t j = 0; j < n; ++j) {
      const double h = (xr[j] - mu) * r;
      (*xhat)[i * n + j] = h;
      out[i * n + j] = h * gv[j] + bv[j];
    }
  }
  return tape.record(
      "layer_norm", std::move(out), {x, gain, bias},
      [x, gain, bias, m, n, xhat, rstd](Tape& t, Var self) {
        std::span<const double> g = t.grad(self);
        const Tensor& gv = t.value(gain);
        if (t.requires_grad(gain)) {
          std::span<double> gg = t.grad(gain);
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) gg[j] += g[i * n + j] * (*xhat)[i * n + j];
        }
        if (t.requires_grad(bias)) {
          std::span<double> gb = t.grad(bias);
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) gb[j] += g[i * n + j];
        }
        if (t.requires_grad(x)) {
          std::span<double> gx = t.grad(x);
          const double inv_n = 1.0 / static_cast<double>(n);
          for (std::size_t i = 0; i < m; ++i) {
            double mean_gh = 0.0;
            double mean_ghx = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
              const double gh = g[i * n + j] * gv[j];
              mean_gh += gh;
              mean_ghx += gh * (*xhat)[i * n + j];
            }
            mean_gh *= inv_n;
            mean_ghx *= inv_n;
            const double r = (*rstd)[i];
            for (std::size_t j = 0; j < n; ++j) {
              const double gh = g[i * n + j] * gv[j];
              gx[i * n + j] += r * (gh - mean_gh - (*xhat)[i * n + j] * mean_ghx);
            }
          }
        }
      });
}

Var row_normalize(Tape& tape, Var x) {
  const Tensor& xv = tape.value(x);
  const std::size_t m = xv.rows();
  const std::size_t n = xv.cols();
  auto norms = std::make_shared<std::vector<double>>(m);
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < m; ++i) {
    double ss = 0.0;
    for (std::size_t j = 0; j < n; ++j) ss += xv[i * n + j] * xv[i * n + j];
    const double norm = std::sqrt(ss);
    if (!(norm > 0.0)) throw DomainError("row_normalize: row " + std::to_string(i) + " is zero");
    (*norms)[i] = norm;
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = xv[i * n + j] / norm;
  }
  return tape.record("row_normalize", std::move(out), {x}, [x, m, n, norms](Tape& t, Var self) {
    std::span<const double> g = t.grad(self);
    const Tensor& y = t.value(self);
    std::span<double> gx = t.grad(x);
    for (std::size_t i = 0; i < m; ++i) {
      double gy = 0.0;
      for (std::size_t j = 0; j < n; ++j) gy += g[i * n + j] * y[i * n + j];
      for (std::size_t j = 0; j < n; ++j)
        gx[i * n + j] += (g[i * n + j] - y[i * n + j] * gy) / (*norms)[i];
    }
  });
}

Var multi_head_attention(Tape& tape, Var qkv, std::size_t sequences, std::size_t tokens,
                         std::size_t heads, const PrefixMask& prefix) {
  const Tensor& in = tape.value(qkv);
  require(in.rows() == sequences * tokens, "attention: row count is not sequences * tokens");
  require(in.cols() % 3 == 0, "attention: qkv width is not a multiple of 3");
  const std::size_t width = in.cols() / 3;
  require(heads > 0 && width % heads == 0, "attention: width not divisible by heads");
  require(prefix.empty() || prefix.size() == sequences, "attention: prefix mask size mismatch");
  const std::size_t dh = width / heads;
  const std::size_t stride = 3 * width;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  const auto& kt = kernels::active();

  // probs[((s * heads + h) * tokens + query) * tokens + key]
  auto probs = std::make_shared<std::vector<double>>(sequences * heads * tokens * tokens, 0.0);
  Tensor out({sequences * tokens, width});
  std::vector<double> scores(tokens);
  for (std::size_t s = 0; s < sequences; ++s) {
    const std::size_t first = token_present(prefix, s, 0) ? 0 : 1;
    const double* base = in.data().data() + s * tokens * stride;
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t q = 0; q < tokens; ++q) {
        const double* qv = base + q * stride + h * dh;
        double mx = -INFINITY;
        for (std::size_t k = first; k < tokens; ++k) {
          scores[k] = kt.dot(qv, base + k * stride + width + h * dh, dh) * inv_sqrt;
          mx = std::max(mx, scores[k]);
        }
        double total = 0.0;
        for (std::size_t k = first; k < tokens; ++k) {
          scores[k] = std::exp(scores[k] - mx);
          total += scores[k];
        }
        double* prow = probs->data() + ((s * heads + h) * tokens + q) * tokens;
        double* orow = out.data().data() + (s * tokens + q) * width + h * dh;
        for (std::size_t k = first; k < tokens; ++k) {
          const double p = scores[k] / total;
          prow[k] = p;
          const double* vv = base + k * stride + 2 * width + h * dh;
          for (std::size_t d = 0; d < dh; ++d) orow[d] += p * vv[d];
        }
      }
    }
  }
  return tape.record(
      "multi_head_attention", std::move(out), {qkv},
      [qkv, sequences, tokens, heads, width, dh, stride, inv_sqrt, probs,
       prefix](Tape& t, Var self) {
        std::span<const double> g = t.grad(self);
        const double* in = t.value(qkv).data().data();
        std::span<double> gin = t.grad(qkv);
        const auto& kt = kernels::active();
        std::vector<double> dp(tokens);
        for (std::size_t s = 0; s < sequences; ++s) {
          const std::size_t first = token_present(prefix, s, 0) ? 0 : 1;
          const double* base = in + s * tokens * stride;
          double* gbase = gin.data() + s * tokens * stride;
          for (std::size_t h = 0; h < heads; ++h) {
            for (std::size_t q = 0; q < tokens; ++q) {
              const double* go = g.data() + (s * tokens + q) * width + h * dh;
              const double* prow = probs->data() + ((s * heads + h) * tokens + q) * tokens;
              double weighted = 0.0;
              for (std::size_t k = first; k < tokens; ++k) {
                const double* vv = base + k * stride + 2 * width + h * dh;
                dp[k] = kt.dot(go, vv, dh);
                weighted += prow[k] * dp[k];
                double* gv = gbase + k * stride + 2 * width + h * dh;
                for (std::size_t d = 0; d < dh; ++d) gv[d] += prow[k] * go[d];
              }
              const double* qv = base + q * stride + h * dh;
              double* gq = gbase + q * stride + h * dh;
              for (std::size_t k = first; k < tokens; ++k) {
                const double ds = prow[k] * (dp[k] - weighted) * inv_sqrt;
                const double* kv = base + k * stride + width + h * dh;
                double* gk = gbase + k * stride + width + h * dh;
                for (std::size_t d = 0; d < dh; ++d) {
                  gq[d] += ds * kv[d];
                  gk[d] += ds * qv[d];
                }
              }
            }
          }
        }
      });
}

Var mean_pool(Tape& tape, Var x, std::size_t sequences, std::size_t tokens,
              const PrefixMask& prefix) {
  const Tensor& xv = tape.value(x);
  require(xv.rows() == sequences * tokens, "mean_pool: row count is not sequences * tokens");
  require(prefix.empty() || prefix.size() == sequences, "mean_pool: prefix mask size mismatch");
  const std::size_t d = xv.cols();
  Tensor out({sequences, d});
  for (std::size_t s = 0; s < sequences; ++s) {
    const std::size_t first = token_present(prefix, s, 0) ? 0 : 1;
    const double inv = 1.0 / static_cast<double>(tokens - first);
    double* orow = out.data().data() + s * d;
    for (std::size_t k = first; k < tokens; ++k) {
      const double* xr = xv.data().data() + (s * tokens + k) * d;
      for (std::size_t j = 0; j < d; ++j) orow[j] += xr[j];
    }
    for (std::size_t j = 0; j < d; ++j) orow[j] *= inv;
  }
  return tape.record("mean_pool", std::move(out), {x},
                     [x, sequences, tokens, d, prefix](Tape& t, Var self) {
                       std::span<const double> g = t.grad(self);
                       std::span<double> gx = t.grad(x);
                       for (std::size_t s = 0; s < sequences; ++s) {
                         const std::size_t first = token_present(prefix, s, 0) ? 0 : 1;
                         const double inv = 1.0 / static_cast<double>(tokens - first);
                         for (std::size_t k = first; k < tokens; ++k)
                           for (std::size_t j = 0; j < d; ++j)
                             gx[(s * tokens + k) * d + j] += g[s * d + j] * inv;
                       }
                     });
}

Var prepend_rows(Tape& tape, Var prefix, Var body, std::size_t body_tokens) {
  const Tensor& pv = tape.value(prefix);
  const Tensor& bv = tape.value(body);
  const std::size_t sequences = pv.rows();
  const std::size_t d = pv.cols();
  require(bv.cols() == d, "prepend_rows: width mismatch");
  require(bv.rows() == sequences * body_tokens, "prepend_rows: body rows mismatch");
  const std::size_t tokens = body_tokens + 1;
  Tensor out({sequences * tokens, d});
  for (std::size_t s = 0; s < sequences; ++s) {
    std::copy_n(pv.data().data() + s * d, d, out.data().data() + s * tokens * d);
    std::copy_n(bv.data().data() + s * body_tokens * d, body_tokens * d,
                out.data().data() + (s * tokens + 1) * d);
  }
  return tape.record("prepend_rows", std::move(out), {prefix, body},
                     [prefix, body, sequences, body_tokens, tokens, d](Tape& t, Var self) {
                       std::span<const double> g = t.grad(self);
                       if (t.requires_grad(prefix)) {
                         std::span<double> gp = t.grad(prefix);
                         for (std::size_t s = 0; s < sequences; ++s)
                           for (std::size_t j = 0; j < d; ++j) gp[s * d + j] += g[s * tokens * d + j];
                       }
                       if (t.requires_grad(body)) {
                         std::span<double> gb = t.grad(body);
                         for (std::size_t s = 0; s < sequences; ++s)
                           for (std::size_t j = 0; j < body_tokens * d; ++j)
                             gb[s * body_tokens * d + j] += g[(s * tokens + 1) * d + j];
                       }
                     });
}

}  // namespace chronosteer::num
