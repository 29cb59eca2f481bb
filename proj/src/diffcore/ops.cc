// diffcore/ops.cc

// Copyright 2026  The sdadapt Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sdadapt/diffcore/ops.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sdadapt/base/error.h"

namespace sdadapt {

namespace {

void RequireRank(const DiffArray& a, std::size_t rank, const char* op) {
  if (a.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) +
                         ", got " + ShapeString(a.shape()));
  }
}

void RequireSameShape(const DiffArray& a, const DiffArray& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + ShapeString(a.shape()) +
                         " vs " + ShapeString(b.shape()));
  }
}

std::size_t LastDim(const DiffArray& a) { return a.shape().back(); }

// c[i*rsc + j] += sum_p a[i*rsa + p*csa] * b[p*rsb + j*csb], i < m, j < n, p < k.
// Operands are packed into narrow panels; each kMr x kNr block of c is accumulated in
// registers over p in increasing order, so results do not depend on the strides.
// Rows of c may overlap (rsc < n); every element is updated with a single add.
constexpr std::size_t kMr = 4;
constexpr std::size_t kNr = 8;

__attribute__((target_clones("avx2", "default")))
void Gemm(std::size_t m, std::size_t n, std::size_t k, const double* a, std::ptrdiff_t rsa,
          std::ptrdiff_t csa, const double* b, std::ptrdiff_t rsb, std::ptrdiff_t csb,
          double* c, std::ptrdiff_t rsc) {
  if (m == 0 || n == 0 || k == 0) return;
  thread_local std::vector<double> apack, bpack;
  const std::size_t mb = (m + kMr - 1) / kMr, nb = (n + kNr - 1) / kNr;
  bpack.assign(nb * k * kNr, 0.0);
  for (std::size_t jb = 0; jb < nb; ++jb) {
    double* panel = bpack.data() + jb * k * kNr;
    const std::size_t jn = std::min(kNr, n - jb * kNr);
    for (std::size_t p = 0; p < k; ++p) {
      const double* bp = b + static_cast<std::ptrdiff_t>(p) * rsb;
      for (std::size_t jj = 0; jj < jn; ++jj)
        panel[p * kNr + jj] = bp[static_cast<std::ptrdiff_t>(jb * kNr + jj) * csb];
    }
  }
  apack.assign(k * kMr, 0.0);
  for (std::size_t ib = 0; ib < mb; ++ib) {
    const std::size_t in = std::min(kMr, m - ib * kMr);
    if (in < kMr) std::fill(apack.begin(), apack.end(), 0.0);
    for (std::size_t ii = 0; ii < in; ++ii) {
      const double* ai = a + static_cast<std::ptrdiff_t>(ib * kMr + ii) * rsa;
      for (std::size_t p = 0; p < k; ++p)
        apack[p * kMr + ii] = ai[static_cast<std::ptrdiff_t>(p) * csa];
    }
    const double* ap = apack.data();
    for (std::size_t jb = 0; jb < nb; ++jb) {
      const double* bp = bpack.data() + jb * k * kNr;
      double acc[kMr][kNr] = {};
      for (std::size_t p = 0; p < k; ++p) {
        const double* av = ap + p * kMr;
        const double* bv = bp + p * kNr;
        for (std::size_t ii = 0; ii < kMr; ++ii)
          for (std::size_t jj = 0; jj < kNr; ++jj) acc[ii][jj] += av[ii] * bv[jj];
      }
      const std::size_t jn = std::min(kNr, n - jb * kNr);
      for (std::size_t ii = 0; ii < in; ++ii) {
        double* ci = c + static_cast<std::ptrdiff_t>(ib * kMr + ii) * rsc +
                     static_cast<std::ptrdiff_t>(jb * kNr);
        for (std::size_t jj = 0; jj < jn; ++jj) ci[jj] += acc[ii][jj];
      }
    }
  }
}

using Sd = std::ptrdiff_t;

// c[m×n] += a[m×k]·b[k×n]
void GemmNN(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
            std::size_t n) {
  Gemm(m, n, k, a, Sd(k), 1, b, Sd(n), 1, c, Sd(n));
}

// c[m×n] += a[m×k]·b[n×k]ᵀ
void GemmNT(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
            std::size_t n) {
  Gemm(m, n, k, a, Sd(k), 1, b, 1, Sd(k), c, Sd(n));
}

// c[k×n] += a[m×k]ᵀ·b[m×n]
void GemmTN(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
            std::size_t n) {
  Gemm(k, n, m, a, 1, Sd(k), b, Sd(n), 1, c, Sd(n));
}

double StableSigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double NormalCdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double NormalPdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

}  // namespace

DiffArray MatMul(const DiffArray& a, const DiffArray& b) {
  RequireRank(a, 2, "matmul");
  RequireRank(b, 2, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw DimensionError("matmul: inner dimensions disagree, " + ShapeString(a.shape()) +
                         " · " + ShapeString(b.shape()));
  }
  std::vector<double> out(m * n, 0.0);
  GemmNN(a.data().data(), b.data().data(), out.data(), m, k, n);
  return MakeOp({m, n}, std::move(out), {a, b},
                [a, b, m, k, n](std::span<const double> g, std::span<const std::span<double>> in) {
                  if (!in[0].empty()) GemmNT(g.data(), b.data().data(), in[0].data(), m, n, k);
                  if (!in[1].empty()) GemmTN(a.data().data(), g.data(), in[1].data(), m, k, n);
                });
}

DiffArray MatMulNT(const DiffArray& a, const DiffArray& b) {
  RequireRank(a, 2, "matmul_nt");
  RequireRank(b, 2, "matmul_nt");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
  if (b.dim(1) != k) {
    throw DimensionError("matmul_nt: inner dimensions disagree, " + ShapeString(a.shape()) +
                         " · " + ShapeString(b.shape()) + "ᵀ");
  }
  std::vector<double> out(m * n, 0.0);
  GemmNT(a.data().data(), b.data().data(), out.data(), m, k, n);
  return MakeOp({m, n}, std::move(out), {a, b},
                [a, b, m, k, n](std::span<const double> g, std::span<const std::span<double>> in) {
                  // da = g·b, db = gᵀ·a
                  if (!in[0].empty()) GemmNN(g.data(), b.data().data(), in[0].data(), m, n, k);
                  if (!in[1].empty()) GemmTN(g.data(), a.data().data(), in[1].data(), m, n, k);
                });
}

DiffArray Transpose(const DiffArray& a) {
  RequireRank(a, 2, "transpose");
  const std::size_t r = a.dim(0), c = a.dim(1);
  std::vector<double> out(r * c);
  auto x = a.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = x[i * c + j];
  return MakeOp({c, r}, std::move(out), {a},
                [r, c](std::span<const double> g, std::span<const std::span<double>> in) {
                  for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t j = 0; j < c; ++j) in[0][i * c + j] += g[j * r + i];
                });
}

DiffArray Add(const DiffArray& a, const DiffArray& b) {
  RequireSameShape(a, b, "add");
  auto x = a.data(), y = b.data();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
  return MakeOp(a.shape(), std::move(out), {a, b},
                [](std::span<const double> g, std::span<const std::span<double>> in) {
                  for (const auto& dst : in) {
                    if (dst.empty()) continue;
                    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
                  }
                });
}

DiffArray Sub(const DiffArray& a, const DiffArray& b) {
  RequireSameShape(a, b, "sub");
  auto x = a.data(), y = b.data();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] - y[i];
  return MakeOp(a.shape(), std::move(out), {a, b},
                [](std::span<const double> g, std::span<const std::span<double>> in) {
                  if (!in[0].empty())
                    for (std::size_t i = 0; i < g.size(); ++i) in[0][i] += g[i];
                  if (!in[1].empty())
                    for (std::size_t i = 0; i < g.size(); ++i) in[1][i] -= g[i];
                });
}

DiffArray Hadamard(const DiffArray& a, const DiffArray& b) {
  RequireSameShape(a, b, "hadamard");
  auto x = a.data(), y = b.data();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
  return MakeOp(a.shape(), std::move(out), {a, b},
                [a, b](std::span<const double> g, std::span<const std::span<double>> in) {
                  auto x = a.data(), y = b.data();
                  if (!in[0].empty())
                    for (std::size_t i = 0; i < g.size(); ++i) in[0][i] += g[i] * y[i];
                  if (!in[1].empty())
                    for (std::size_t i = 0; i < g.size(); ++i) in[1][i] += g[i] * x[i];
                });
}

DiffArray Scale(const DiffArray& a, double factor) {
  auto x = a.data();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * factor;
  return MakeOp(a.shape(), std::move(out), {a},
                [factor](std::span<const double> g, std::span<const std::span<double>> in) {
                  for (std::size_t i = 0; i < g.size(); ++i) in[0][i] += g[i] * factor;
                });
}

DiffArray AddRow(const DiffArray& x, const DiffArray& v) {
  RequireRank(x, 2, "add_row");
  const std::size_t rows = x.dim(0), m = x.dim(1);
  if (v.size() != m) {
    throw DimensionError("add_row: width " + std::to_string(m) + " vs vector of " +
                         std::to_string(v.size()));
  }
  auto xd = x.data(), vd = v.data();
  std::vector<double> out(xd.size());
  for (std::size_t t = 0; t < rows; ++t)
    for (std::size_t j = 0; j < m; ++j) out[t * m + j] = xd[t * m + j] + vd[j];
  return MakeOp(x.shape(), std::move(out), {x, v},
                [rows, m](std::span<const double> g, std::span<const std::span<double>> in) {
                  if (!in[0].empty())
                    for (std::size_t i = 0; i < g.size(); ++i) in[0][i] += g[i];
                  if (!in[1].empty())
                    for (std::size_t t = 0; t < rows; ++t)
                      for (std::size_t j = 0; j < m; ++j) in[1][j] += g[t * m + j];
                });
}

DiffArray MulRow(const DiffArray& x, const DiffArray& v) {
  RequireRank(x, 2, "mul_row");
  const std::size_t rows = x.dim(0), m = x.dim(1);
  if (v.size() != m) {
    throw DimensionError("mul_row: width " + std::to_string(m) + " vs vector of " +
                         std::to_string(v.size()));
  }
  auto xd = x.data(), vd = v.data();
  std::vector<double> out(xd.size());
  for (std::size_t t = 0; t < rows; ++t)
    for (std::size_t j = 0; j < m; ++j) out[t * m + j] = xd[t * m + j] * vd[j];
  return MakeOp(x.shape(), std::move(out), {x, v},
                [x, v, rows, m](std::span<const double> g, std::span<const std::span<double>> in) {
                  auto xd = x.data(), vd = v.data();
                  if (!in[0].empty())
                    for (std::size_t t = 0; t < rows; ++t)
                      for (std::size_t j = 0; j < m; ++j) in[0][t * m + j] += g[t * m + j] * vd[j];
                  if (!in[1].empty())
                    for (std::size_t t = 0; t < rows; ++t)
                      for (std::size_t j = 0; j < m; ++j) in[1][j] += g[t * m + j] * xd[t * m + j];
                });
}

DiffArray Sigmoid(const DiffArray& x) {
  auto xd = x.data();
  std::vector<double> out(xd.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = StableSigmoid(xd[i]);
  std::vector<double> y = out;
  return MakeOp(x.shape(), std::move(out), {x},
                [y = std::move(y)](std::span<const double> g, std::span<const std::span<double>> in) {
                  for (std::size_t i = 0; i < g.size(); ++i) in[0][i] += g[i] * y[i] * (1.0 - y[i]);
                });
}

DiffArray Gelu(const DiffArray& x) {
  auto xd = x.data();
  std::vector<double> out(xd.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xd[i] * NormalCdf(xd[i]);
  return MakeOp(x.shape(), std::move(out), {x},
                [x](std::span<const double> g, std::span<const std::span<double>> in) {
                  auto xd = x.data();
                  for (std::size_t i = 0; i < g.size(); ++i) {
                    const double v = xd[i];
                    in[0][i] += g[i] * (NormalCdf(v) + v * NormalPdf(v));
                  }
                });
}

DiffArray LayerNorm(const DiffArray& x, const DiffArray& gamma, const DiffArray& beta,
                    double eps) {
  if (!(eps > 0.0)) throw ParameterError("layernorm: eps must be positive");
  const std::size_t m = LastDim(x);
  if (gamma.size() != m || beta.size() != m) {
    throw DimensionError("layernorm: gamma/beta length must equal last axis " +
                         std::to_string(m));
  }
  const std::size_t rows = x.size() / m;
  auto xd = x.data(), gd = gamma.data(), bd = beta.data();
  std::vector<double> out(xd.size());
  std::vector<double> xhat(xd.size());
  std::vector<double> rstd(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = xd.data() + r * m;
    double mean = 0.0;
    for (std::size_t j = 0; j < m; ++j) mean += xr[j];
    mean /= static_cast<double>(m);
    double var = 0.0;
    for (std::size_t j = 0; j < m; ++j) var += (xr[j] - mean) * (xr[j] - mean);
    var /= static_cast<double>(m);
    rstd[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < m; ++j) {
      const double h = (xr[j] - mean) * rstd[r];
      xhat[r * m + j] = h;
      out[r * m + j] = h * gd[j] + bd[j];
    }
  }
  return MakeOp(
      x.shape(), std::move(out), {x, gamma, beta},
      [gamma, xhat = std::move(xhat), rstd = std::move(rstd), rows, m](
          std::span<const double> g, std::span<const std::span<double>> in) {
        auto gd = gamma.data();
        std::vector<double> dy(m);
        for (std::size_t r = 0; r < rows; ++r) {
          const double* gr = g.data() + r * m;
          const double* hr = xhat.data() + r * m;
          if (!in[1].empty())
            for (std::size_t j = 0; j < m; ++j) in[1][j] += gr[j] * hr[j];
          if (!in[2].empty())
            for (std::size_t j = 0; j < m; ++j) in[2][j] += gr[j];
          if (in[0].empty()) continue;
          double mean_dy = 0.0, mean_dy_h = 0.0;
          for (std::size_t j = 0; j < m; ++j) {
            dy[j] = gr[j] * gd[j];
            mean_dy += dy[j];
            mean_dy_h += dy[j] * hr[j];
          }
          mean_dy /= static_cast<double>(m);
          mean_dy_h /= static_cast<double>(m);
          double* dx = in[0].data() + r * m;
          for (std::size_t j = 0; j < m; ++j) dx[j] += rstd[r] * (dy[j] - mean_dy - hr[j] * mean_dy_h);
        }
      });
}

DiffArray LogSoftmax(const DiffArray& x) {
  const std::size_t m = LastDim(x);
  const std::size_t rows = x.size() / m;
  auto xd = x.data();
  std::vector<double> out(xd.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = xd.data() + r * m;
    const double mx = *std::max_element(xr, xr + m);
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) s += std::exp(xr[j] - mx);
    const double lse = mx + std::log(s);
    for (std::size_t j = 0; j < m; ++j) out[r * m + j] = xr[j] - lse;
  }
  std::vector<double> y = out;
  return MakeOp(x.shape(), std::move(out), {x},
                [y = std::move(y), rows, m](std::span<const double> g,
                                            std::span<const std::span<double>> in) {
                  for (std::size_t r = 0; r < rows; ++r) {
                    const double* gr = g.data() + r * m;
                    double gs = 0.0;
                    for (std::size_t j = 0; j < m; ++j) gs += gr[j];
                    for (std::size_t j = 0; j < m; ++j)
                      in[0][r * m + j] += gr[j] - std::exp(y[r * m + j]) * gs;
                  }
                });
}

DiffArray Softmax(const DiffArray& x) {
  const std::size_t m = LastDim(x);
  const std::size_t rows = x.size() / m;
  auto xd = x.data();
  std::vector<double> out(xd.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = xd.data() + r * m;
    const double mx = *std::max_element(xr, xr + m);
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      out[r * m + j] = std::exp(xr[j] - mx);
      s += out[r * m + j];
    }
    for (std::size_t j = 0; j < m; ++j) out[r * m + j] /= s;
  }
  std::vector<double> y = out;
  return MakeOp(x.shape(), std::move(out), {x},
                [y = std::move(y), rows, m](std::span<const double> g,
                                            std::span<const std::span<double>> in) {
                  for (std::size_t r = 0; r < rows; ++r) {
                    const double* gr = g.data() + r * m;
                    const double* yr = y.data() + r * m;
                    double dot = 0.0;
                    for (std::size_t j = 0; j < m; ++j) dot += gr[j] * yr[j];
                    for (std::size_t j = 0; j < m; ++j) in[0][r * m + j] += yr[j] * (gr[j] - dot);
                  }
                });
}

std::size_t Conv1dOutputLength(std::size_t length, std::size_t kernel, std::size_t stride) {
  if (stride == 0 || kernel == 0) throw ParameterError("conv1d: kernel and stride must be >= 1");
  if (length < kernel) return 0;
  return (length - kernel) / stride + 1;
}

DiffArray Conv1d(const DiffArray& x, const DiffArray& kernel, const DiffArray& bias,
                 std::size_t stride) {
  RequireRank(x, 2, "conv1d");
  RequireRank(kernel, 3, "conv1d kernel");
  const std::size_t len = x.dim(0), cin = x.dim(1);
  const std::size_t cout = kernel.dim(0), k = kernel.dim(1);
  if (kernel.dim(2) != cin) {
    throw DimensionError("conv1d: kernel expects " + std::to_string(kernel.dim(2)) +
                         " input channels, got " + std::to_string(cin));
  }
  if (bias.defined() && bias.size() != cout) throw DimensionError("conv1d: bias length");
  const std::size_t tout = Conv1dOutputLength(len, k, stride);
  if (tout == 0) {
    throw InputError("conv1d: input of length " + std::to_string(len) +
                     " is shorter than kernel " + std::to_string(k));
  }
  const std::size_t win = k * cin;  // contiguous window in the row-major input
  const std::size_t hop = stride * cin;
  std::vector<double> out(tout * cout, 0.0);
  if (bias.defined()) {
    auto bd = bias.data();
    for (std::size_t t = 0; t < tout; ++t) std::copy(bd.begin(), bd.end(), out.begin() + t * cout);
  }
  // out[t, c] += sum_j x[t*hop + j] * w[c, j]
  Gemm(tout, cout, win, x.data().data(), Sd(hop), 1, kernel.data().data(), 1, Sd(win),
       out.data(), Sd(cout));
  std::vector<DiffArray> inputs{x, kernel};
  if (bias.defined()) inputs.push_back(bias);
  return MakeOp(
      {tout, cout}, std::move(out), std::move(inputs),
      [x, kernel, tout, cout, win, hop](std::span<const double> g,
                                        std::span<const std::span<double>> in) {
        const double* xd = x.data().data();
        const double* wd = kernel.data().data();
        // dw[c, j] += sum_t g[t, c] * x[t*hop + j]
        if (!in[1].empty())
          Gemm(cout, win, tout, g.data(), 1, Sd(cout), xd, Sd(hop), 1, in[1].data(), Sd(win));
        // dx[t*hop + j] += sum_c g[t, c] * w[c, j]
        if (!in[0].empty())
          Gemm(tout, win, cout, g.data(), Sd(cout), 1, wd, Sd(win), 1, in[0].data(), Sd(hop));
        if (in.size() > 2 && !in[2].empty())
          for (std::size_t t = 0; t < tout; ++t)
            for (std::size_t c = 0; c < cout; ++c) in[2][c] += g[t * cout + c];
      });
}

DiffArray Dropout(const DiffArray& x, double p, Rng& rng, bool training) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw ParameterError("dropout: p must lie in [0, 1), got " + std::to_string(p));
  }
  if (!training || p == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - p);
  std::vector<double> mask(x.size());
  for (double& mv : mask) mv = rng.Uniform() < p ? 0.0 : keep_scale;
  auto xd = x.data();
  std::vector<double> out(xd.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xd[i] * mask[i];
  return MakeOp(x.shape(), std::move(out), {x},
                [mask = std::move(mask)](std::span<const double> g,
                                         std::span<const std::span<double>> in) {
                  for (std::size_t i = 0; i < g.size(); ++i) in[0][i] += g[i] * mask[i];
                });
}

DiffArray SliceCols(const DiffArray& x, std::size_t begin, std::size_t count) {
  RequireRank(x, 2, "slice_cols");
  const std::size_t rows = x.dim(0), cols = x.dim(1);
  if (count == 0 || begin + count > cols) throw DimensionError("slice_cols: range out of bounds");
  auto xd = x.data();
  std::vector<double> out(rows * count);
  for (std::size_t r = 0; r < rows; ++r)
    std::copy_n(xd.data() + r * cols + begin, count, out.data() + r * count);
  return MakeOp({rows, count}, std::move(out), {x},
                [rows, cols, begin, count](std::span<const double> g,
                                           std::span<const std::span<double>> in) {
                  for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t j = 0; j < count; ++j)
                      in[0][r * cols + begin + j] += g[r * count + j];
                });
}

DiffArray ConcatCols(const std::vector<DiffArray>& parts) {
  if (parts.empty()) throw UsageError("concat_cols: no inputs");
  const std::size_t rows = parts[0].dim(0);
  std::size_t cols = 0;
  std::vector<std::size_t> widths;
  for (const auto& p : parts) {
    RequireRank(p, 2, "concat_cols");
    if (p.dim(0) != rows) throw DimensionError("concat_cols: row counts differ");
    widths.push_back(p.dim(1));
    cols += p.dim(1);
  }
  std::vector<double> out(rows * cols);
  std::size_t off = 0;
  for (const auto& p : parts) {
    const std::size_t w = p.dim(1);
    auto pd = p.data();
    for (std::size_t r = 0; r < rows; ++r) std::copy_n(pd.data() + r * w, w, out.data() + r * cols + off);
    off += w;
  }
  return MakeOp({rows, cols}, std::move(out), parts,
                [rows, cols, widths](std::span<const double> g,
                                     std::span<const std::span<double>> in) {
                  std::size_t off = 0;
                  for (std::size_t i = 0; i < widths.size(); ++i) {
                    const std::size_t w = widths[i];
                    if (!in[i].empty())
                      for (std::size_t r = 0; r < rows; ++r)
                        for (std::size_t j = 0; j < w; ++j) in[i][r * w + j] += g[r * cols + off + j];
                    off += w;
                  }
                });
}

DiffArray Sum(const DiffArray& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  return MakeOp({1}, {s}, {x},
                [](std::span<const double> g, std::span<const std::span<double>> in) {
                  for (double& d : in[0]) d += g[0];
                });
}

DiffArray Mean(const DiffArray& x) { return Scale(Sum(x), 1.0 / static_cast<double>(x.size())); }

DiffArray AddN(const std::vector<DiffArray>& scalars) {
  if (scalars.empty()) throw UsageError("add_n: no inputs");
  double s = 0.0;
  for (const auto& a : scalars) s += a.item();
  return MakeOp({1}, {s}, scalars,
                [](std::span<const double> g, std::span<const std::span<double>> in) {
                  for (const auto& d : in)
                    if (!d.empty()) d[0] += g[0];
                });
}

}  // namespace sdadapt
