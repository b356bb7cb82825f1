// Copyright 2026 The Lanecast Authors
//
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

#ifndef LANECAST__NUMERICS__OPS_HPP_
#define LANECAST__NUMERICS__OPS_HPP_

#include "lanecast/numerics/tensor.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace lanecast::nn
{
namespace detail
{

inline Tensor make_result(
  Shape shape, std::vector<double> value, std::initializer_list<const Tensor *> parents,
  std::function<void(TensorNode &)> backward_fn)
{
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  bool track = false;
  if (grad_mode()) {
    for (const Tensor * p : parents) {
      track = track || p->requires_grad();
    }
  }
  if (track) {
    node->requires_grad = true;
    node->leaf = false;
    for (const Tensor * p : parents) {
      node->parents.push_back(p->node());
    }
    node->backward_fn = std::move(backward_fn);
  }
  return Tensor(std::move(node));
}

inline Tensor make_result(
  Shape shape, std::vector<double> value, const std::vector<Tensor> & parents,
  std::function<void(TensorNode &)> backward_fn)
{
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  bool track = false;
  if (grad_mode()) {
    for (const auto & p : parents) {
      track = track || p.requires_grad();
    }
  }
  if (track) {
    node->requires_grad = true;
    node->leaf = false;
    for (const auto & p : parents) {
      node->parents.push_back(p.node());
    }
    node->backward_fn = std::move(backward_fn);
  }
  return Tensor(std::move(node));
}

// Parent grad buffer if that parent participates in the sweep, else nullptr.
inline double * grad_of(TensorNode & self, std::size_t i)
{
  TensorNode & p = *self.parents[i];
  if (!p.requires_grad) {
    return nullptr;
  }
  p.ensure_grad();
  return p.grad.data();
}

inline void require_same_shape(const Tensor & a, const Tensor & b, const char * op)
{
  if (a.shape() != b.shape()) {
    throw ShapeMismatch(
      std::string(op) + ": shapes " + to_string(a.shape()) + " and " + to_string(b.shape()));
  }
}

// C[n,m] += A[n,k] B[k,m]
inline void gemm_nn(
  const double * a, const double * b, double * c, std::size_t n, std::size_t k, std::size_t m)
{
  for (std::size_t i = 0; i < n; ++i) {
    double * crow = c + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      if (av == 0.0) {
        continue;
      }
      const double * brow = b + p * m;
      for (std::size_t j = 0; j < m; ++j) {
        crow[j] += av * brow[j];
      }
    }
  }
}

// C[n,m] += A[n,k] B[m,k]^T
inline void gemm_nt(
  const double * a, const double * b, double * c, std::size_t n, std::size_t k, std::size_t m)
{
  for (std::size_t i = 0; i < n; ++i) {
    const double * arow = a + i * k;
    for (std::size_t j = 0; j < m; ++j) {
      const double * brow = b + j * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) {
        acc += arow[p] * brow[p];
      }
      c[i * m + j] += acc;
    }
  }
}

// C[k,m] += A[n,k]^T B[n,m]
inline void gemm_tn(
  const double * a, const double * b, double * c, std::size_t n, std::size_t k, std::size_t m)
{
  for (std::size_t i = 0; i < n; ++i) {
    const double * brow = b + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      if (av == 0.0) {
        continue;
      }
      double * crow = c + p * m;
      for (std::size_t j = 0; j < m; ++j) {
        crow[j] += av * brow[j];
      }
    }
  }
}

// Splits a shape around `axis` into (outer, axis length, inner).
inline std::array<std::size_t, 3> split_axis(const Shape & shape, std::size_t axis)
{
  std::size_t outer = 1;
  std::size_t inner = 1;
  for (std::size_t i = 0; i < axis; ++i) {
    outer *= shape[i];
  }
  for (std::size_t i = axis + 1; i < shape.size(); ++i) {
    inner *= shape[i];
  }
  return {outer, shape[axis], inner};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise

inline Tensor add(const Tensor & a, const Tensor & b)
{
  detail::require_same_shape(a, b, "add");
  std::vector<double> out(a.values());
  const auto & bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] += bv[i];
  }
  return detail::make_result(a.shape(), std::move(out), {&a, &b}, [](TensorNode & self) {
    for (std::size_t k = 0; k < 2; ++k) {
      if (double * g = detail::grad_of(self, k)) {
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
          g[i] += self.grad[i];
        }
      }
    }
  });
}

inline Tensor sub(const Tensor & a, const Tensor & b)
{
  detail::require_same_shape(a, b, "sub");
  std::vector<double> out(a.values());
  const auto & bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] -= bv[i];
  }
  return detail::make_result(a.shape(), std::move(out), {&a, &b}, [](TensorNode & self) {
    if (double * g = detail::grad_of(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        g[i] += self.grad[i];
      }
    }
    if (double * g = detail::grad_of(self, 1)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        g[i] -= self.grad[i];
      }
    }
  });
}

/// Hadamard product of equally shaped tensors.
inline Tensor elementwise_mul(const Tensor & a, const Tensor & b)
{
  detail::require_same_shape(a, b, "elementwise_mul");
  std::vector<double> out(a.values());
  const auto & bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] *= bv[i];
  }
  return detail::make_result(a.shape(), std::move(out), {&a, &b}, [](TensorNode & self) {
    const auto & av = self.parents[0]->value;
    const auto & bv = self.parents[1]->value;
    if (double * g = detail::grad_of(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        g[i] += self.grad[i] * bv[i];
      }
    }
    if (double * g = detail::grad_of(self, 1)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        g[i] += self.grad[i] * av[i];
      }
    }
  });
}

inline Tensor scale(const Tensor & a, double s)
{
  std::vector<double> out(a.values());
  for (auto & v : out) {
    v *= s;
  }
  return detail::make_result(a.shape(), std::move(out), {&a}, [s](TensorNode & self) {
    if (double * g = detail::grad_of(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        g[i] += s * self.grad[i];
      }
    }
  });
}

inline Tensor relu(const Tensor & a)
{
  std::vector<double> out(a.values());
  for (auto & v : out) {
    v = v > 0.0 ? v : 0.0;
  }
  return detail::make_result(a.shape(), std::move(out), {&a}, [](TensorNode & self) {
    if (double * g = detail::grad_of(self, 0)) {
      const auto & x = self.parents[0]->value;
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        if (x[i] > 0.0) {
          g[i] += self.grad[i];
        }
      }
    }
  });
}

/// x + b where b's shape equals the trailing dimensions of x (bias, positional tables).
inline Tensor add_trailing(const Tensor & x, const Tensor & b)
{
  const auto & xs = x.shape();
  const auto & bs = b.shape();
  if (bs.size() > xs.size() || !std::equal(bs.begin(), bs.end(), xs.end() - bs.size())) {
    throw ShapeMismatch("add_trailing: " + to_string(bs) + " is not a suffix of " + to_string(xs));
  }
  const std::size_t m = b.numel();
  std::vector<double> out(x.values());
  const auto & bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] += bv[i % m];
  }
  return detail::make_result(xs, std::move(out), {&x, &b}, [m](TensorNode & self) {
    if (double * g = detail::grad_of(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        g[i] += self.grad[i];
      }
    }
    if (double * g = detail::grad_of(self, 1)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        g[i % m] += self.grad[i];
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Linear algebra

/// [n,k] x [k,m] -> [n,m]
inline Tensor matmul(const Tensor & a, const Tensor & b)
{
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeMismatch("matmul: " + to_string(a.shape()) + " x " + to_string(b.shape()));
  }
  const std::size_t n = a.dim(0), k = a.dim(1), m = b.dim(1);
  std::vector<double> out(n * m, 0.0);
  detail::gemm_nn(a.values().data(), b.values().data(), out.data(), n, k, m);
  return detail::make_result({n, m}, std::move(out), {&a, &b}, [n, k, m](TensorNode & self) {
    const double * av = self.parents[0]->value.data();
    const double * bv = self.parents[1]->value.data();
    if (double * g = detail::grad_of(self, 0)) {
      detail::gemm_nt(self.grad.data(), bv, g, n, m, k);
    }
    if (double * g = detail::grad_of(self, 1)) {
      detail::gemm_tn(av, self.grad.data(), g, n, k, m);
    }
  });
}

/// Batched [g,n,k] x [g,k,m] -> [g,n,m]
inline Tensor bmm(const Tensor & a, const Tensor & b)
{
  if (a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0) || a.dim(2) != b.dim(1)) {
    throw ShapeMismatch("bmm: " + to_string(a.shape()) + " x " + to_string(b.shape()));
  }
  const std::size_t gn = a.dim(0), n = a.dim(1), k = a.dim(2), m = b.dim(2);
  std::vector<double> out(gn * n * m, 0.0);
  for (std::size_t g = 0; g < gn; ++g) {
    detail::gemm_nn(
      a.values().data() + g * n * k, b.values().data() + g * k * m, out.data() + g * n * m, n, k,
      m);
  }
  return detail::make_result({gn, n, m}, std::move(out), {&a, &b}, [gn, n, k, m](TensorNode & self) {
    const double * av = self.parents[0]->value.data();
    const double * bv = self.parents[1]->value.data();
    double * ga = detail::grad_of(self, 0);
    double * gb = detail::grad_of(self, 1);
    for (std::size_t g = 0; g < gn; ++g) {
      const double * gy = self.grad.data() + g * n * m;
      if (ga) {
        detail::gemm_nt(gy, bv + g * k * m, ga + g * n * k, n, m, k);
      }
      if (gb) {
        detail::gemm_tn(av + g * n * k, gy, gb + g * k * m, n, k, m);
      }
    }
  });
}

/// x[..., in] W[in, out] + b[out]. `bias` may be undefined.
inline Tensor linear(const Tensor & x, const Tensor & weight, const Tensor & bias)
{
  if (weight.rank() != 2 || x.shape().back() != weight.dim(0)) {
    throw ShapeMismatch("linear: input " + to_string(x.shape()) + " weight " + to_string(weight.shape()));
  }
  const bool has_bias = bias.defined();
  if (has_bias && (bias.rank() != 1 || bias.dim(0) != weight.dim(1))) {
    throw ShapeMismatch("linear: bias " + to_string(bias.shape()) + " weight " + to_string(weight.shape()));
  }
  const std::size_t in = weight.dim(0), out_dim = weight.dim(1);
  const std::size_t rows = x.numel() / in;
  std::vector<double> out(rows * out_dim, 0.0);
  if (has_bias) {
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy(bias.values().begin(), bias.values().end(), out.begin() + r * out_dim);
    }
  }
  detail::gemm_nn(x.values().data(), weight.values().data(), out.data(), rows, in, out_dim);
  Shape shape = x.shape();
  shape.back() = out_dim;
  auto bw = [rows, in, out_dim, has_bias](TensorNode & self) {
    const double * xv = self.parents[0]->value.data();
    const double * wv = self.parents[1]->value.data();
    if (double * g = detail::grad_of(self, 0)) {
      detail::gemm_nt(self.grad.data(), wv, g, rows, out_dim, in);
    }
    if (double * g = detail::grad_of(self, 1)) {
      detail::gemm_tn(xv, self.grad.data(), g, rows, in, out_dim);
    }
    if (has_bias) {
      if (double * g = detail::grad_of(self, 2)) {
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t j = 0; j < out_dim; ++j) {
            g[j] += self.grad[r * out_dim + j];
          }
        }
      }
    }
  };
  if (has_bias) {
    return detail::make_result(std::move(shape), std::move(out), {&x, &weight, &bias}, bw);
  }
  return detail::make_result(std::move(shape), std::move(out), {&x, &weight}, bw);
}

// ---------------------------------------------------------------------------
// Normalization

/// Softmax along `axis`.
inline Tensor softmax(const Tensor & x, std::size_t axis)
{
  if (axis >= x.rank()) {
    throw ShapeMismatch("softmax: axis " + std::to_string(axis) + " for shape " + to_string(x.shape()));
  }
  const auto [outer, len, inner] = detail::split_axis(x.shape(), axis);
  const auto & xv = x.values();
  std::vector<double> out(xv.size());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * len * inner + in;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < len; ++i) {
        mx = std::max(mx, xv[base + i * inner]);
      }
      double sum = 0.0;
      for (std::size_t i = 0; i < len; ++i) {
        const double e = std::exp(xv[base + i * inner] - mx);
        out[base + i * inner] = e;
        sum += e;
      }
      for (std::size_t i = 0; i < len; ++i) {
        out[base + i * inner] /= sum;
      }
    }
  }
  return detail::make_result(
    x.shape(), std::move(out), {&x}, [outer = outer, len = len, inner = inner](TensorNode & self) {
      if (double * g = detail::grad_of(self, 0)) {
        const auto & y = self.value;
        for (std::size_t o = 0; o < outer; ++o) {
          for (std::size_t in = 0; in < inner; ++in) {
            const std::size_t base = o * len * inner + in;
            double s = 0.0;
            for (std::size_t i = 0; i < len; ++i) {
              s += self.grad[base + i * inner] * y[base + i * inner];
            }
            for (std::size_t i = 0; i < len; ++i) {
              const std::size_t idx = base + i * inner;
              g[idx] += y[idx] * (self.grad[idx] - s);
            }
          }
        }
      }
    });
}

/// Layer normalization over the last dimension with affine gamma/beta.
inline Tensor layer_norm(const Tensor & x, const Tensor & gamma, const Tensor & beta, double eps = 1e-5)
{
  const std::size_t d = x.shape().back();
  if (gamma.numel() != d || beta.numel() != d) {
    throw ShapeMismatch("layer_norm: feature size " + std::to_string(d) + " vs gamma " +
                        to_string(gamma.shape()) + " beta " + to_string(beta.shape()));
  }
  const std::size_t rows = x.numel() / d;
  const auto & xv = x.values();
  const auto & gv = gamma.values();
  const auto & bv = beta.values();
  std::vector<double> xhat(xv.size());
  std::vector<double> inv_std(rows);
  std::vector<double> out(xv.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double * row = xv.data() + r * d;
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      mean += row[j];
    }
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      var += (row[j] - mean) * (row[j] - mean);
    }
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[r] = is;
    for (std::size_t j = 0; j < d; ++j) {
      const double h = (row[j] - mean) * is;
      xhat[r * d + j] = h;
      out[r * d + j] = h * gv[j] + bv[j];
    }
  }
  return detail::make_result(
    x.shape(), std::move(out), {&x, &gamma, &beta},
    [rows, d, xhat = std::move(xhat), inv_std = std::move(inv_std)](TensorNode & self) {
      const auto & gv = self.parents[1]->value;
      double * gx = detail::grad_of(self, 0);
      double * gg = detail::grad_of(self, 1);
      double * gb = detail::grad_of(self, 2);
      for (std::size_t r = 0; r < rows; ++r) {
        const double * gy = self.grad.data() + r * d;
        const double * h = xhat.data() + r * d;
        double mean_dh = 0.0;
        double mean_dh_h = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          const double dh = gy[j] * gv[j];
          mean_dh += dh;
          mean_dh_h += dh * h[j];
          if (gg) {
            gg[j] += gy[j] * h[j];
          }
          if (gb) {
            gb[j] += gy[j];
          }
        }
        mean_dh /= static_cast<double>(d);
        mean_dh_h /= static_cast<double>(d);
        if (gx) {
          for (std::size_t j = 0; j < d; ++j) {
            gx[r * d + j] += inv_std[r] * (gy[j] * gv[j] - mean_dh - h[j] * mean_dh_h);
          }
        }
      }
    });
}

/// x / sum(x) along the last axis. Zero entries stay exactly zero.
inline Tensor renormalize(const Tensor & x)
{
  const std::size_t d = x.shape().back();
  const std::size_t rows = x.numel() / d;
  std::vector<double> out(x.values());
  std::vector<double> sums(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      s += out[r * d + j];
    }
    sums[r] = s;
    for (std::size_t j = 0; j < d; ++j) {
      out[r * d + j] /= s;
    }
  }
  return detail::make_result(
    x.shape(), std::move(out), {&x}, [rows, d, sums = std::move(sums)](TensorNode & self) {
      if (double * g = detail::grad_of(self, 0)) {
        for (std::size_t r = 0; r < rows; ++r) {
          double dot_gy = 0.0;
          for (std::size_t j = 0; j < d; ++j) {
            dot_gy += self.grad[r * d + j] * self.value[r * d + j];
          }
          for (std::size_t j = 0; j < d; ++j) {
            g[r * d + j] += (self.grad[r * d + j] - dot_gy) / sums[r];
          }
        }
      }
    });
}

// ---------------------------------------------------------------------------
// Convolutions (valid padding)

inline std::size_t conv_output_size(std::size_t input, std::size_t filter, std::size_t stride)
{
  if (filter > input || stride == 0) {
    throw ShapeMismatch("convolution filter " + std::to_string(filter) + " does not fit input " +
                        std::to_string(input));
  }
  return (input - filter) / stride + 1;
}

/// x[n, c_in, len], w[c_out, c_in, k], b[c_out] -> [n, c_out, out_len]
inline Tensor conv1d(const Tensor & x, const Tensor & w, const Tensor & b, std::size_t stride)
{
  if (x.rank() != 3 || w.rank() != 3 || x.dim(1) != w.dim(1) || b.numel() != w.dim(0)) {
    throw ShapeMismatch("conv1d: input " + to_string(x.shape()) + " filter " + to_string(w.shape()));
  }
  const std::size_t n = x.dim(0), ci = x.dim(1), len = x.dim(2);
  const std::size_t co = w.dim(0), k = w.dim(2);
  const std::size_t lo = conv_output_size(len, k, stride);
  const auto & xv = x.values();
  const auto & wv = w.values();
  std::vector<double> out(n * co * lo);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t o = 0; o < co; ++o) {
      for (std::size_t t = 0; t < lo; ++t) {
        double acc = b.values()[o];
        for (std::size_t c = 0; c < ci; ++c) {
          const double * xr = xv.data() + (s * ci + c) * len + t * stride;
          const double * wr = wv.data() + (o * ci + c) * k;
          for (std::size_t q = 0; q < k; ++q) {
            acc += xr[q] * wr[q];
          }
        }
        out[(s * co + o) * lo + t] = acc;
      }
    }
  }
  return detail::make_result(
    {n, co, lo}, std::move(out), {&x, &w, &b}, [n, ci, len, co, k, lo, stride](TensorNode & self) {
      const auto & xv = self.parents[0]->value;
      const auto & wv = self.parents[1]->value;
      double * gx = detail::grad_of(self, 0);
      double * gw = detail::grad_of(self, 1);
      double * gb = detail::grad_of(self, 2);
      for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t o = 0; o < co; ++o) {
          for (std::size_t t = 0; t < lo; ++t) {
            const double gy = self.grad[(s * co + o) * lo + t];
            if (gb) {
              gb[o] += gy;
            }
            for (std::size_t c = 0; c < ci; ++c) {
              const std::size_t xoff = (s * ci + c) * len + t * stride;
              const std::size_t woff = (o * ci + c) * k;
              for (std::size_t q = 0; q < k; ++q) {
                if (gx) {
                  gx[xoff + q] += gy * wv[woff + q];
                }
                if (gw) {
                  gw[woff + q] += gy * xv[xoff + q];
                }
              }
            }
          }
        }
      }
    });
}

/// x[n, c_in, h, w], filter[c_out, c_in, k, k], b[c_out] -> [n, c_out, h_out, w_out]
inline Tensor conv2d(const Tensor & x, const Tensor & w, const Tensor & b, std::size_t stride)
{
  if (
    x.rank() != 4 || w.rank() != 4 || x.dim(1) != w.dim(1) || w.dim(2) != w.dim(3) ||
    b.numel() != w.dim(0)) {
    throw ShapeMismatch("conv2d: input " + to_string(x.shape()) + " filter " + to_string(w.shape()));
  }
  const std::size_t n = x.dim(0), ci = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const std::size_t co = w.dim(0), k = w.dim(2);
  const std::size_t ho = conv_output_size(h, k, stride);
  const std::size_t wo = conv_output_size(wd, k, stride);
  const auto & xv = x.values();
  const auto & wv = w.values();
  std::vector<double> out(n * co * ho * wo);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t o = 0; o < co; ++o) {
      double * orow = out.data() + (s * co + o) * ho * wo;
      std::fill(orow, orow + ho * wo, b.values()[o]);
      for (std::size_t c = 0; c < ci; ++c) {
        const double * xp = xv.data() + (s * ci + c) * h * wd;
        const double * wp = wv.data() + (o * ci + c) * k * k;
        for (std::size_t i = 0; i < ho; ++i) {
          for (std::size_t j = 0; j < wo; ++j) {
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) {
              const double * xr = xp + (i * stride + p) * wd + j * stride;
              const double * wr = wp + p * k;
              for (std::size_t q = 0; q < k; ++q) {
                acc += xr[q] * wr[q];
              }
            }
            orow[i * wo + j] += acc;
          }
        }
      }
    }
  }
  return detail::make_result(
    {n, co, ho, wo}, std::move(out), {&x, &w, &b},
    [n, ci, h, wd, co, k, ho, wo, stride](TensorNode & self) {
      const auto & xv = self.parents[0]->value;
      const auto & wv = self.parents[1]->value;
      double * gx = detail::grad_of(self, 0);
      double * gw = detail::grad_of(self, 1);
      double * gb = detail::grad_of(self, 2);
      for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t o = 0; o < co; ++o) {
          const double * gy = self.grad.data() + (s * co + o) * ho * wo;
          if (gb) {
            for (std::size_t i = 0; i < ho * wo; ++i) {
              gb[o] += gy[i];
            }
          }
          for (std::size_t c = 0; c < ci; ++c) {
            const std::size_t xbase = (s * ci + c) * h * wd;
            const std::size_t wbase = (o * ci + c) * k * k;
            for (std::size_t i = 0; i < ho; ++i) {
              for (std::size_t j = 0; j < wo; ++j) {
                const double gv = gy[i * wo + j];
                if (gv == 0.0) {
                  continue;
                }
                for (std::size_t p = 0; p < k; ++p) {
                  const std::size_t xrow = xbase + (i * stride + p) * wd + j * stride;
                  const std::size_t wrow = wbase + p * k;
                  for (std::size_t q = 0; q < k; ++q) {
                    if (gw) {
                      gw[wrow + q] += gv * xv[xrow + q];
                    }
                    if (gx) {
                      gx[xrow + q] += gv * wv[wrow + q];
                    }
                  }
                }
              }
            }
          }
        }
      }
    });
}

// ---------------------------------------------------------------------------
// Shape manipulation

inline Tensor reshape(const Tensor & x, Shape shape)
{
  if (numel(shape) != x.numel()) {
    throw ShapeMismatch("reshape: " + to_string(x.shape()) + " -> " + to_string(shape));
  }
  return detail::make_result(std::move(shape), x.values(), {&x}, [](TensorNode & self) {
    if (double * g = detail::grad_of(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        g[i] += self.grad[i];
      }
    }
  });
}

/// Reorders axes: output axis i is input axis `axes[i]`.
inline Tensor permute(const Tensor & x, const std::vector<std::size_t> & axes)
{
  const std::size_t r = x.rank();
  if (axes.size() != r) {
    throw ShapeMismatch("permute: " + std::to_string(axes.size()) + " axes for rank " + std::to_string(r));
  }
  std::vector<std::size_t> in_strides(r, 1);
  for (std::size_t i = r; i-- > 1;) {
    in_strides[i - 1] = in_strides[i] * x.dim(i);
  }
  Shape out_shape(r);
  std::vector<std::size_t> strides(r);
  std::vector<bool> seen(r, false);
  for (std::size_t i = 0; i < r; ++i) {
    if (axes[i] >= r || seen[axes[i]]) {
      throw ShapeMismatch("permute: invalid axis list");
    }
    seen[axes[i]] = true;
    out_shape[i] = x.dim(axes[i]);
    strides[i] = in_strides[axes[i]];
  }
  // source index for every output element
  const std::size_t total = x.numel();
  std::vector<std::size_t> src(total);
  std::vector<std::size_t> idx(r, 0);
  std::size_t offset = 0;
  for (std::size_t lin = 0; lin < total; ++lin) {
    src[lin] = offset;
    for (std::size_t d = r; d-- > 0;) {
      ++idx[d];
      offset += strides[d];
      if (idx[d] < out_shape[d]) {
        break;
      }
      offset -= strides[d] * idx[d];
      idx[d] = 0;
    }
  }
  std::vector<double> out(total);
  const auto & xv = x.values();
  for (std::size_t i = 0; i < total; ++i) {
    out[i] = xv[src[i]];
  }
  return detail::make_result(std::move(out_shape), std::move(out), {&x}, [src = std::move(src)](TensorNode & self) {
    if (double * g = detail::grad_of(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        g[src[i]] += self.grad[i];
      }
    }
  });
}

inline Tensor concat(const std::vector<Tensor> & parts, std::size_t axis)
{
  if (parts.empty()) {
    throw ShapeMismatch("concat: no inputs");
  }
  const Shape & first = parts.front().shape();
  if (axis >= first.size()) {
    throw ShapeMismatch("concat: axis out of range for " + to_string(first));
  }
  Shape shape = first;
  shape[axis] = 0;
  std::vector<std::size_t> lens;
  for (const auto & p : parts) {
    const Shape & s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) {
      ok = i == axis || s[i] == first[i];
    }
    if (!ok) {
      throw ShapeMismatch("concat: " + to_string(s) + " incompatible with " + to_string(first));
    }
    shape[axis] += s[axis];
    lens.push_back(s[axis]);
  }
  const auto [outer, total_len, inner] = detail::split_axis(shape, axis);
  std::vector<double> out(numel(shape));
  std::size_t at = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto & pv = parts[k].values();
    const std::size_t block = lens[k] * inner;
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy(pv.begin() + o * block, pv.begin() + (o + 1) * block, out.begin() + o * total_len * inner + at);
    }
    at += block;
  }
  return detail::make_result(
    std::move(shape), std::move(out), parts,
    [lens = std::move(lens), outer = outer, total_len = total_len, inner = inner](TensorNode & self) {
      std::size_t at = 0;
      for (std::size_t k = 0; k < lens.size(); ++k) {
        const std::size_t block = lens[k] * inner;
        if (double * g = detail::grad_of(self, k)) {
          for (std::size_t o = 0; o < outer; ++o) {
            const double * src = self.grad.data() + o * total_len * inner + at;
            for (std::size_t i = 0; i < block; ++i) {
              g[o * block + i] += src[i];
            }
          }
        }
        at += block;
      }
    });
}

/// Elements [start, start + len) along `axis`.
inline Tensor slice(const Tensor & x, std::size_t axis, std::size_t start, std::size_t len)
{
  if (axis >= x.rank() || len == 0 || start + len > x.dim(axis)) {
    throw ShapeMismatch("slice: [" + std::to_string(start) + ", +" + std::to_string(len) +
                        ") on axis " + std::to_string(axis) + " of " + to_string(x.shape()));
  }
  const auto [outer, full, inner] = detail::split_axis(x.shape(), axis);
  Shape shape = x.shape();
  shape[axis] = len;
  std::vector<double> out(outer * len * inner);
  const auto & xv = x.values();
  for (std::size_t o = 0; o < outer; ++o) {
    std::copy_n(xv.begin() + (o * full + start) * inner, len * inner, out.begin() + o * len * inner);
  }
  return detail::make_result(
    std::move(shape), std::move(out), {&x},
    [outer = outer, full = full, inner = inner, start, len](TensorNode & self) {
      if (double * g = detail::grad_of(self, 0)) {
        for (std::size_t o = 0; o < outer; ++o) {
          for (std::size_t i = 0; i < len * inner; ++i) {
            g[(o * full + start) * inner + i] += self.grad[o * len * inner + i];
          }
        }
      }
    });
}

/// x[b, rows, f] -> y[b, f] with y[b] = x[b, index[b]].
inline Tensor gather_rows(const Tensor & x, const std::vector<std::size_t> & index)
{
  if (x.rank() != 3 || index.size() != x.dim(0)) {
    throw ShapeMismatch("gather_rows: input " + to_string(x.shape()) + " with " +
                        std::to_string(index.size()) + " indices");
  }
  const std::size_t bn = x.dim(0), rows = x.dim(1), f = x.dim(2);
  std::vector<double> out(bn * f);
  for (std::size_t b = 0; b < bn; ++b) {
    if (index[b] >= rows) {
      throw ShapeMismatch("gather_rows: index out of range");
    }
    std::copy_n(x.values().begin() + (b * rows + index[b]) * f, f, out.begin() + b * f);
  }
  return detail::make_result({bn, f}, std::move(out), {&x}, [index, rows, f](TensorNode & self) {
    if (double * g = detail::grad_of(self, 0)) {
      for (std::size_t b = 0; b < index.size(); ++b) {
        for (std::size_t j = 0; j < f; ++j) {
          g[(b * rows + index[b]) * f + j] += self.grad[b * f + j];
        }
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Attention

/// softmax(Q K^T / sqrt(d)) V over groups. q[g, tq, d], k[g, tk, d], v[g, tk, dv].
/// `allowed` is an optional row-major [tq, tk] mask; a zero entry hides that key.
inline Tensor scaled_dot_product_attention(
  const Tensor & q, const Tensor & k, const Tensor & v,
  const std::optional<std::vector<std::uint8_t>> & allowed = std::nullopt)
{
  if (
    q.rank() != 3 || k.rank() != 3 || v.rank() != 3 || q.dim(0) != k.dim(0) ||
    q.dim(0) != v.dim(0) || q.dim(2) != k.dim(2) || k.dim(1) != v.dim(1)) {
    throw ShapeMismatch("attention: q " + to_string(q.shape()) + " k " + to_string(k.shape()) +
                        " v " + to_string(v.shape()));
  }
  const std::size_t g = q.dim(0), tq = q.dim(1), d = q.dim(2), tk = k.dim(1), dv = v.dim(2);
  if (allowed && allowed->size() != tq * tk) {
    throw ShapeMismatch("attention: mask size does not match [tq, tk]");
  }
  const double scale_factor = 1.0 / std::sqrt(static_cast<double>(d));
  const auto & qv = q.values();
  const auto & kv = k.values();
  const auto & vv = v.values();
  std::vector<double> probs(g * tq * tk, 0.0);
  std::vector<double> out(g * tq * dv, 0.0);
  for (std::size_t gi = 0; gi < g; ++gi) {
    for (std::size_t i = 0; i < tq; ++i) {
      const double * qr = qv.data() + (gi * tq + i) * d;
      double * pr = probs.data() + (gi * tq + i) * tk;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < tk; ++j) {
        if (allowed && !(*allowed)[i * tk + j]) {
          continue;
        }
        const double * kr = kv.data() + (gi * tk + j) * d;
        double s = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
          s += qr[c] * kr[c];
        }
        pr[j] = s * scale_factor;
        mx = std::max(mx, pr[j]);
      }
      if (mx == -std::numeric_limits<double>::infinity()) {
        continue;  // fully masked row attends to nothing
      }
      double sum = 0.0;
      for (std::size_t j = 0; j < tk; ++j) {
        if (allowed && !(*allowed)[i * tk + j]) {
          pr[j] = 0.0;
          continue;
        }
        pr[j] = std::exp(pr[j] - mx);
        sum += pr[j];
      }
      double * orow = out.data() + (gi * tq + i) * dv;
      for (std::size_t j = 0; j < tk; ++j) {
        pr[j] /= sum;
        const double p = pr[j];
        if (p == 0.0) {
          continue;
        }
        const double * vr = vv.data() + (gi * tk + j) * dv;
        for (std::size_t c = 0; c < dv; ++c) {
          orow[c] += p * vr[c];
        }
      }
    }
  }
  return detail::make_result(
    {g, tq, dv}, std::move(out), {&q, &k, &v},
    [g, tq, tk, d, dv, scale_factor, probs = std::move(probs)](TensorNode & self) {
      const auto & qv = self.parents[0]->value;
      const auto & kv = self.parents[1]->value;
      const auto & vv = self.parents[2]->value;
      double * gq = detail::grad_of(self, 0);
      double * gk = detail::grad_of(self, 1);
      double * gvv = detail::grad_of(self, 2);
      std::vector<double> dp(tk);
      for (std::size_t gi = 0; gi < g; ++gi) {
        for (std::size_t i = 0; i < tq; ++i) {
          const double * pr = probs.data() + (gi * tq + i) * tk;
          const double * gy = self.grad.data() + (gi * tq + i) * dv;
          double s = 0.0;
          for (std::size_t j = 0; j < tk; ++j) {
            const double * vr = vv.data() + (gi * tk + j) * dv;
            double acc = 0.0;
            for (std::size_t c = 0; c < dv; ++c) {
              acc += gy[c] * vr[c];
            }
            dp[j] = acc;
            s += acc * pr[j];
            if (gvv && pr[j] != 0.0) {
              double * gvr = gvv + (gi * tk + j) * dv;
              for (std::size_t c = 0; c < dv; ++c) {
                gvr[c] += pr[j] * gy[c];
              }
            }
          }
          const double * qr = qv.data() + (gi * tq + i) * d;
          for (std::size_t j = 0; j < tk; ++j) {
            if (pr[j] == 0.0) {
              continue;
            }
            const double ds = pr[j] * (dp[j] - s) * scale_factor;
            const double * kr = kv.data() + (gi * tk + j) * d;
            if (gq) {
              double * gqr = gq + (gi * tq + i) * d;
              for (std::size_t c = 0; c < d; ++c) {
                gqr[c] += ds * kr[c];
              }
            }
            if (gk) {
              double * gkr = gk + (gi * tk + j) * d;
              for (std::size_t c = 0; c < d; ++c) {
                gkr[c] += ds * qr[c];
              }
            }
          }
        }
      }
    });
}

// ---------------------------------------------------------------------------
// Reductions and losses

inline Tensor sum(const Tensor & x)
{
  double s = 0.0;
  for (double v : x.values()) {
    s += v;
  }
  return detail::make_result({1}, {s}, {&x}, [](TensorNode & self) {
    if (double * g = detail::grad_of(self, 0)) {
      const std::size_t n = self.parents[0]->value.size();
      for (std::size_t i = 0; i < n; ++i) {
        g[i] += self.grad[0];
      }
    }
  });
}

inline Tensor mean(const Tensor & x) { return scale(sum(x), 1.0 / static_cast<double>(x.numel())); }

/// Mean over rows of the squared Euclidean distance along the last axis.
inline Tensor mean_squared_distance(const Tensor & pred, const Tensor & target)
{
  detail::require_same_shape(pred, target, "mean_squared_distance");
  const std::size_t rows = pred.numel() / pred.shape().back();
  double s = 0.0;
  for (std::size_t i = 0; i < pred.numel(); ++i) {
    const double e = pred[i] - target[i];
    s += e * e;
  }
  const double inv_rows = 1.0 / static_cast<double>(rows);
  return detail::make_result({1}, {s * inv_rows}, {&pred, &target}, [inv_rows](TensorNode & self) {
    const auto & pv = self.parents[0]->value;
    const auto & tv = self.parents[1]->value;
    const double gs = self.grad[0] * 2.0 * inv_rows;
    if (double * g = detail::grad_of(self, 0)) {
      for (std::size_t i = 0; i < pv.size(); ++i) {
        g[i] += gs * (pv[i] - tv[i]);
      }
    }
    if (double * g = detail::grad_of(self, 1)) {
      for (std::size_t i = 0; i < pv.size(); ++i) {
        g[i] -= gs * (pv[i] - tv[i]);
      }
    }
  });
}

/// Mean over the batch of -log(probs[b, target[b]]). probs is [b, classes].
inline Tensor cross_entropy(const Tensor & probs, const std::vector<std::size_t> & target)
{
  if (probs.rank() != 2 || target.size() != probs.dim(0)) {
    throw ShapeMismatch("cross_entropy: probs " + to_string(probs.shape()) + " with " +
                        std::to_string(target.size()) + " targets");
  }
  const std::size_t bn = probs.dim(0), c = probs.dim(1);
  double s = 0.0;
  for (std::size_t b = 0; b < bn; ++b) {
    if (target[b] >= c) {
      throw ShapeMismatch("cross_entropy: target class out of range");
    }
    s -= std::log(probs[b * c + target[b]]);
  }
  const double inv = 1.0 / static_cast<double>(bn);
  return detail::make_result({1}, {s * inv}, {&probs}, [target, c, inv](TensorNode & self) {
    if (double * g = detail::grad_of(self, 0)) {
      const auto & pv = self.parents[0]->value;
      for (std::size_t b = 0; b < target.size(); ++b) {
        const std::size_t i = b * c + target[b];
        g[i] -= self.grad[0] * inv / pv[i];
      }
    }
  });
}

}  // namespace lanecast::nn

#endif  // LANECAST__NUMERICS__OPS_HPP_
