// Copyright 2026 The ParaNet Desk Authors.
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

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "paranet/nn/tensor.hpp"

namespace paranet::nn {

namespace detail {

inline void require_same_shape(const Tensor& a, const Tensor& b,
                               const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape " + shape_str(a.shape()) +
                     " vs " + shape_str(b.shape()));
  }
}

inline void require_rank2(const Tensor& a, const char* op) {
  if (a.rank() != 2) {
    throw ShapeError(std::string(op) + ": expected rank-2 tensor, got " +
                     shape_str(a.shape()));
  }
}

// y = f(x) elementwise; dfdx(x, y) gives the local derivative.
template <class F, class D>
Tensor unary(const Tensor& x, F f, D dfdx) {
  std::vector<double> out(x.size());
  const auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
  return make_result(x.shape(), std::move(out), {x}, [dfdx](Node& self) {
    double* gx = grad_sink(self.parents[0]);
    if (!gx) return;
    const auto& xin = self.parents[0]->data;
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      gx[i] += self.grad[i] * dfdx(xin[i], self.data[i]);
    }
  });
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise binary ops (identical shapes).

inline Tensor add(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) + b.at(i);
  return make_result(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    for (int p = 0; p < 2; ++p) {
      if (double* g = grad_sink(self.parents[p])) {
        for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
      }
    }
  });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "sub");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) - b.at(i);
  return make_result(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    if (double* g = grad_sink(self.parents[0])) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    }
    if (double* g = grad_sink(self.parents[1])) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "mul");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) * b.at(i);
  return make_result(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    const auto& av = self.parents[0]->data;
    const auto& bv = self.parents[1]->data;
    if (double* g = grad_sink(self.parents[0])) {
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        g[i] += self.grad[i] * bv[i];
    }
    if (double* g = grad_sink(self.parents[1])) {
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        g[i] += self.grad[i] * av[i];
    }
  });
}

inline Tensor div(const Tensor& a, const Tensor& b) {
  detail::require_same_shape(a, b, "div");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) / b.at(i);
  return make_result(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    const auto& bv = self.parents[1]->data;
    if (double* g = grad_sink(self.parents[0])) {
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        g[i] += self.grad[i] / bv[i];
    }
    if (double* g = grad_sink(self.parents[1])) {
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        g[i] -= self.grad[i] * self.data[i] / bv[i];
    }
  });
}

inline Tensor scale(const Tensor& x, double s) {
  return detail::unary(
      x, [s](double v) { return v * s; },
      [s](double, double) { return s; });
}

inline Tensor shift(const Tensor& x, double s) {
  return detail::unary(
      x, [s](double v) { return v + s; }, [](double, double) { return 1.0; });
}

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }
inline Tensor operator*(const Tensor& a, double s) { return scale(a, s); }
inline Tensor operator*(double s, const Tensor& a) { return scale(a, s); }
inline Tensor operator+(const Tensor& a, double s) { return shift(a, s); }
inline Tensor operator-(const Tensor& a) { return scale(a, -1.0); }

/// x * s where s is a single-element tensor (e.g. a trainable scalar).
inline Tensor mul_scalar(const Tensor& x, const Tensor& s) {
  if (s.size() != 1) throw ShapeError("mul_scalar: scalar must have one element");
  const double sv = s.item();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.at(i) * sv;
  return make_result(x.shape(), std::move(out), {x, s}, [](detail::Node& self) {
    const auto& xv = self.parents[0]->data;
    const double sv = self.parents[1]->data[0];
    if (double* g = grad_sink(self.parents[0])) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * sv;
    }
    if (double* g = grad_sink(self.parents[1])) {
      double acc = 0.0;
      for (std::size_t i = 0; i < self.grad.size(); ++i) acc += self.grad[i] * xv[i];
      g[0] += acc;
    }
  });
}

/// Broadcasts a single-element tensor to `shape`.
inline Tensor expand_scalar(const Tensor& s, const Shape& shape) {
  if (s.size() != 1) throw ShapeError("expand_scalar: need one element");
  return make_result(shape, std::vector<double>(numel(shape), s.item()), {s},
                     [](detail::Node& self) {
                       if (double* g = grad_sink(self.parents[0])) {
                         double acc = 0.0;
                         for (double v : self.grad) acc += v;
                         g[0] += acc;
                       }
                     });
}

// ---------------------------------------------------------------------------
// Elementwise unary ops.

inline Tensor exp(const Tensor& x) {
  return detail::unary(
      x, [](double v) { return std::exp(v); },
      [](double, double y) { return y; });
}

inline Tensor log(const Tensor& x) {
  return detail::unary(
      x, [](double v) { return std::log(v); },
      [](double v, double) { return 1.0 / v; });
}

inline double sigmoid_scalar(double v) {
  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

inline Tensor sigmoid(const Tensor& x) {
  return detail::unary(
      x, [](double v) { return sigmoid_scalar(v); },
      [](double, double y) { return y * (1.0 - y); });
}

inline Tensor tanh(const Tensor& x) {
  return detail::unary(
      x, [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

inline Tensor relu(const Tensor& x) {
  return detail::unary(
      x, [](double v) { return v > 0 ? v : 0.0; },
      [](double v, double) { return v > 0 ? 1.0 : 0.0; });
}

inline Tensor leaky_relu(const Tensor& x, double slope) {
  return detail::unary(
      x, [slope](double v) { return v > 0 ? v : slope * v; },
      [slope](double v, double) { return v > 0 ? 1.0 : slope; });
}

inline Tensor square(const Tensor& x) {
  return detail::unary(
      x, [](double v) { return v * v; },
      [](double v, double) { return 2.0 * v; });
}

inline Tensor sqrt(const Tensor& x) {
  return detail::unary(
      x, [](double v) { return std::sqrt(v); },
      [](double, double y) { return 0.5 / y; });
}

inline Tensor abs(const Tensor& x) {
  return detail::unary(
      x, [](double v) { return std::abs(v); },
      [](double v, double) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); });
}

/// Clamp with zero gradient outside [lo, hi].
inline Tensor clamp(const Tensor& x, double lo, double hi) {
  return detail::unary(
      x, [lo, hi](double v) { return std::clamp(v, lo, hi); },
      [lo, hi](double v, double) { return (v >= lo && v <= hi) ? 1.0 : 0.0; });
}

// ---------------------------------------------------------------------------
// Reductions.

inline Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  return make_result(Shape{1}, {acc}, {x}, [](detail::Node& self) {
    if (double* g = grad_sink(self.parents[0])) {
      const double up = self.grad[0];
      const std::size_t n = self.parents[0]->data.size();
      for (std::size_t i = 0; i < n; ++i) g[i] += up;
    }
  });
}

inline Tensor mean(const Tensor& x) {
  return scale(sum(x), 1.0 / static_cast<double>(x.size()));
}

/// Σ w_i x_i with constant weights.
inline Tensor weighted_sum(const Tensor& x, std::vector<double> weights) {
  if (weights.size() != x.size()) throw ShapeError("weighted_sum: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) acc += weights[i] * x.at(i);
  return make_result(Shape{1}, {acc}, {x},
                     [w = std::move(weights)](detail::Node& self) {
                       if (double* g = grad_sink(self.parents[0])) {
                         const double up = self.grad[0];
                         for (std::size_t i = 0; i < w.size(); ++i) g[i] += up * w[i];
                       }
                     });
}

/// Euclidean (Frobenius) norm of all entries; the gradient at zero is zero.
inline Tensor l2_norm(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.data()) acc += v * v;
  return make_result(Shape{1}, {std::sqrt(acc)}, {x}, [](detail::Node& self) {
    double* g = grad_sink(self.parents[0]);
    const double norm = self.data[0];
    if (!g || norm == 0.0) return;
    const auto& xv = self.parents[0]->data;
    const double up = self.grad[0] / norm;
    for (std::size_t i = 0; i < xv.size(); ++i) g[i] += up * xv[i];
  });
}

/// Sum of several single-element tensors.
inline Tensor sum_scalars(const std::vector<Tensor>& terms) {
  if (terms.empty()) return Tensor::scalar(0.0);
  Tensor acc = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) acc = add(acc, terms[i]);
  return acc;
}

// ---------------------------------------------------------------------------
// Linear algebra.

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  detail::require_rank2(a, "matmul");
  detail::require_rank2(b, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw ShapeError("matmul: " + shape_str(a.shape()) + " * " + shape_str(b.shape()));
  }
  std::vector<double> out(m * n, 0.0);
  const double* av = a.data().data();
  const double* bv = b.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double s = av[i * k + p];
      if (s == 0.0) continue;
      const double* brow = bv + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += s * brow[j];
    }
  }
  return make_result(Shape{m, n}, std::move(out), {a, b},
                     [m, k, n](detail::Node& self) {
                       const double* av = self.parents[0]->data.data();
                       const double* bv = self.parents[1]->data.data();
                       const double* g = self.grad.data();
                       if (double* ga = grad_sink(self.parents[0])) {
                         // dA = G * B^T
                         for (std::size_t i = 0; i < m; ++i) {
                           for (std::size_t p = 0; p < k; ++p) {
                             const double* brow = bv + p * n;
                             const double* grow = g + i * n;
                             double acc = 0.0;
                             for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
                             ga[i * k + p] += acc;
                           }
                         }
                       }
                       if (double* gb = grad_sink(self.parents[1])) {
                         // dB = A^T * G
                         for (std::size_t i = 0; i < m; ++i) {
                           const double* grow = g + i * n;
                           for (std::size_t p = 0; p < k; ++p) {
                             const double s = av[i * k + p];
                             if (s == 0.0) continue;
                             double* brow = gb + p * n;
                             for (std::size_t j = 0; j < n; ++j) brow[j] += s * grow[j];
                           }
                         }
                       }
                     });
}

inline Tensor transpose(const Tensor& a) {
  detail::require_rank2(a, "transpose");
  const std::size_t r = a.dim(0), c = a.dim(1);
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = a.at(i * c + j);
  return make_result(Shape{c, r}, std::move(out), {a}, [r, c](detail::Node& self) {
    if (double* g = grad_sink(self.parents[0])) {
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) g[i * c + j] += self.grad[j * r + i];
    }
  });
}

/// x[C x T] + b[C] broadcast over time.
inline Tensor add_bias(const Tensor& x, const Tensor& b) {
  detail::require_rank2(x, "add_bias");
  const std::size_t rows = x.dim(0), cols = x.dim(1);
  if (b.size() != rows) throw ShapeError("add_bias: bias length mismatch");
  std::vector<double> out(x.values());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] += b.at(r);
  return make_result(x.shape(), std::move(out), {x, b},
                     [rows, cols](detail::Node& self) {
                       if (double* g = grad_sink(self.parents[0])) {
                         for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
                       }
                       if (double* g = grad_sink(self.parents[1])) {
                         for (std::size_t r = 0; r < rows; ++r) {
                           double acc = 0.0;
                           for (std::size_t c = 0; c < cols; ++c) acc += self.grad[r * cols + c];
                           g[r] += acc;
                         }
                       }
                     });
}

/// Affine map applied per time step: W[out x in] * x[in x T] + b[out].
inline Tensor affine(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  return add_bias(matmul(weight, x), bias);
}

// ---------------------------------------------------------------------------
// Softmax over the last axis of a rank-2 tensor with an optional mask.
// `allowed` (row-major, same size) marks entries that may receive weight;
// disallowed entries are exactly zero in the output.

inline Tensor softmax_rows(const Tensor& x,
                           const std::vector<std::uint8_t>* allowed = nullptr) {
  detail::require_rank2(x, "softmax_rows");
  const std::size_t rows = x.dim(0), cols = x.dim(1);
  if (allowed && allowed->size() != x.size()) {
    throw ShapeError("softmax_rows: mask shape mismatch");
  }
  std::vector<double> out(x.size(), 0.0);
  const auto in = x.data();
  for (std::size_t r = 0; r < rows; ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t c = 0; c < cols; ++c) {
      if (allowed && !(*allowed)[r * cols + c]) continue;
      mx = std::max(mx, in[r * cols + c]);
      any = true;
    }
    if (!any) {
      throw ContractError("attention mask disallows every key for query " +
                          std::to_string(r));
    }
    double z = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      if (allowed && !(*allowed)[r * cols + c]) continue;
      const double e = std::exp(in[r * cols + c] - mx);
      out[r * cols + c] = e;
      z += e;
    }
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] /= z;
  }
  return make_result(x.shape(), std::move(out), {x}, [rows, cols](detail::Node& self) {
    double* g = grad_sink(self.parents[0]);
    if (!g) return;
    for (std::size_t r = 0; r < rows; ++r) {
      const double* y = self.data.data() + r * cols;
      const double* gy = self.grad.data() + r * cols;
      double dot = 0.0;
      for (std::size_t c = 0; c < cols; ++c) dot += y[c] * gy[c];
      for (std::size_t c = 0; c < cols; ++c) g[r * cols + c] += y[c] * (gy[c] - dot);
    }
  });
}

// ---------------------------------------------------------------------------
// Slicing and concatenation on [rows x cols] tensors.

inline Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end) {
  detail::require_rank2(x, "slice_rows");
  const std::size_t cols = x.dim(1);
  if (begin >= end || end > x.dim(0)) throw ShapeError("slice_rows: bad range");
  std::vector<double> out(x.data().begin() + begin * cols, x.data().begin() + end * cols);
  return make_result(Shape{end - begin, cols}, std::move(out), {x},
                     [begin, cols](detail::Node& self) {
                       if (double* g = grad_sink(self.parents[0])) {
                         for (std::size_t i = 0; i < self.grad.size(); ++i)
                           g[begin * cols + i] += self.grad[i];
                       }
                     });
}

inline Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end) {
  detail::require_rank2(x, "slice_cols");
  const std::size_t rows = x.dim(0), cols = x.dim(1);
  if (begin >= end || end > cols) throw ShapeError("slice_cols: bad range");
  const std::size_t w = end - begin;
  std::vector<double> out(rows * w);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < w; ++c) out[r * w + c] = x.at(r * cols + begin + c);
  return make_result(Shape{rows, w}, std::move(out), {x},
                     [rows, cols, begin, w](detail::Node& self) {
                       if (double* g = grad_sink(self.parents[0])) {
                         for (std::size_t r = 0; r < rows; ++r)
                           for (std::size_t c = 0; c < w; ++c)
                             g[r * cols + begin + c] += self.grad[r * w + c];
                       }
                     });
}

inline Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const std::size_t cols = parts[0].dim(1);
  std::size_t rows = 0;
  std::vector<double> out;
  for (const auto& p : parts) {
    detail::require_rank2(p, "concat_rows");
    if (p.dim(1) != cols) throw ShapeError("concat_rows: column mismatch");
    rows += p.dim(0);
    out.insert(out.end(), p.data().begin(), p.data().end());
  }
  return make_result(Shape{rows, cols}, std::move(out), parts, [](detail::Node& self) {
    std::size_t offset = 0;
    for (auto& parent : self.parents) {
      const std::size_t n = parent->data.size();
      if (double* g = grad_sink(parent)) {
        for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[offset + i];
      }
      offset += n;
    }
  });
}

inline Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const std::size_t rows = parts[0].dim(0);
  std::size_t cols = 0;
  for (const auto& p : parts) {
    detail::require_rank2(p, "concat_cols");
    if (p.dim(0) != rows) throw ShapeError("concat_cols: row mismatch");
    cols += p.dim(1);
  }
  std::vector<double> out(rows * cols);
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    const std::size_t w = p.dim(1);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < w; ++c) out[r * cols + off + c] = p.at(r * w + c);
    off += w;
  }
  return make_result(Shape{rows, cols}, std::move(out), parts,
                     [rows, cols, offsets](detail::Node& self) {
                       for (std::size_t k = 0; k < self.parents.size(); ++k) {
                         auto& parent = self.parents[k];
                         if (double* g = grad_sink(parent)) {
                           const std::size_t w = parent->shape[1];
                           for (std::size_t r = 0; r < rows; ++r)
                             for (std::size_t c = 0; c < w; ++c)
                               g[r * w + c] += self.grad[r * cols + offsets[k] + c];
                         }
                       }
                     });
}

/// Delays every row by `n` columns, filling the front with zeros.
inline Tensor shift_right(const Tensor& x, std::size_t n) {
  detail::require_rank2(x, "shift_right");
  const std::size_t rows = x.dim(0), cols = x.dim(1);
  std::vector<double> out(x.size(), 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = n; c < cols; ++c) out[r * cols + c] = x.at(r * cols + c - n);
  return make_result(x.shape(), std::move(out), {x}, [rows, cols, n](detail::Node& self) {
    if (double* g = grad_sink(self.parents[0])) {
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = n; c < cols; ++c) g[r * cols + c - n] += self.grad[r * cols + c];
    }
  });
}

inline Tensor reshape(const Tensor& x, Shape shape) {
  if (numel(shape) != x.size()) throw ShapeError("reshape: element count mismatch");
  return make_result(std::move(shape), x.values(), {x}, [](detail::Node& self) {
    if (double* g = grad_sink(self.parents[0])) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    }
  });
}

/// Gathers columns of a [vocab x dim] table into a [dim x ids] matrix.
inline Tensor embedding(const Tensor& table, const std::vector<std::size_t>& ids) {
  detail::require_rank2(table, "embedding");
  const std::size_t vocab = table.dim(0), dim = table.dim(1);
  if (ids.empty()) throw ContractError("embedding: empty id sequence");
  const std::size_t m = ids.size();
  std::vector<double> out(dim * m);
  for (std::size_t j = 0; j < m; ++j) {
    if (ids[j] >= vocab) {
      throw ContractError("embedding: token id " + std::to_string(ids[j]) +
                          " out of range for vocabulary of " + std::to_string(vocab));
    }
    for (std::size_t d = 0; d < dim; ++d) out[d * m + j] = table.at(ids[j] * dim + d);
  }
  return make_result(Shape{dim, m}, std::move(out), {table},
                     [ids, dim, m](detail::Node& self) {
                       if (double* g = grad_sink(self.parents[0])) {
                         for (std::size_t j = 0; j < m; ++j)
                           for (std::size_t d = 0; d < dim; ++d)
                             g[ids[j] * dim + d] += self.grad[d * m + j];
                       }
                     });
}

// ---------------------------------------------------------------------------
// Losses.

/// Mean |pred - target| over entries whose weight is non-zero. Entries with
/// zero weight contribute nothing, including no gradient.
inline Tensor masked_l1(const Tensor& pred, const Tensor& target,
                        const std::vector<double>& valid) {
  detail::require_same_shape(pred, target, "masked_l1");
  if (valid.size() != pred.size()) throw ShapeError("masked_l1: mask size mismatch");
  double count = 0.0;
  for (double v : valid) count += v != 0.0 ? 1.0 : 0.0;
  if (count == 0.0) throw ContractError("masked_l1: nothing to compare");
  double acc = 0.0;
  for (std::size_t i = 0; i < valid.size(); ++i) {
    if (valid[i] != 0.0) acc += std::abs(pred.at(i) - target.at(i));
  }
  return make_result(Shape{1}, {acc / count}, {pred, target},
                     [valid, count](detail::Node& self) {
                       const auto& p = self.parents[0]->data;
                       const auto& t = self.parents[1]->data;
                       const double up = self.grad[0] / count;
                       double* gp = grad_sink(self.parents[0]);
                       double* gt = grad_sink(self.parents[1]);
                       for (std::size_t i = 0; i < valid.size(); ++i) {
                         if (valid[i] == 0.0) continue;
                         const double d = p[i] - t[i];
                         const double s = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
                         if (gp) gp[i] += up * s;
                         if (gt) gt[i] -= up * s;
                       }
                     });
}

}  // namespace paranet::nn
