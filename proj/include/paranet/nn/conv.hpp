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
#include <vector>

#include "paranet/nn/ops.hpp"
#include "paranet/rng.hpp"

namespace paranet::nn {

enum class Causality { kCausal, kNonCausal };

struct Conv1dOptions {
  Causality causality = Causality::kNonCausal;
  std::size_t dilation = 1;
};

/// 1-D convolution over time, output length equal to input length.
///
/// input [C_in x T], kernel [C_out x C_in x w], bias [C_out] (may be
/// undefined). Causal mode pads (w-1)*dilation zeros on the left only, so
/// output t never reads input > t. Non-causal mode needs odd w and pads
/// (w-1)/2*dilation zeros on each side.
inline Tensor conv1d(const Tensor& input, const Tensor& kernel, const Tensor& bias,
                     Conv1dOptions opt = {}) {
  if (input.rank() != 2) throw ShapeError("conv1d: input must be [C x T]");
  if (kernel.rank() != 3) throw ShapeError("conv1d: kernel must be [C_out x C_in x w]");
  const std::size_t cin = input.dim(0), len = input.dim(1);
  const std::size_t cout = kernel.dim(0), width = kernel.dim(2);
  if (kernel.dim(1) != cin) {
    throw ShapeError("conv1d: kernel expects " + std::to_string(kernel.dim(1)) +
                     " input channels, got " + std::to_string(cin));
  }
  if (bias.defined() && bias.size() != cout) throw ShapeError("conv1d: bias length");
  if (opt.dilation == 0) throw ConfigError("conv1d: dilation must be positive");
  if (opt.causality == Causality::kNonCausal && width % 2 == 0) {
    throw ConfigError("conv1d: non-causal convolution needs an odd kernel width");
  }
  const auto d = static_cast<std::ptrdiff_t>(opt.dilation);
  const auto w = static_cast<std::ptrdiff_t>(width);
  const auto T = static_cast<std::ptrdiff_t>(len);
  // Tap k reads input at t + offset(k).
  std::vector<std::ptrdiff_t> offsets(width);
  for (std::ptrdiff_t k = 0; k < w; ++k) {
    offsets[k] = opt.causality == Causality::kCausal ? -(w - 1 - k) * d
                                                     : (k - (w - 1) / 2) * d;
  }
  std::vector<double> out(cout * len, 0.0);
  const double* x = input.data().data();
  const double* kw = kernel.data().data();
  for (std::size_t o = 0; o < cout; ++o) {
    double* orow = out.data() + o * len;
    if (bias.defined()) {
      const double b = bias.at(o);
      for (std::size_t t = 0; t < len; ++t) orow[t] = b;
    }
    for (std::size_t c = 0; c < cin; ++c) {
      const double* xrow = x + c * len;
      for (std::ptrdiff_t k = 0; k < w; ++k) {
        const double wv = kw[(o * cin + c) * width + k];
        if (wv == 0.0) continue;
        const std::ptrdiff_t off = offsets[k];
        const std::ptrdiff_t t0 = std::max<std::ptrdiff_t>(0, -off);
        const std::ptrdiff_t t1 = std::min<std::ptrdiff_t>(T, T - off);
        for (std::ptrdiff_t t = t0; t < t1; ++t) orow[t] += wv * xrow[t + off];
      }
    }
  }
  std::vector<Tensor> parents{input, kernel};
  if (bias.defined()) parents.push_back(bias);
  return make_result(
      Shape{cout, len}, std::move(out), std::move(parents),
      [cin, cout, width, len, offsets](detail::Node& self) {
        const double* x = self.parents[0]->data.data();
        const double* kw = self.parents[1]->data.data();
        const double* g = self.grad.data();
        const auto T = static_cast<std::ptrdiff_t>(len);
        double* gx = grad_sink(self.parents[0]);
        double* gk = grad_sink(self.parents[1]);
        double* gb = self.parents.size() > 2 ? grad_sink(self.parents[2]) : nullptr;
        for (std::size_t o = 0; o < cout; ++o) {
          const double* grow = g + o * len;
          if (gb) {
            double acc = 0.0;
            for (std::size_t t = 0; t < len; ++t) acc += grow[t];
            gb[o] += acc;
          }
          for (std::size_t c = 0; c < cin; ++c) {
            const double* xrow = x + c * len;
            for (std::size_t k = 0; k < width; ++k) {
              const std::ptrdiff_t off = offsets[k];
              const std::ptrdiff_t t0 = std::max<std::ptrdiff_t>(0, -off);
              const std::ptrdiff_t t1 = std::min<std::ptrdiff_t>(T, T - off);
              const std::size_t widx = (o * cin + c) * width + k;
              if (gk) {
                double acc = 0.0;
                for (std::ptrdiff_t t = t0; t < t1; ++t) acc += grow[t] * xrow[t + off];
                gk[widx] += acc;
              }
              if (gx) {
                const double wv = kw[widx];
                if (wv == 0.0) continue;
                double* gxrow = gx + c * len;
                for (std::ptrdiff_t t = t0; t < t1; ++t) gxrow[t + off] += wv * grow[t];
              }
            }
          }
        }
      });
}

/// Gated linear unit: first channel half times sigmoid of the second half.
inline Tensor glu(const Tensor& x) {
  if (x.rank() != 2) throw ShapeError("glu: input must be [2c x T]");
  if (x.dim(0) % 2 != 0) {
    throw ShapeError("glu: channel count " + std::to_string(x.dim(0)) + " is odd");
  }
  const std::size_t half = x.dim(0) / 2, len = x.dim(1), n = half * len;
  std::vector<double> out(n);
  const auto in = x.data();
  for (std::size_t i = 0; i < n; ++i) out[i] = in[i] * sigmoid_scalar(in[n + i]);
  return make_result(Shape{half, len}, std::move(out), {x}, [n](detail::Node& self) {
    double* g = grad_sink(self.parents[0]);
    if (!g) return;
    const auto& in = self.parents[0]->data;
    for (std::size_t i = 0; i < n; ++i) {
      const double s = sigmoid_scalar(in[n + i]);
      g[i] += self.grad[i] * s;
      g[n + i] += self.grad[i] * in[i] * s * (1.0 - s);
    }
  });
}

/// Inverted dropout. Identity when `training` is false or keep == 1.
inline Tensor dropout(const Tensor& x, double keep, bool training, Rng& rng) {
  if (!(keep > 0.0 && keep <= 1.0)) throw ConfigError("dropout: keep must be in (0, 1]");
  if (!training || keep == 1.0) return x;
  std::vector<double> mask(x.size());
  for (auto& m : mask) m = rng.bernoulli(keep) ? 1.0 / keep : 0.0;
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.at(i) * mask[i];
  return make_result(x.shape(), std::move(out), {x},
                     [mask = std::move(mask)](detail::Node& self) {
                       if (double* g = grad_sink(self.parents[0])) {
                         for (std::size_t i = 0; i < mask.size(); ++i)
                           g[i] += self.grad[i] * mask[i];
                       }
                     });
}

/// Parameters of the gated residual convolution block.
struct ConvBlockParams {
  Tensor kernel;  // [2c x c x w]
  Tensor bias;    // [2c]
  Causality causality = Causality::kNonCausal;
  std::size_t dilation = 1;
  double dropout_keep = 1.0;
  double residual_scale = std::sqrt(0.5);

  std::size_t channels() const { return kernel.dim(1); }
  std::size_t width() const { return kernel.dim(2); }
};

/// (glu(conv1d(dropout(x))) + x) * residual_scale.
inline Tensor conv_block(const Tensor& x, const ConvBlockParams& p, bool training,
                         Rng& rng) {
  if (p.kernel.dim(0) != 2 * p.kernel.dim(1)) {
    throw ShapeError("conv_block: kernel must map c channels to 2c");
  }
  if (x.dim(0) != p.kernel.dim(1)) {
    throw ShapeError("conv_block: input has " + std::to_string(x.dim(0)) +
                     " channels, block expects " + std::to_string(p.kernel.dim(1)));
  }
  Tensor h = dropout(x, p.dropout_keep, training, rng);
  h = conv1d(h, p.kernel, p.bias, {p.causality, p.dilation});
  h = glu(h);
  return scale(add(h, x), p.residual_scale);
}

/// Single-channel transposed 2-D convolution used for upsampling a
/// [freq x frames] map along time by `stride`. The kernel is [kf x kt] with
/// odd kf (frequency "same" padding); every input cell scatters
/// kernel-weighted copies to output columns t*stride + j - crop, and the
/// result is cropped to exactly frames * stride columns.
inline Tensor conv_transpose2d_time(const Tensor& x, const Tensor& kernel,
                                    const Tensor& bias, std::size_t stride) {
  if (x.rank() != 2 || kernel.rank() != 2) throw ShapeError("conv_transpose2d: rank");
  if (stride == 0) throw ConfigError("conv_transpose2d: stride must be positive");
  const std::size_t freq = x.dim(0), frames = x.dim(1);
  const std::size_t kf = kernel.dim(0), kt = kernel.dim(1);
  if (kf % 2 == 0) throw ConfigError("conv_transpose2d: frequency kernel must be odd");
  if (bias.defined() && bias.size() != 1) throw ShapeError("conv_transpose2d: bias");
  const std::size_t out_len = frames * stride;
  const auto crop = static_cast<std::ptrdiff_t>((kt - stride) / 2);
  const auto half_f = static_cast<std::ptrdiff_t>(kf / 2);
  std::vector<double> out(freq * out_len, bias.defined() ? bias.item() : 0.0);
  const double* xv = x.data().data();
  const double* kv = kernel.data().data();
  for (std::size_t f = 0; f < freq; ++f) {
    for (std::size_t t = 0; t < frames; ++t) {
      const double v = xv[f * frames + t];
      if (v == 0.0) continue;
      for (std::size_t a = 0; a < kf; ++a) {
        const std::ptrdiff_t fo = static_cast<std::ptrdiff_t>(f) + static_cast<std::ptrdiff_t>(a) - half_f;
        if (fo < 0 || fo >= static_cast<std::ptrdiff_t>(freq)) continue;
        for (std::size_t j = 0; j < kt; ++j) {
          const std::ptrdiff_t to = static_cast<std::ptrdiff_t>(t * stride + j) - crop;
          if (to < 0 || to >= static_cast<std::ptrdiff_t>(out_len)) continue;
          out[fo * out_len + to] += v * kv[a * kt + j];
        }
      }
    }
  }
  std::vector<Tensor> parents{x, kernel};
  if (bias.defined()) parents.push_back(bias);
  return make_result(
      Shape{freq, out_len}, std::move(out), std::move(parents),
      [freq, frames, kf, kt, stride, out_len, crop, half_f](detail::Node& self) {
        const double* xv = self.parents[0]->data.data();
        const double* kv = self.parents[1]->data.data();
        const double* g = self.grad.data();
        double* gx = grad_sink(self.parents[0]);
        double* gk = grad_sink(self.parents[1]);
        double* gb = self.parents.size() > 2 ? grad_sink(self.parents[2]) : nullptr;
        if (gb) {
          double acc = 0.0;
          for (std::size_t i = 0; i < self.grad.size(); ++i) acc += g[i];
          gb[0] += acc;
        }
        for (std::size_t f = 0; f < freq; ++f) {
          for (std::size_t t = 0; t < frames; ++t) {
            const double v = xv[f * frames + t];
            double gacc = 0.0;
            for (std::size_t a = 0; a < kf; ++a) {
              const std::ptrdiff_t fo = static_cast<std::ptrdiff_t>(f) + static_cast<std::ptrdiff_t>(a) - half_f;
              if (fo < 0 || fo >= static_cast<std::ptrdiff_t>(freq)) continue;
              for (std::size_t j = 0; j < kt; ++j) {
                const std::ptrdiff_t to = static_cast<std::ptrdiff_t>(t * stride + j) - crop;
                if (to < 0 || to >= static_cast<std::ptrdiff_t>(out_len)) continue;
                const double gy = g[fo * out_len + to];
                gacc += gy * kv[a * kt + j];
                if (gk) gk[a * kt + j] += gy * v;
              }
            }
            if (gx) gx[f * frames + t] += gacc;
          }
        }
      });
}

}  // namespace paranet::nn
