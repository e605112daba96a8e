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
#include <string>
#include <utility>
#include <vector>

#include "paranet/nn/conv.hpp"
#include "paranet/rng.hpp"

namespace paranet::nn {

/// Ordered (name, tensor) list. Order is registration order and defines the
/// checkpoint layout.
using NamedParams = std::vector<std::pair<std::string, Tensor>>;

inline std::size_t count_parameters(const NamedParams& params) {
  std::size_t n = 0;
  for (const auto& [name, t] : params) n += t.size();
  return n;
}

inline std::vector<Tensor> tensors_of(const NamedParams& params) {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const auto& [name, t] : params) out.push_back(t);
  return out;
}

inline void zero_grads(const NamedParams& params) {
  for (auto [name, t] : params) t.zero_grad();
}

/// Uniform in ±sqrt(6 / (fan_in + fan_out)).
inline Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out,
                             Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<double> data(numel(shape));
  for (auto& v : data) v = rng.uniform(-limit, limit);
  return Tensor(std::move(shape), std::move(data), true);
}

inline Tensor zeros_param(Shape shape) { return Tensor(std::move(shape), 0.0, true); }

/// Per-time-step affine map (a 1x1 convolution).
struct Linear {
  Tensor weight;  // [out x in]
  Tensor bias;    // [out]

  static Linear create(std::size_t in, std::size_t out, Rng& rng) {
    return {glorot_uniform({out, in}, in, out, rng), zeros_param({out})};
  }
  Tensor operator()(const Tensor& x) const { return affine(x, weight, bias); }
  void collect(NamedParams& out, const std::string& prefix) const {
    out.emplace_back(prefix + ".weight", weight);
    out.emplace_back(prefix + ".bias", bias);
  }
  std::size_t in_features() const { return weight.dim(1); }
  std::size_t out_features() const { return weight.dim(0); }
};

inline ConvBlockParams make_conv_block(std::size_t channels, std::size_t width,
                                       Causality causality, double dropout_keep,
                                       Rng& rng, std::size_t dilation = 1) {
  ConvBlockParams p;
  p.kernel = glorot_uniform({2 * channels, channels, width}, channels * width,
                            2 * channels * width, rng);
  p.bias = zeros_param({2 * channels});
  p.causality = causality;
  p.dilation = dilation;
  p.dropout_keep = dropout_keep;
  return p;
}

inline void collect_block(const ConvBlockParams& p, NamedParams& out,
                          const std::string& prefix) {
  out.emplace_back(prefix + ".kernel", p.kernel);
  out.emplace_back(prefix + ".bias", p.bias);
}

}  // namespace paranet::nn
