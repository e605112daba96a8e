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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "paranet/errors.hpp"
#include "paranet/nn/tensor.hpp"

namespace paranet::nn {

struct OptimizerState {
  std::uint64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clip_value = 5.0;
  double clip_norm = 100.0;
};

struct AdamStepReport {
  double grad_norm = 0.0;  // before clipping
  bool norm_clipped = false;
};

/// One Adam update on `params` using their accumulated gradients.
///
/// Gradients are first rescaled so their global L2 norm is at most
/// clip_norm, then clamped elementwise to ±clip_value, then the
/// bias-corrected Adam rule is applied. A NaN/inf gradient aborts the step
/// before any parameter or moment changes. Parameters without a gradient
/// buffer are treated as having a zero gradient.
inline AdamStepReport adam_step(std::vector<Tensor>& params, OptimizerState& state) {
  if (!(state.clip_value > 0.0) || !(state.clip_norm > 0.0)) {
    throw ConfigError("adam_step: clip_value and clip_norm must be positive");
  }
  if (state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.emplace_back(p.size(), 0.0);
      state.second_moment.emplace_back(p.size(), 0.0);
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw ShapeError("adam_step: optimizer state tracks a different parameter list");
  }
  double sq = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (state.first_moment[k].size() != params[k].size()) {
      throw ShapeError("adam_step: moment shape mismatch for parameter " + std::to_string(k));
    }
    if (!params[k].has_grad()) continue;
    for (double g : params[k].grad()) {
      if (!std::isfinite(g)) {
        throw NumericError("adam_step: non-finite gradient in parameter " + std::to_string(k));
      }
      sq += g * g;
    }
  }
  AdamStepReport report;
  report.grad_norm = std::sqrt(sq);
  const double norm_scale =
      report.grad_norm > state.clip_norm ? state.clip_norm / report.grad_norm : 1.0;
  report.norm_clipped = norm_scale < 1.0;

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto data = params[k].mutable_data();
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    const bool has = params[k].has_grad();
    const auto grad = params[k].grad();
    for (std::size_t i = 0; i < data.size(); ++i) {
      double g = has ? grad[i] * norm_scale : 0.0;
      g = std::clamp(g, -state.clip_value, state.clip_value);
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      data[i] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
    }
  }
  return report;
}

}  // namespace paranet::nn
