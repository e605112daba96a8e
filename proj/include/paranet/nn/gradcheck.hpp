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

// Central finite-difference gradient checks.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "paranet/nn/tensor.hpp"
#include "paranet/rng.hpp"

namespace paranet::nn {

struct GradCheckOptions {
  double step = 1e-5;
  double floor = 1e-8;
  /// Check at most this many elements per tensor (0 = all), sampled with `seed`.
  std::size_t max_elements = 0;
  std::uint64_t seed = 0;
  /// With n > 1, each element is differenced at step, step/10, ..., step/10^(n-1)
  /// and the estimate at step h is scored by |D(h) - D(h/10)| + eps * |f| / h
  /// (truncation plus round-off). The best-scoring D(h) is used. The analytic
  /// value plays no part in the choice.
  int decades = 1;
};

namespace detail {

inline double eval_scalar(const std::function<Tensor()>& f) {
  NoGradGuard guard;
  const Tensor y = f();
  if (y.size() != 1) throw ContractError("grad_check: function must be scalar-valued");
  const double v = y.item();
  if (!std::isfinite(v)) throw NumericError("grad_check: function value is not finite");
  return v;
}

}  // namespace detail

/// Max over the checked elements of every tensor in `inputs` of
/// |analytic - numeric| / max(|analytic|, |numeric|, floor).
/// `f` must rebuild its graph from the current values of `inputs`.
inline double grad_check(const std::function<Tensor()>& f, std::vector<Tensor> inputs,
                         const GradCheckOptions& opt = {}) {
  for (auto& x : inputs) {
    x.set_requires_grad(true);
    x.zero_grad();
  }
  const Tensor y = f();
  if (y.size() != 1) throw ContractError("grad_check: function must be scalar-valued");
  if (!std::isfinite(y.item())) throw NumericError("grad_check: function value is not finite");
  backward(y);

  const double roundoff = std::numeric_limits<double>::epsilon() * std::abs(y.item());
  Rng rng(opt.seed);
  double worst = 0.0;
  for (auto& x : inputs) {
    std::vector<double> analytic(x.size(), 0.0);
    if (x.has_grad()) std::copy(x.grad().begin(), x.grad().end(), analytic.begin());
    std::vector<std::size_t> idx(x.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    if (opt.max_elements && idx.size() > opt.max_elements) {
      std::shuffle(idx.begin(), idx.end(), rng.engine());
      idx.resize(opt.max_elements);
    }
    auto data = x.mutable_data();
    for (std::size_t i : idx) {
      const double orig = data[i];
      const auto central = [&](double h) {
        data[i] = orig + h;
        const double up = detail::eval_scalar(f);
        data[i] = orig - h;
        const double down = detail::eval_scalar(f);
        data[i] = orig;
        return (up - down) / (2.0 * h);
      };
      double numeric = central(opt.step);
      if (opt.decades > 1) {
        double h = opt.step;
        double prev = numeric;
        double best = std::numeric_limits<double>::infinity();
        for (int k = 1; k < opt.decades; ++k) {
          const double next = central(h / 10.0);
          const double score = std::abs(next - prev) + roundoff / h;
          if (score < best) {
            best = score;
            numeric = prev;
          }
          prev = next;
          h /= 10.0;
        }
      }
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), opt.floor});
      worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
    }
  }
  return worst;
}

/// Single-input convenience form: f(x).
inline double grad_check(const std::function<Tensor(const Tensor&)>& f, Tensor x,
                         const GradCheckOptions& opt = {}) {
  return grad_check([&] { return f(x); }, std::vector<Tensor>{x}, opt);
}

}  // namespace paranet::nn
