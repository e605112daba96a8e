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
#include <limits>

#include "paranet/dsp/stft.hpp"

namespace paranet::dsp {

/// Analysis settings of the spectral training loss, expressed in time so
/// they carry over between sample rates.
struct StftLossConfig {
  double frame_shift_ms = 12.5;
  double win_length_ms = 50.0;
  std::size_t fft_size = 2048;
  double log_floor = 1e-5;

  StftParams at_rate(int sample_rate) const {
    StftParams p;
    p.fft_size = fft_size;
    p.hop = static_cast<std::size_t>(std::lround(sample_rate * frame_shift_ms / 1000.0));
    p.win_length = static_cast<std::size_t>(std::lround(sample_rate * win_length_ms / 1000.0));
    if (!(p.hop < p.win_length && p.win_length <= p.fft_size) || p.hop == 0) {
      throw ConfigError("STFT loss needs 0 < frame shift < window <= FFT size at " +
                        std::to_string(sample_rate) + " Hz");
    }
    return p;
  }
};

/// ||S(x)| - |S(y)||_F + mean |log|S(x)| - log|S(y)||, magnitudes floored
/// at log_floor before the log. Both arguments may carry gradients.
inline nn::Tensor stft_loss(const nn::Tensor& x, const nn::Tensor& y, int sample_rate,
                            const StftLossConfig& cfg = {}) {
  if (x.size() != y.size()) {
    throw ShapeError("stft_loss: signals have " + std::to_string(x.size()) + " and " +
                     std::to_string(y.size()) + " samples");
  }
  const auto p = cfg.at_rate(sample_rate);
  const auto mx = stft_magnitude(x, p);
  const auto my = stft_magnitude(y, p);
  const double inf = std::numeric_limits<double>::infinity();
  const auto lx = nn::log(nn::clamp(mx, cfg.log_floor, inf));
  const auto ly = nn::log(nn::clamp(my, cfg.log_floor, inf));
  return nn::add(nn::l2_norm(nn::sub(mx, my)), nn::mean(nn::abs(nn::sub(lx, ly))));
}

inline double stft_loss(const AudioClip& x, const AudioClip& y, const StftLossConfig& cfg = {}) {
  if (x.sample_rate != y.sample_rate) throw ShapeError("stft_loss: sample rates differ");
  nn::NoGradGuard guard;
  return stft_loss(nn::Tensor({x.size()}, x.samples), nn::Tensor({y.size()}, y.samples),
                   x.sample_rate, cfg)
      .item();
}

}  // namespace paranet::dsp
