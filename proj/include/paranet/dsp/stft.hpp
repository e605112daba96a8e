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

// Short-time Fourier transform magnitudes, their gradient, and Griffin-Lim.
//
// Framing: the signal is reflect-padded by win/2 on both ends; frame f
// covers padded samples [f*hop, f*hop + win), multiplied by a periodic Hann
// window and zero-padded to fft_size.

#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "paranet/dsp/audio.hpp"
#include "paranet/dsp/fft.hpp"
#include "paranet/nn/ops.hpp"
#include "paranet/rng.hpp"

namespace paranet::dsp {

struct StftParams {
  std::size_t fft_size = 2048;
  std::size_t win_length = 1200;
  std::size_t hop = 300;

  std::size_t bins() const { return fft_size / 2 + 1; }
  std::size_t pad() const { return win_length / 2; }

  void validate() const {
    if (hop == 0) throw ConfigError("STFT hop must be >= 1");
    if (win_length == 0 || win_length > fft_size) {
      throw ConfigError("STFT window must satisfy 1 <= win_length <= fft_size");
    }
    if (fft_size % 2 != 0) throw ConfigError("FFT size must be even");
  }
  /// Number of frames for a signal of `len` samples.
  std::size_t frames(std::size_t len) const {
    const std::size_t padded = len + 2 * pad();
    if (len <= pad() || padded < win_length) {
      throw DataError("audio of " + std::to_string(len) +
                      " samples is shorter than one analysis frame");
    }
    return (padded - win_length) / hop + 1;
  }
};

inline std::vector<double> hann_periodic(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                static_cast<double>(n));
  }
  return w;
}

namespace detail {

// Source sample index for every position of the reflect-padded signal.
inline std::vector<std::size_t> reflect_index(std::size_t len, std::size_t pad) {
  std::vector<std::size_t> idx(len + 2 * pad);
  const auto L = static_cast<std::ptrdiff_t>(len);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    std::ptrdiff_t src = static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(pad);
    if (src < 0) src = -src;
    if (src >= L) src = 2 * (L - 1) - src;
    idx[i] = static_cast<std::size_t>(src);
  }
  return idx;
}

struct StftResult {
  std::size_t frames = 0;
  std::vector<std::complex<double>> spectrum;  // frames x bins
};

inline StftResult complex_stft(std::span<const double> x, const StftParams& p) {
  p.validate();
  StftResult r;
  r.frames = p.frames(x.size());
  const auto idx = reflect_index(x.size(), p.pad());
  const auto window = hann_periodic(p.win_length);
  auto& fft = real_fft(p.fft_size);
  std::vector<double> buf(p.fft_size, 0.0);
  r.spectrum.resize(r.frames * p.bins());
  for (std::size_t f = 0; f < r.frames; ++f) {
    for (std::size_t n = 0; n < p.win_length; ++n) buf[n] = window[n] * x[idx[f * p.hop + n]];
    std::fill(buf.begin() + static_cast<std::ptrdiff_t>(p.win_length), buf.end(), 0.0);
    fft.forward(buf, std::span(r.spectrum).subspan(f * p.bins(), p.bins()));
  }
  return r;
}

}  // namespace detail

/// Differentiable |STFT| of a 1-D signal tensor ({T} or {1 x T}) as a
/// [frames x (fft_size/2 + 1)] tensor. Bins with zero magnitude pass no
/// gradient.
inline nn::Tensor stft_magnitude(const nn::Tensor& audio, const StftParams& p) {
  if (audio.rank() > 2 || (audio.rank() == 2 && audio.dim(0) != 1)) {
    throw ShapeError("stft_magnitude: expected a single-channel signal");
  }
  auto res = detail::complex_stft(audio.data(), p);
  const std::size_t bins = p.bins();
  std::vector<double> mag(res.spectrum.size());
  for (std::size_t i = 0; i < mag.size(); ++i) mag[i] = std::abs(res.spectrum[i]);
  return nn::make_result(
      nn::Shape{res.frames, bins}, std::move(mag), {audio},
      [p, spec = std::move(res.spectrum), frames = res.frames](nn::detail::Node& self) {
        double* gx = nn::grad_sink(self.parents[0]);
        if (!gx) return;
        const std::size_t bins = p.bins(), n_fft = p.fft_size;
        const std::size_t len = self.parents[0]->data.size();
        const auto idx = detail::reflect_index(len, p.pad());
        const auto window = hann_periodic(p.win_length);
        auto& fft = real_fft(n_fft);
        std::vector<std::complex<double>> u(bins);
        std::vector<double> back(n_fft);
        for (std::size_t f = 0; f < frames; ++f) {
          for (std::size_t k = 0; k < bins; ++k) {
            const auto x = spec[f * bins + k];
            const double m = std::abs(x);
            const double g = self.grad[f * bins + k];
            std::complex<double> v = (m > 0.0 && g != 0.0) ? g * x / m : 0.0;
            if (k != 0 && k != bins - 1) v *= 0.5;
            u[k] = v;
          }
          fft.inverse(u, back);
          for (std::size_t n = 0; n < p.win_length; ++n) {
            gx[idx[f * p.hop + n]] += window[n] * back[n];
          }
        }
      });
}

/// Non-differentiable magnitudes of an audio clip.
inline nn::Tensor stft_magnitude(const AudioClip& clip, const StftParams& p) {
  validate(clip);
  nn::NoGradGuard guard;
  return stft_magnitude(nn::Tensor({clip.size()}, clip.samples), p);
}

/// Inverse STFT by weighted overlap-add; output length is
/// (frames - 1) * hop + win_length - 2 * (win_length / 2).
inline std::vector<double> istft(const std::vector<std::complex<double>>& spectrum,
                                 std::size_t frames, const StftParams& p) {
  p.validate();
  const std::size_t bins = p.bins();
  const std::size_t full = (frames - 1) * p.hop + p.win_length;
  const auto window = hann_periodic(p.win_length);
  std::vector<double> acc(full, 0.0), norm(full, 0.0), buf(p.fft_size);
  auto& fft = real_fft(p.fft_size);
  for (std::size_t f = 0; f < frames; ++f) {
    fft.inverse(std::span(spectrum).subspan(f * bins, bins), buf);
    for (std::size_t n = 0; n < p.win_length; ++n) {
      acc[f * p.hop + n] += window[n] * buf[n] / static_cast<double>(p.fft_size);
      norm[f * p.hop + n] += window[n] * window[n];
    }
  }
  for (std::size_t i = 0; i < full; ++i) {
    if (norm[i] > 1e-11) acc[i] /= norm[i];
  }
  const std::size_t pad = p.pad();
  return std::vector<double>(acc.begin() + static_cast<std::ptrdiff_t>(pad),
                             acc.end() - static_cast<std::ptrdiff_t>(pad));
}

struct GriffinLimOptions {
  std::size_t iterations = 60;
  bool random_initial_phase = false;  // zero phase otherwise
  std::uint64_t seed = 0;
};

/// Iterative phase reconstruction from a [frames x bins] magnitude tensor.
inline std::vector<double> griffin_lim(const nn::Tensor& magnitude, const StftParams& p,
                                       const GriffinLimOptions& opt = {}) {
  p.validate();
  if (magnitude.rank() != 2 || magnitude.dim(1) != p.bins()) {
    throw ShapeError("griffin_lim: magnitude must be [frames x fft_size/2+1]");
  }
  const std::size_t frames = magnitude.dim(0), bins = p.bins();
  std::vector<std::complex<double>> spec(frames * bins);
  Rng rng(opt.seed);
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const double phase = opt.random_initial_phase ? rng.uniform(-std::numbers::pi, std::numbers::pi) : 0.0;
    spec[i] = std::polar(magnitude.at(i), phase);
  }
  auto signal = istft(spec, frames, p);
  for (std::size_t it = 0; it < opt.iterations; ++it) {
    auto est = detail::complex_stft(signal, p);
    for (std::size_t i = 0; i < spec.size(); ++i) {
      const double m = std::abs(est.spectrum[i]);
      const auto unit = m > 0.0 ? est.spectrum[i] / m : std::complex<double>(1.0, 0.0);
      spec[i] = magnitude.at(i) * unit;
    }
    signal = istft(spec, frames, p);
  }
  return signal;
}

}  // namespace paranet::dsp
