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
#include <vector>

#include "paranet/dsp/stft.hpp"

namespace paranet::dsp {

/// Front-end settings. Defaults are the 24 kHz production settings.
struct DspConfig {
  int sample_rate = 24000;
  std::size_t fft_size = 2048;
  std::size_t win_length = 1200;
  std::size_t hop = 300;
  std::size_t mel_bands = 80;
  double log_floor = 1e-5;
  double mel_fmin = 0.0;
  double mel_fmax = 0.0;  // 0 means Nyquist

  StftParams stft() const { return {fft_size, win_length, hop}; }
  std::size_t linear_bins() const { return fft_size / 2 + 1; }
};

enum class SpectrogramKind { kMel, kLinear };

inline const char* to_string(SpectrogramKind k) {
  return k == SpectrogramKind::kMel ? "mel" : "linear";
}

/// Log-magnitude spectrogram, [frames x bins].
struct Spectrogram {
  nn::Tensor values;
  SpectrogramKind kind = SpectrogramKind::kMel;
  std::size_t hop = 300;
  std::size_t win_length = 1200;
  std::size_t fft_size = 2048;
  int sample_rate = 24000;

  std::size_t frames() const { return values.dim(0); }
  std::size_t bins() const { return values.dim(1); }
  StftParams stft() const { return {fft_size, win_length, hop}; }
};

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

/// Triangular HTK-scale filterbank [bands x bins], each filter scaled by
/// 2 / (upper_edge - lower_edge) so that filters have equal area.
inline nn::Tensor mel_filterbank(const DspConfig& cfg) {
  const std::size_t bins = cfg.linear_bins(), bands = cfg.mel_bands;
  if (bands == 0) throw ConfigError("mel_bands must be positive");
  const double fmax = cfg.mel_fmax > 0.0 ? cfg.mel_fmax : cfg.sample_rate / 2.0;
  if (!(fmax > cfg.mel_fmin)) throw ConfigError("mel fmax must exceed fmin");
  const double mlo = hz_to_mel(cfg.mel_fmin), mhi = hz_to_mel(fmax);
  std::vector<double> edges(bands + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(mlo + (mhi - mlo) * static_cast<double>(i) / static_cast<double>(bands + 1));
  }
  std::vector<double> fb(bands * bins, 0.0);
  for (std::size_t m = 0; m < bands; ++m) {
    const double lo = edges[m], centre = edges[m + 1], hi = edges[m + 2];
    const double norm = 2.0 / (hi - lo);
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * cfg.sample_rate / static_cast<double>(cfg.fft_size);
      const double rise = (f - lo) / (centre - lo);
      const double fall = (hi - f) / (hi - centre);
      const double w = std::max(0.0, std::min(rise, fall));
      fb[m * bins + k] = w * norm;
    }
  }
  return nn::Tensor({bands, bins}, std::move(fb));
}

inline nn::Tensor log_clamp(const nn::Tensor& x, double floor) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(std::max(x.at(i), floor));
  return nn::Tensor(x.shape(), std::move(out));
}

/// Builds log-mel and log-linear features with one shared filterbank.
class FeatureExtractor {
 public:
  explicit FeatureExtractor(DspConfig cfg = {}) : cfg_(cfg), filterbank_(mel_filterbank(cfg_)) {
    cfg_.stft().validate();
  }

  const DspConfig& config() const { return cfg_; }
  const nn::Tensor& filterbank() const { return filterbank_; }

  Spectrogram linear(const AudioClip& clip) const {
    check_rate(clip);
    return wrap(log_clamp(stft_magnitude(clip, cfg_.stft()), cfg_.log_floor),
                SpectrogramKind::kLinear);
  }

  Spectrogram mel(const AudioClip& clip) const {
    check_rate(clip);
    return mel_from_magnitude(stft_magnitude(clip, cfg_.stft()));
  }

  /// Both features from one STFT pass.
  std::pair<Spectrogram, Spectrogram> mel_and_linear(const AudioClip& clip) const {
    check_rate(clip);
    const auto mag = stft_magnitude(clip, cfg_.stft());
    return {mel_from_magnitude(mag),
            wrap(log_clamp(mag, cfg_.log_floor), SpectrogramKind::kLinear)};
  }

 private:
  void check_rate(const AudioClip& clip) const {
    validate(clip);
    if (clip.sample_rate != cfg_.sample_rate) {
      throw DataError("sample rate " + std::to_string(clip.sample_rate) + " Hz does not match "
                      "the configured " + std::to_string(cfg_.sample_rate) + " Hz");
    }
  }

  Spectrogram mel_from_magnitude(const nn::Tensor& mag) const {
    nn::NoGradGuard guard;
    const auto mel = nn::matmul(mag, nn::transpose(filterbank_));
    return wrap(log_clamp(mel, cfg_.log_floor), SpectrogramKind::kMel);
  }

  Spectrogram wrap(nn::Tensor values, SpectrogramKind kind) const {
    return {std::move(values), kind, cfg_.hop, cfg_.win_length, cfg_.fft_size, cfg_.sample_rate};
  }

  DspConfig cfg_;
  nn::Tensor filterbank_;
};

inline Spectrogram mel_spectrogram(const AudioClip& clip, const DspConfig& cfg = {}) {
  return FeatureExtractor(cfg).mel(clip);
}

inline Spectrogram linear_spectrogram(const AudioClip& clip, const DspConfig& cfg = {}) {
  return FeatureExtractor(cfg).linear(clip);
}

/// Phase reconstruction from a log-linear spectrogram.
inline AudioClip griffin_lim(const Spectrogram& s, const GriffinLimOptions& opt = {}) {
  if (s.kind != SpectrogramKind::kLinear) {
    throw DataError("griffin_lim needs a linear spectrogram, got " + std::string(to_string(s.kind)));
  }
  std::vector<double> mag(s.values.size());
  for (std::size_t i = 0; i < mag.size(); ++i) mag[i] = std::exp(s.values.at(i));
  const nn::Tensor m(s.values.shape(), std::move(mag));
  return {griffin_lim(m, s.stft(), opt), s.sample_rate};
}

/// Maps log features onto roughly [0, 1]: the log floor goes to 0 and
/// unit magnitude to 1.
inline nn::Tensor normalize_log(const nn::Tensor& x, double log_floor) {
  const double lf = std::log(log_floor);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (x.at(i) - lf) / -lf;
  return nn::Tensor(x.shape(), std::move(out));
}

inline nn::Tensor denormalize_log(const nn::Tensor& x, double log_floor) {
  const double lf = std::log(log_floor);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.at(i) * -lf + lf;
  return nn::Tensor(x.shape(), std::move(out));
}

/// r consecutive frames packed into one decoder step.
struct ReducedFrames {
  nn::Tensor values;  // [steps x (r * bins)]
  std::size_t r = 4;
  std::size_t bins = 0;
  std::size_t pad_frames = 0;

  std::size_t steps() const { return values.dim(0); }
  std::size_t frames() const { return steps() * r - pad_frames; }
};

inline ReducedFrames reduce_frames(const nn::Tensor& frames, std::size_t r) {
  if (r == 0) throw ConfigError("reduction factor must be >= 1");
  const std::size_t n = frames.dim(0), bins = frames.dim(1);
  const std::size_t steps = (n + r - 1) / r;
  std::vector<double> out(steps * r * bins, 0.0);
  std::copy(frames.data().begin(), frames.data().end(), out.begin());
  return {nn::Tensor({steps, r * bins}, std::move(out)), r, bins, steps * r - n};
}

inline ReducedFrames reduce_frames(const Spectrogram& s, std::size_t r = 4) {
  return reduce_frames(s.values, r);
}

/// Unpacks to [steps*r x bins]; with `drop_padding` the recorded zero
/// frames at the tail are removed.
inline nn::Tensor expand_frames(const ReducedFrames& rf, bool drop_padding = true) {
  const std::size_t total = rf.steps() * rf.r;
  const std::size_t keep = drop_padding ? total - rf.pad_frames : total;
  std::vector<double> out(rf.values.data().begin(),
                          rf.values.data().begin() + static_cast<std::ptrdiff_t>(keep * rf.bins));
  return nn::Tensor({keep, rf.bins}, std::move(out));
}

}  // namespace paranet::dsp
