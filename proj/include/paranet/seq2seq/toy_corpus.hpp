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

// Synthetic corpora for smoke training: each token becomes a fixed-length
// tone whose pitch identifies the symbol, and the sine corpus feeds the
// waveform model.

#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "paranet/config.hpp"
#include "paranet/dsp/audio.hpp"
#include "paranet/text/frontend.hpp"

namespace paranet::seq2seq {

struct ToyVoice {
  int sample_rate = 1000;
  double frames_per_token = 6.3;
  double duration_spread = 0.4;
  std::size_t hop = 10;
  double base_hz = 30.0;
  double step_hz = 13.0;
  double amplitude = 0.5;
  double ramp_fraction = 0.15;

  /// Length of one token. Durations vary by symbol within
  /// frames_per_token * (1 +- duration_spread) and average frames_per_token
  /// over the alphabet.
  std::size_t samples_for(std::size_t id) const {
    const double phase = std::fmod(static_cast<double>(id) * 0.6180339887498949, 1.0);
    const double frames = frames_per_token * (1.0 + duration_spread * (2.0 * phase - 1.0));
    return static_cast<std::size_t>(std::lround(frames * static_cast<double>(hop)));
  }

  static ToyVoice for_config(const Hyperparams& h) {
    ToyVoice v;
    v.sample_rate = h.audio_sample_rate;
    v.hop = h.fft_window_shift;
    v.frames_per_token = h.initial_rate;
    v.base_hz = 0.03 * h.audio_sample_rate;
    v.step_hz = 0.42 * h.audio_sample_rate / 32.0;
    return v;
  }
};

/// Renders one utterance. Every symbol gets a tone at base + step * (id - 2)
/// except pauses, which are silent.
inline dsp::AudioClip render_toy_utterance(const std::vector<text::Token>& tokens, const ToyVoice& v) {
  dsp::AudioClip clip;
  clip.sample_rate = v.sample_rate;
  for (const auto& t : tokens) {
    const std::size_t len = v.samples_for(t.id);
    const std::size_t ramp = std::max<std::size_t>(1, static_cast<std::size_t>(v.ramp_fraction * len));
    const std::size_t start = clip.samples.size();
    clip.samples.resize(start + len, 0.0);
    if (t.cls == text::TokenClass::kPause || t.id < 2) continue;
    const double hz = v.base_hz + v.step_hz * static_cast<double>(t.id - 2);
    for (std::size_t n = 0; n < len; ++n) {
      const double env = std::min({1.0, static_cast<double>(n + 1) / ramp, static_cast<double>(len - n) / ramp});
      const double time = static_cast<double>(start + n) / v.sample_rate;
      clip.samples[start + n] = v.amplitude * env * std::sin(2.0 * std::numbers::pi * hz * time);
    }
  }
  return clip;
}

/// Four transcripts used for overfitting runs.
inline std::vector<std::string> toy_transcripts() {
  return {"SHE DID HER BEST TO HELP HIM%.", "PLEASE WAIT OUTSIDE OF THE HOUSE%.",
          "ROCK MUSIC APPROACHES AT HIGH VELOCITY%.", "HE TOLD US A VERY EXCITING ADVENTURE STORY%."};
}

/// Writes "toyNN.wav" files plus a metadata.csv of "filename|transcript".
inline void write_toy_corpus(const std::filesystem::path& dir, const std::vector<std::string>& transcripts,
                             const text::TextFrontend& frontend, const ToyVoice& voice) {
  std::filesystem::create_directories(dir);
  std::ofstream meta(dir / "metadata.csv");
  if (!meta) throw DataError("cannot write " + (dir / "metadata.csv").string());
  for (std::size_t i = 0; i < transcripts.size(); ++i) {
    const std::string name = "toy" + std::string(i < 10 ? "0" : "") + std::to_string(i) + ".wav";
    dsp::write_wav(dir / name, render_toy_utterance(frontend.tokenize(transcripts[i]), voice));
    meta << name << '|' << transcripts[i] << '\n';
  }
}

/// Clips of one or two summed sinusoids with distinct pitches.
inline std::vector<dsp::AudioClip> sine_corpus(std::size_t clips, std::size_t length, int sample_rate) {
  std::vector<dsp::AudioClip> out;
  for (std::size_t c = 0; c < clips; ++c) {
    dsp::AudioClip clip;
    clip.sample_rate = sample_rate;
    clip.samples.resize(length);
    const double f1 = sample_rate * (0.02 + 0.015 * static_cast<double>(c));
    const double f2 = 2.5 * f1;
    for (std::size_t n = 0; n < length; ++n) {
      const double t = static_cast<double>(n) / sample_rate;
      clip.samples[n] = 0.4 * std::sin(2 * std::numbers::pi * f1 * t) +
                        (c % 2 ? 0.2 * std::sin(2 * std::numbers::pi * f2 * t) : 0.0);
    }
    out.push_back(std::move(clip));
  }
  return out;
}

}  // namespace paranet::seq2seq
