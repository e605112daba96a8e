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

// Hyperparameters for every model, with the `full` and `mini` presets and a
// `key = value` text format.

#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "paranet/dsp/features.hpp"
#include "paranet/errors.hpp"

namespace paranet {

struct Hyperparams {
  std::string preset = "full";

  // Audio front end.
  std::size_t fft_size = 2048;
  std::size_t fft_window_size = 1200;
  std::size_t fft_window_shift = 300;
  int audio_sample_rate = 24000;
  std::size_t reduction_factor = 4;
  std::size_t mel_bands = 80;

  // Text-to-spectrogram models.
  std::size_t character_embedding_dim = 256;
  std::size_t teacher_encoder_layers = 7;
  std::size_t teacher_encoder_conv_width = 5;
  std::size_t teacher_encoder_channels = 64;
  std::size_t paranet_encoder_layers = 7;
  std::size_t paranet_encoder_conv_width = 9;
  std::size_t paranet_encoder_channels = 64;
  std::vector<std::size_t> decoder_prenet_affine_size{128, 256};
  std::size_t teacher_decoder_layers = 4;
  std::size_t teacher_decoder_conv_width = 5;
  std::size_t paranet_decoder_layers = 17;
  std::size_t paranet_decoder_conv_width = 7;
  std::size_t decoder_channels = 256;
  std::size_t attention_hidden_size = 128;
  double position_weight = 1.0;
  double initial_rate = 6.3;
  std::size_t postnet_layers = 5;
  std::size_t postnet_conv_width = 5;
  std::size_t postnet_channels = 256;
  double teacher_dropout_keep_probability = 0.95;
  double prenet_dropout_keep_probability = 0.5;
  double paranet_dropout_keep_probability = 1.0;
  double distillation_weight = 4.0;
  bool use_positional_encoding = true;
  bool use_distillation = true;
  std::size_t mask_window = 3;

  // Optimization.
  double adam_learning_rate = 0.001;
  std::size_t batch_size = 16;
  double max_gradient_norm = 100.0;
  double gradient_clipping_max_value = 5.0;
  std::size_t train_steps = 100000;
  std::size_t checkpoint_every = 10000;
  std::size_t log_every = 100;

  // Waveform model.
  std::vector<std::size_t> wavevae_flow_layers{10, 10, 10, 30};
  std::size_t wavevae_encoder_layers = 20;
  std::size_t wavevae_channels = 64;
  std::size_t wavevae_filter_size = 3;
  std::size_t wavevae_dilation_cycle = 10;
  std::vector<std::size_t> conditioner_strides{15, 20};
  std::size_t conditioner_freq_width = 3;
  double conditioner_leaky_slope = 0.4;
  double anneal_midpoint = 50000.0;
  double anneal_temperature = 10000.0;
  std::size_t wavevae_clip_samples = 12000;

  dsp::DspConfig dsp() const {
    dsp::DspConfig c;
    c.sample_rate = audio_sample_rate;
    c.fft_size = fft_size;
    c.win_length = fft_window_size;
    c.hop = fft_window_shift;
    c.mel_bands = mel_bands;
    return c;
  }

  /// Expected decoder steps per token at synthesis.
  double synthesis_rate() const { return initial_rate / static_cast<double>(reduction_factor); }

  template <typename F>
  void visit(F&& f) {
    f("preset", preset);
    f("fft_size", fft_size);
    f("fft_window_size", fft_window_size);
    f("fft_window_shift", fft_window_shift);
    f("audio_sample_rate", audio_sample_rate);
    f("reduction_factor", reduction_factor);
    f("mel_bands", mel_bands);
    f("character_embedding_dim", character_embedding_dim);
    f("teacher.encoder_layers", teacher_encoder_layers);
    f("teacher.encoder_conv_width", teacher_encoder_conv_width);
    f("teacher.encoder_channels", teacher_encoder_channels);
    f("paranet.encoder_layers", paranet_encoder_layers);
    f("paranet.encoder_conv_width", paranet_encoder_conv_width);
    f("paranet.encoder_channels", paranet_encoder_channels);
    f("teacher.decoder_prenet_affine_size", decoder_prenet_affine_size);
    f("teacher.decoder_layers", teacher_decoder_layers);
    f("teacher.decoder_conv_width", teacher_decoder_conv_width);
    f("paranet.decoder_layers", paranet_decoder_layers);
    f("paranet.decoder_conv_width", paranet_decoder_conv_width);
    f("decoder_channels", decoder_channels);
    f("attention_hidden_size", attention_hidden_size);
    f("position_weight", position_weight);
    f("initial_rate", initial_rate);
    f("teacher.postnet_layers", postnet_layers);
    f("teacher.postnet_conv_width", postnet_conv_width);
    f("teacher.postnet_channels", postnet_channels);
    f("teacher.dropout_keep_probability", teacher_dropout_keep_probability);
    f("teacher.prenet_dropout_keep_probability", prenet_dropout_keep_probability);
    f("paranet.dropout_keep_probability", paranet_dropout_keep_probability);
    f("paranet.distillation_weight", distillation_weight);
    f("paranet.use_positional_encoding", use_positional_encoding);
    f("paranet.use_distillation", use_distillation);
    f("mask_window", mask_window);
    f("adam_learning_rate", adam_learning_rate);
    f("batch_size", batch_size);
    f("max_gradient_norm", max_gradient_norm);
    f("gradient_clipping_max_value", gradient_clipping_max_value);
    f("train_steps", train_steps);
    f("checkpoint_every", checkpoint_every);
    f("log_every", log_every);
    f("wavevae.flow_layers", wavevae_flow_layers);
    f("wavevae.encoder_layers", wavevae_encoder_layers);
    f("wavevae.channels", wavevae_channels);
    f("wavevae.filter_size", wavevae_filter_size);
    f("wavevae.dilation_cycle", wavevae_dilation_cycle);
    f("wavevae.conditioner_strides", conditioner_strides);
    f("wavevae.conditioner_freq_width", conditioner_freq_width);
    f("wavevae.conditioner_leaky_slope", conditioner_leaky_slope);
    f("wavevae.anneal_midpoint", anneal_midpoint);
    f("wavevae.anneal_temperature", anneal_temperature);
    f("wavevae.clip_samples", wavevae_clip_samples);
  }
  template <typename F>
  void visit(F&& f) const {
    const_cast<Hyperparams*>(this)->visit([&](const char* k, auto& v) { f(k, std::as_const(v)); });
  }

  void validate() const {
    dsp().stft().validate();
    if (reduction_factor == 0) throw ConfigError("reduction_factor must be >= 1");
    if (paranet_decoder_layers == 0 || teacher_decoder_layers == 0) {
      throw ConfigError("decoder layer counts must be >= 1");
    }
    if (decoder_prenet_affine_size.empty()) throw ConfigError("prenet needs at least one layer");
    if (decoder_prenet_affine_size.back() != decoder_channels) {
      throw ConfigError("last prenet size must equal decoder_channels");
    }
    if (!(initial_rate > 0.0)) throw ConfigError("initial_rate must be positive");
    if (wavevae_flow_layers.empty()) throw ConfigError("wavevae needs at least one flow");
    std::size_t up = 1;
    for (auto s : conditioner_strides) up *= s;
    if (up != fft_window_shift) {
      throw ConfigError("conditioner strides multiply to " + std::to_string(up) +
                        " but the frame shift is " + std::to_string(fft_window_shift));
    }
    for (double keep : {teacher_dropout_keep_probability, paranet_dropout_keep_probability,
                        prenet_dropout_keep_probability}) {
      if (!(keep > 0.0 && keep <= 1.0)) throw ConfigError("dropout keep must be in (0, 1]");
    }
  }
};

/// Desk-scale preset: small channels, 1 kHz audio.
inline Hyperparams mini_preset() {
  Hyperparams h;
  h.preset = "mini";
  h.audio_sample_rate = 1000;
  h.fft_size = 64;
  h.fft_window_size = 40;
  h.fft_window_shift = 10;
  h.mel_bands = 16;
  h.character_embedding_dim = 64;
  h.teacher_encoder_layers = 3;
  h.teacher_encoder_channels = 32;
  h.paranet_encoder_layers = 3;
  h.paranet_encoder_channels = 32;
  h.decoder_prenet_affine_size = {64, 64};
  h.paranet_decoder_layers = 4;
  h.decoder_channels = 64;
  h.attention_hidden_size = 64;
  h.position_weight = 4.0;
  h.postnet_layers = 3;
  h.postnet_channels = 64;
  h.batch_size = 4;
  h.train_steps = 300;
  h.checkpoint_every = 100;
  h.log_every = 10;
  h.wavevae_flow_layers = {3, 3};
  h.wavevae_encoder_layers = 3;
  h.wavevae_channels = 16;
  h.wavevae_dilation_cycle = 3;
  h.conditioner_strides = {2, 5};
  h.anneal_midpoint = 200.0;
  h.anneal_temperature = 50.0;
  h.wavevae_clip_samples = 500;
  return h;
}

inline Hyperparams preset_by_name(const std::string& name) {
  if (name == "full") return Hyperparams{};
  if (name == "mini") return mini_preset();
  throw ConfigError("unknown preset '" + name + "' (expected full or mini)");
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
}

template <typename T>
void parse_value(const std::string& key, const std::string& text, T& out) {
  const auto bad = [&] { return ConfigError("config key '" + key + "': cannot parse '" + text + "'"); };
  if constexpr (std::is_same_v<T, std::string>) {
    out = text;
  } else if constexpr (std::is_same_v<T, bool>) {
    if (text == "true" || text == "1") out = true;
    else if (text == "false" || text == "0") out = false;
    else throw bad();
  } else if constexpr (std::is_same_v<T, std::vector<std::size_t>>) {
    out.clear();
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      std::size_t v = 0;
      parse_value(key, trim(item), v);
      out.push_back(v);
    }
    if (out.empty()) throw bad();
  } else {
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if constexpr (std::is_unsigned_v<T>) {
      if (!text.empty() && text[0] == '-') throw bad();
    }
    const auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last) throw bad();
  }
}

template <typename T>
std::string format_value(const T& v) {
  if constexpr (std::is_same_v<T, std::string>) {
    return v;
  } else if constexpr (std::is_same_v<T, bool>) {
    return v ? "true" : "false";
  } else if constexpr (std::is_same_v<T, std::vector<std::size_t>>) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
  } else if constexpr (std::is_floating_point_v<T>) {
    std::ostringstream os;
    os.precision(std::numeric_limits<double>::max_digits10);
    os << v;
    return os.str();
  } else {
    return std::to_string(v);
  }
}

}  // namespace detail

/// Applies `key = value` lines on top of `base`. A `preset` line, which must
/// come first if present, selects the base preset.
inline Hyperparams parse_config(std::istream& in, Hyperparams base, const std::string& origin = "config") {
  std::string line;
  std::size_t line_no = 0;
  bool seen_other = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const auto where = origin + ":" + std::to_string(line_no);
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const auto key = detail::trim(line.substr(0, eq));
    const auto value = detail::trim(line.substr(eq + 1));
    if (key == "preset") {
      if (seen_other) throw ConfigError(where + ": preset must be the first setting");
      base = preset_by_name(value);
      continue;
    }
    seen_other = true;
    bool found = false;
    base.visit([&](const char* k, auto& field) {
      if (key == k) {
        try {
          detail::parse_value(key, value, field);
        } catch (const ConfigError& e) {
          throw ConfigError(where + ": " + e.what());
        }
        found = true;
      }
    });
    if (!found) throw ConfigError(where + ": unknown key '" + key + "'");
  }
  base.validate();
  return base;
}

inline Hyperparams load_config(const std::filesystem::path& path, Hyperparams base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in, std::move(base), path.filename().string());
}

inline std::string format_config(const Hyperparams& h) {
  std::string out;
  h.visit([&](const char* k, const auto& v) { out += std::string(k) + " = " + detail::format_value(v) + "\n"; });
  return out;
}

}  // namespace paranet
