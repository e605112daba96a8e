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

// Convolutional text-to-spectrogram models.
//
// Spectrogram tensors inside the models are [channels x steps], where one
// step packs r consecutive frames (r * bins channels). Both models share the
// same encoder design.

#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "paranet/attention/attention.hpp"
#include "paranet/config.hpp"
#include "paranet/nn/conv.hpp"
#include "paranet/nn/params.hpp"

namespace paranet::seq2seq {

using nn::Tensor;

/// ceil(rate * tokens), tolerant of rounding noise in the product.
inline std::size_t synthesis_steps(double rate, std::size_t tokens) {
  if (tokens == 0) throw ContractError("synthesis_steps: no tokens");
  if (!(rate > 0.0)) throw ConfigError("speech rate must be positive");
  return static_cast<std::size_t>(std::ceil(rate * static_cast<double>(tokens) - 1e-9));
}

// ---------------------------------------------------------------------------
// Encoder.

struct EncoderOutput {
  Tensor keys;    // [E x M]
  Tensor values;  // [E x M]
  Tensor embedded;

  std::size_t tokens() const { return keys.dim(1); }
};

struct EncoderParams {
  Tensor embedding;  // [vocab x E]
  nn::Linear pre;    // E -> C
  std::vector<nn::ConvBlockParams> blocks;
  nn::Linear post;   // C -> E
  double dropout_keep = 1.0;

  static EncoderParams create(std::size_t vocab, std::size_t embed_dim, std::size_t channels,
                              std::size_t layers, std::size_t width, double keep, Rng& rng) {
    EncoderParams p;
    std::vector<double> table(vocab * embed_dim);
    for (auto& v : table) v = rng.normal(0.0, 1.0);
    p.embedding = Tensor({vocab, embed_dim}, std::move(table), true);
    p.pre = nn::Linear::create(embed_dim, channels, rng);
    for (std::size_t l = 0; l < layers; ++l) {
      p.blocks.push_back(nn::make_conv_block(channels, width, nn::Causality::kNonCausal, keep, rng));
    }
    p.post = nn::Linear::create(channels, embed_dim, rng);
    p.dropout_keep = keep;
    return p;
  }

  void collect(nn::NamedParams& out, const std::string& prefix) const {
    out.emplace_back(prefix + ".embedding", embedding);
    pre.collect(out, prefix + ".pre");
    for (std::size_t l = 0; l < blocks.size(); ++l) {
      nn::collect_block(blocks[l], out, prefix + ".conv" + std::to_string(l));
    }
    post.collect(out, prefix + ".post");
  }
};

/// keys = post(conv stack(pre(embed))); values = (keys + embed) * sqrt(1/2).
inline EncoderOutput encoder_forward(const EncoderParams& p, const std::vector<std::size_t>& ids,
                                     bool training, Rng& rng) {
  if (ids.empty()) throw ContractError("encoder_forward: empty token sequence");
  const Tensor e = nn::embedding(p.embedding, ids);
  Tensor h = p.pre(e);
  for (const auto& b : p.blocks) h = nn::conv_block(h, b, training, rng);
  const Tensor keys = p.post(h);
  return {keys, nn::scale(nn::add(keys, e), std::sqrt(0.5)), e};
}

// ---------------------------------------------------------------------------
// Shared geometry.

struct ModelDims {
  std::size_t vocab = 0;
  std::size_t r = 4;
  std::size_t mel = 80;
  std::size_t linear_bins = 1025;
  std::size_t embed = 256;
  std::size_t channels = 256;
  double position_weight = 1.0;

  std::size_t mel_channels() const { return r * mel; }
  std::size_t linear_channels() const { return r * linear_bins; }

  static ModelDims from(const Hyperparams& h, std::size_t vocab) {
    return {vocab, h.reduction_factor, h.mel_bands, h.fft_size / 2 + 1, h.character_embedding_dim,
            h.decoder_channels, h.position_weight};
  }
};

inline Tensor scaled_pe(std::size_t length, std::size_t d, double rate, double weight,
                        std::size_t start = 0) {
  Tensor pe = attention::positional_encoding(length, {d, rate, attention::PeParity::kChannel}, start);
  if (weight != 1.0) {
    for (auto& v : pe.mutable_data()) v *= weight;
  }
  return pe;
}

struct SpectrogramPrediction {
  Tensor mel;     // [r*mel x N]
  Tensor linear;  // [r*bins x N]
  std::vector<Tensor> alignments;  // each [N x M]
  std::size_t decoder_invocations = 0;
  bool truncated = false;

  std::size_t steps() const { return mel.dim(1); }
};

// ---------------------------------------------------------------------------
// Autoregressive teacher.

class TeacherModel {
 public:
  TeacherModel(const Hyperparams& h, std::size_t vocab, Rng& rng) : dims_(ModelDims::from(h, vocab)) {
    const double keep = h.teacher_dropout_keep_probability;
    prenet_keep_ = h.prenet_dropout_keep_probability;
    key_rate_ = h.synthesis_rate();
    encoder_ = EncoderParams::create(vocab, dims_.embed, h.teacher_encoder_channels,
                                     h.teacher_encoder_layers, h.teacher_encoder_conv_width, keep, rng);
    preproc_ = nn::Linear::create(dims_.mel_channels(), dims_.mel_channels(), rng);
    std::size_t in = dims_.mel_channels();
    for (std::size_t size : h.decoder_prenet_affine_size) {
      prenet_.push_back(nn::Linear::create(in, size, rng));
      in = size;
    }
    for (std::size_t l = 0; l < h.teacher_decoder_layers; ++l) {
      decoder_.push_back(nn::make_conv_block(dims_.channels, h.teacher_decoder_conv_width,
                                             nn::Causality::kCausal, keep, rng));
    }
    attention_ = attention::AttentionBlockParams::create(dims_.channels, dims_.embed, dims_.embed,
                                                         dims_.channels, rng,
                                                         dims_.channels == dims_.embed,
                                                         h.attention_hidden_size);
    mel_head_ = nn::Linear::create(dims_.channels, dims_.mel_channels(), rng);
    converter_in_ = nn::Linear::create(dims_.channels, h.postnet_channels, rng);
    for (std::size_t l = 0; l < h.postnet_layers; ++l) {
      converter_.push_back(nn::make_conv_block(h.postnet_channels, h.postnet_conv_width,
                                               nn::Causality::kNonCausal, keep, rng));
    }
    linear_head_ = nn::Linear::create(h.postnet_channels, dims_.linear_channels(), rng);
  }

  const ModelDims& dims() const { return dims_; }
  double key_rate() const { return key_rate_; }

  nn::NamedParams parameters() const {
    nn::NamedParams out;
    encoder_.collect(out, "encoder");
    preproc_.collect(out, "decoder.preproc");
    for (std::size_t i = 0; i < prenet_.size(); ++i) prenet_[i].collect(out, "decoder.prenet" + std::to_string(i));
    for (std::size_t l = 0; l < decoder_.size(); ++l) {
      nn::collect_block(decoder_[l], out, "decoder.conv" + std::to_string(l));
    }
    attention_.collect(out, "decoder.attention");
    mel_head_.collect(out, "decoder.mel_head");
    converter_in_.collect(out, "converter.in");
    for (std::size_t l = 0; l < converter_.size(); ++l) {
      nn::collect_block(converter_[l], out, "converter.conv" + std::to_string(l));
    }
    linear_head_.collect(out, "converter.linear_head");
    return out;
  }

  EncoderOutput encode(const std::vector<std::size_t>& ids, bool training, Rng& rng) const {
    return encoder_forward(encoder_, ids, training, rng);
  }

  struct DecoderPass {
    Tensor mel;     // [r*mel x N]
    Tensor hidden;  // [C x N]
    Tensor alignment;
  };

  /// Causal decoder over already right-shifted input frames [r*mel x N].
  DecoderPass decode(const EncoderOutput& enc, const Tensor& inputs, bool training, Rng& rng,
                     const std::vector<std::uint8_t>* allowed = nullptr) const {
    if (inputs.dim(0) != dims_.mel_channels()) {
      throw ShapeError("teacher decoder expects " + std::to_string(dims_.mel_channels()) +
                       " input channels, got " + std::to_string(inputs.dim(0)));
    }
    const std::size_t N = inputs.dim(1), M = enc.tokens();
    Tensor h = preproc_(inputs);
    for (const auto& layer : prenet_) h = nn::relu(layer(nn::dropout(h, prenet_keep_, training, rng)));
    h = nn::conv_block(h, decoder_[0], training, rng);
    const auto att = attention::attention_forward(
        attention_, h, enc.keys, enc.values, scaled_pe(N, dims_.channels, 1.0, dims_.position_weight),
        scaled_pe(M, dims_.embed, key_rate_, dims_.position_weight), allowed);
    h = nn::scale(nn::add(h, att.context), std::sqrt(0.5));
    for (std::size_t l = 1; l < decoder_.size(); ++l) h = nn::conv_block(h, decoder_[l], training, rng);
    return {mel_head_(h), h, att.weights};
  }

  Tensor convert(const Tensor& hidden, bool training, Rng& rng) const {
    Tensor c = converter_in_(hidden);
    for (const auto& b : converter_) c = nn::conv_block(c, b, training, rng);
    return linear_head_(c);
  }

  /// Teacher-forced pass; `mel_target` is [N x r*mel] (one reduced step per row).
  SpectrogramPrediction forward_teacher_forced(const std::vector<std::size_t>& ids, const Tensor& mel_target,
                                               bool training, Rng& rng) const {
    if (!mel_target.defined()) throw ContractError("teacher forcing needs target frames");
    if (mel_target.rank() != 2 || mel_target.dim(1) != dims_.mel_channels()) {
      throw ShapeError("teacher target must be [steps x " + std::to_string(dims_.mel_channels()) + "]");
    }
    const auto enc = encode(ids, training, rng);
    const Tensor inputs = nn::shift_right(nn::transpose(mel_target), 1);
    auto pass = decode(enc, inputs, training, rng);
    SpectrogramPrediction out;
    out.mel = pass.mel;
    out.linear = convert(pass.hidden, training, rng);
    out.alignments = {pass.alignment};
    out.decoder_invocations = 1;
    return out;
  }

  /// Autoregressive synthesis of ceil(rate * M) steps, one decoder call per
  /// step. Each call re-runs the causal decoder over the generated prefix.
  SpectrogramPrediction synthesize(const std::vector<std::size_t>& ids, std::size_t max_steps,
                                   const std::optional<attention::MaskConfig>& mask = std::nullopt) const {
    nn::NoGradGuard guard;
    Rng unused(0);
    const auto enc = encode(ids, false, unused);
    const std::size_t M = enc.tokens();
    std::size_t N = synthesis_steps(key_rate_, M);
    SpectrogramPrediction out;
    if (N > max_steps) {
      N = max_steps;
      out.truncated = true;
    }
    const std::size_t C = dims_.mel_channels();
    std::vector<Tensor> frames{Tensor({C, 1}, 0.0)};
    DecoderPass pass;
    for (std::size_t t = 0; t < N; ++t) {
      const Tensor inputs = frames.size() == 1 ? frames[0] : nn::concat_cols(frames);
      std::vector<std::uint8_t> allowed;
      if (mask && mask->enabled) allowed = attention::mask_matrix(t + 1, M, *mask);
      pass = decode(enc, inputs, false, unused, allowed.empty() ? nullptr : &allowed);
      ++out.decoder_invocations;
      frames.push_back(nn::slice_cols(pass.mel, t, t + 1));
    }
    out.mel = pass.mel;
    out.linear = convert(pass.hidden, false, unused);
    out.alignments = {pass.alignment};
    return out;
  }

 private:
  ModelDims dims_;
  double prenet_keep_ = 1.0;
  double key_rate_ = 1.575;
  EncoderParams encoder_;
  nn::Linear preproc_;
  std::vector<nn::Linear> prenet_;
  std::vector<nn::ConvBlockParams> decoder_;
  attention::AttentionBlockParams attention_;
  nn::Linear mel_head_;
  nn::Linear converter_in_;
  std::vector<nn::ConvBlockParams> converter_;
  nn::Linear linear_head_;
};

// ---------------------------------------------------------------------------
// Non-autoregressive decoder.

class ParaNetModel {
 public:
  ParaNetModel(const Hyperparams& h, std::size_t vocab, Rng& rng)
      : dims_(ModelDims::from(h, vocab)), use_pe_(h.use_positional_encoding),
        synth_rate_(h.synthesis_rate()) {
    const double keep = h.paranet_dropout_keep_probability;
    encoder_ = EncoderParams::create(vocab, dims_.embed, h.paranet_encoder_channels,
                                     h.paranet_encoder_layers, h.paranet_encoder_conv_width, keep, rng);
    for (std::size_t l = 0; l < h.paranet_decoder_layers; ++l) {
      if (l > 0) {
        convs_.push_back(nn::make_conv_block(dims_.channels, h.paranet_decoder_conv_width,
                                             nn::Causality::kNonCausal, keep, rng));
      }
      blocks_.push_back(attention::AttentionBlockParams::create(
          dims_.channels, dims_.embed, dims_.embed, dims_.channels, rng, false, h.attention_hidden_size));
    }
    mel_head_ = nn::Linear::create(dims_.channels, dims_.mel_channels(), rng);
    linear_head_ = nn::Linear::create(dims_.channels, dims_.linear_channels(), rng);
  }

  const ModelDims& dims() const { return dims_; }
  std::size_t layers() const { return blocks_.size(); }
  bool uses_positional_encoding() const { return use_pe_; }
  double synthesis_rate() const { return synth_rate_; }

  nn::NamedParams parameters() const {
    nn::NamedParams out;
    encoder_.collect(out, "encoder");
    for (std::size_t l = 0; l < blocks_.size(); ++l) {
      if (l > 0) nn::collect_block(convs_[l - 1], out, "decoder.conv" + std::to_string(l));
      blocks_[l].collect(out, "decoder.attention" + std::to_string(l));
    }
    mel_head_.collect(out, "decoder.mel_head");
    linear_head_.collect(out, "decoder.linear_head");
    return out;
  }

  EncoderOutput encode(const std::vector<std::size_t>& ids, bool training, Rng& rng) const {
    return encoder_forward(encoder_, ids, training, rng);
  }

  /// One parallel pass producing `steps` decoder steps. `key_rate` sets the
  /// key encoding slope; `allowed` is an optional [steps x M] mask shared by
  /// every attention block.
  SpectrogramPrediction decode(const EncoderOutput& enc, std::size_t steps, double key_rate,
                               bool training, Rng& rng,
                               const std::vector<std::uint8_t>* allowed = nullptr) const {
    if (steps == 0) throw ContractError("paranet decode: zero target steps");
    const std::size_t M = enc.tokens(), C = dims_.channels;
    const Tensor pe_q = use_pe_ ? scaled_pe(steps, C, 1.0, dims_.position_weight) : Tensor({C, steps}, 0.0);
    const Tensor pe_k =
        use_pe_ ? scaled_pe(M, dims_.embed, key_rate, dims_.position_weight) : Tensor({dims_.embed, M}, 0.0);
    SpectrogramPrediction out;
    auto att = attention::attention_forward(blocks_[0], Tensor({C, steps}, 0.0), enc.keys, enc.values,
                                            pe_q, pe_k, allowed);
    Tensor h = att.context;
    out.alignments.push_back(att.weights);
    for (std::size_t l = 1; l < blocks_.size(); ++l) {
      h = nn::conv_block(h, convs_[l - 1], training, rng);
      att = attention::attention_forward(blocks_[l], h, enc.keys, enc.values, pe_q, pe_k, allowed);
      h = nn::scale(nn::add(h, att.context), std::sqrt(0.5));
      out.alignments.push_back(att.weights);
    }
    out.mel = mel_head_(h);
    out.linear = linear_head_(h);
    out.decoder_invocations = 1;
    return out;
  }

  /// Training-time pass: the key rate is this utterance's steps / tokens.
  SpectrogramPrediction forward(const std::vector<std::size_t>& ids, std::size_t target_steps,
                                bool training, Rng& rng) const {
    const auto enc = encode(ids, training, rng);
    const double rate = attention::position_rate(attention::PositionRole::kParanetKeyTrain, target_steps,
                                                 ids.size(), dims_.r);
    return decode(enc, target_steps, rate, training, rng);
  }

  /// Parallel synthesis of ceil(rate * M) steps in a single decoder call.
  /// `speed` overrides the rate (larger is slower speech).
  SpectrogramPrediction synthesize(const std::vector<std::size_t>& ids,
                                   const std::optional<attention::MaskConfig>& mask = std::nullopt,
                                   std::optional<double> speed = std::nullopt) const {
    nn::NoGradGuard guard;
    Rng unused(0);
    const double rate = speed.value_or(synth_rate_);
    const auto enc = encode(ids, false, unused);
    const std::size_t N = synthesis_steps(rate, ids.size());
    std::vector<std::uint8_t> allowed;
    if (mask && mask->enabled) {
      auto cfg = *mask;
      cfg.rate_ratio = 1.0 / rate;
      allowed = attention::mask_matrix(N, ids.size(), cfg);
    }
    return decode(enc, N, rate, false, unused, allowed.empty() ? nullptr : &allowed);
  }

 private:
  ModelDims dims_;
  bool use_pe_ = true;
  double synth_rate_ = 1.575;
  EncoderParams encoder_;
  std::vector<attention::AttentionBlockParams> blocks_;
  std::vector<nn::ConvBlockParams> convs_;
  nn::Linear mel_head_;
  nn::Linear linear_head_;
};

// ---------------------------------------------------------------------------
// Parameter accounting.

/// Parameter totals grouped by the first two name components
/// ("encoder.conv0.kernel" -> "encoder.conv0").
inline std::map<std::string, std::size_t> parameter_breakdown(const nn::NamedParams& params) {
  std::map<std::string, std::size_t> out;
  for (const auto& [name, t] : params) {
    const auto first = name.find('.');
    const auto second = first == std::string::npos ? std::string::npos : name.find('.', first + 1);
    out[name.substr(0, second)] += t.size();
  }
  return out;
}

}  // namespace paranet::seq2seq
