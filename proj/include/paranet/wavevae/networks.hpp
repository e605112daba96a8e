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

// Building blocks of the waveform VAE: the Gaussian autoregressive network
// and the mel-to-sample-rate conditioner.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "paranet/nn/conv.hpp"
#include "paranet/nn/ops.hpp"
#include "paranet/nn/params.hpp"

namespace paranet::wavevae {

using nn::Tensor;

inline constexpr double kLogSigmaMin = -7.0;
inline constexpr double kLogSigmaMax = 7.0;

/// Per-step Gaussian parameters, each [1 x T].
struct GaussianStats {
  Tensor mu;
  Tensor sigma;

  std::size_t length() const { return mu.dim(1); }
};

struct GaussianARLayer {
  Tensor kernel;         // [2C x C x w], causal and dilated
  Tensor bias;           // [2C]
  Tensor cond_weight;    // [2C x cond]
  nn::Linear residual;   // C -> C
  nn::Linear skip;       // C -> C
  std::size_t dilation = 1;
};

struct GaussianARShape {
  std::size_t layers = 3;
  std::size_t channels = 16;
  std::size_t filter_size = 3;
  std::size_t dilation_cycle = 3;
  std::size_t cond_channels = 1;
};

/// Causal dilated WaveNet-style stack predicting mu(x_<t) and sigma(x_<t).
/// The input is shifted right by one sample before the first causal
/// convolution, so step t never sees x_t or later.
class GaussianARNet {
 public:
  GaussianARNet() = default;

  GaussianARNet(const GaussianARShape& shape, Rng& rng) : shape_(shape) {
    if (shape.layers == 0 || shape.channels == 0 || shape.filter_size == 0 || shape.dilation_cycle == 0 ||
        shape.cond_channels == 0) {
      throw ConfigError("GaussianARNet: layers, channels, filter size, dilation cycle and conditioner "
                        "channels must be positive");
    }
    const std::size_t c = shape.channels, w = shape.filter_size;
    input_ = nn::Linear::create(1, c, rng);
    for (std::size_t l = 0; l < shape.layers; ++l) {
      GaussianARLayer layer;
      layer.kernel = nn::glorot_uniform({2 * c, c, w}, c * w, 2 * c * w, rng);
      layer.bias = nn::zeros_param({2 * c});
      layer.cond_weight = nn::glorot_uniform({2 * c, shape.cond_channels}, shape.cond_channels, 2 * c, rng);
      layer.residual = nn::Linear::create(c, c, rng);
      layer.skip = nn::Linear::create(c, c, rng);
      layer.dilation = std::size_t{1} << (l % shape.dilation_cycle);
      layers_.push_back(std::move(layer));
    }
    hidden_ = nn::Linear::create(c, c, rng);
    output_ = nn::Linear::create(c, 2, rng);
    // Small output weights start every flow close to the identity map.
    auto w_out = output_.weight.mutable_data();
    for (auto& v : w_out) v *= 0.1;
  }

  const GaussianARShape& shape() const { return shape_; }
  std::size_t cond_channels() const { return shape_.cond_channels; }
  const std::vector<GaussianARLayer>& layers() const { return layers_; }
  const nn::Linear& input() const { return input_; }
  const nn::Linear& hidden() const { return hidden_; }
  /// Row 0 predicts mu, row 1 predicts log sigma.
  const nn::Linear& output() const { return output_; }

  /// x [1 x T], cond [cond_channels x T]. All steps in one pass.
  GaussianStats forward(const Tensor& x, const Tensor& cond) const {
    if (x.rank() != 2 || x.dim(0) != 1) throw ShapeError("GaussianARNet: input must be [1 x T]");
    if (cond.rank() != 2 || cond.dim(0) != shape_.cond_channels || cond.dim(1) != x.dim(1)) {
      throw ShapeError("GaussianARNet: conditioner " + nn::shape_str(cond.shape()) + " does not match input " +
                       nn::shape_str(x.shape()) + " with " + std::to_string(shape_.cond_channels) +
                       " channels");
    }
    const std::size_t c = shape_.channels;
    const double half = std::sqrt(0.5);
    Tensor h = input_(nn::shift_right(x, 1));
    Tensor skip_sum;
    for (const auto& layer : layers_) {
      Tensor a = nn::conv1d(h, layer.kernel, layer.bias, {nn::Causality::kCausal, layer.dilation});
      a = nn::add(a, nn::matmul(layer.cond_weight, cond));
      const Tensor gate = nn::mul(nn::tanh(nn::slice_rows(a, 0, c)), nn::sigmoid(nn::slice_rows(a, c, 2 * c)));
      h = nn::scale(nn::add(h, layer.residual(gate)), half);
      const Tensor s = layer.skip(gate);
      skip_sum = skip_sum.defined() ? nn::add(skip_sum, s) : s;
    }
    const Tensor out = output_(nn::relu(hidden_(nn::relu(skip_sum))));
    const Tensor log_sigma = nn::clamp(nn::slice_rows(out, 1, 2), kLogSigmaMin, kLogSigmaMax);
    return {nn::slice_rows(out, 0, 1), nn::exp(log_sigma)};
  }

  void collect(nn::NamedParams& out, const std::string& prefix) const {
    input_.collect(out, prefix + ".input");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const std::string p = prefix + ".layer" + std::to_string(l);
      out.emplace_back(p + ".kernel", layers_[l].kernel);
      out.emplace_back(p + ".bias", layers_[l].bias);
      out.emplace_back(p + ".cond_weight", layers_[l].cond_weight);
      layers_[l].residual.collect(out, p + ".residual");
      layers_[l].skip.collect(out, p + ".skip");
    }
    hidden_.collect(out, prefix + ".hidden");
    output_.collect(out, prefix + ".output");
  }

  nn::NamedParams parameters() const {
    nn::NamedParams out;
    collect(out, "net");
    return out;
  }

 private:
  GaussianARShape shape_;
  nn::Linear input_;
  std::vector<GaussianARLayer> layers_;
  nn::Linear hidden_;
  nn::Linear output_;
};

/// Upsamples a [frames x bands] log-mel map to [bands x frames*hop] with two
/// (or more) transposed 2-D convolutions over (frequency, time), each
/// followed by a leaky ReLU.
class Conditioner {
 public:
  Conditioner() = default;

  Conditioner(std::size_t bands, const std::vector<std::size_t>& strides, std::size_t freq_width,
              double leaky_slope, Rng& rng)
      : bands_(bands), strides_(strides), slope_(leaky_slope) {
    if (bands == 0 || strides.empty() || freq_width % 2 == 0) {
      throw ConfigError("Conditioner: need bands > 0, at least one stride and an odd frequency width");
    }
    for (auto s : strides) {
      if (s == 0) throw ConfigError("Conditioner: strides must be positive");
      const std::size_t kt = 2 * s;
      kernels_.push_back(nn::glorot_uniform({freq_width, kt}, freq_width * kt / s, freq_width * kt, rng));
      biases_.push_back(nn::zeros_param({1}));
    }
  }

  std::size_t bands() const { return bands_; }
  std::size_t hop() const {
    std::size_t h = 1;
    for (auto s : strides_) h *= s;
    return h;
  }

  /// mel [frames x bands] -> [bands x samples]; `samples` must not exceed
  /// frames * hop and the upsampled map is cropped to it.
  Tensor operator()(const Tensor& mel, std::size_t samples) const {
    if (mel.rank() != 2 || mel.dim(1) != bands_) {
      throw ShapeError("Conditioner: expected [frames x " + std::to_string(bands_) + "], got " +
                       nn::shape_str(mel.shape()));
    }
    const std::size_t full = mel.dim(0) * hop();
    if (samples == 0 || samples > full) {
      throw ShapeError("Conditioner: " + std::to_string(mel.dim(0)) + " frames cover " + std::to_string(full) +
                       " samples, asked for " + std::to_string(samples));
    }
    Tensor h = nn::transpose(mel);
    for (std::size_t i = 0; i < strides_.size(); ++i) {
      h = nn::leaky_relu(nn::conv_transpose2d_time(h, kernels_[i], biases_[i], strides_[i]), slope_);
    }
    return samples == full ? h : nn::slice_cols(h, 0, samples);
  }

  void collect(nn::NamedParams& out, const std::string& prefix) const {
    for (std::size_t i = 0; i < kernels_.size(); ++i) {
      out.emplace_back(prefix + ".upsample" + std::to_string(i) + ".kernel", kernels_[i]);
      out.emplace_back(prefix + ".upsample" + std::to_string(i) + ".bias", biases_[i]);
    }
  }

 private:
  std::size_t bands_ = 0;
  std::vector<std::size_t> strides_;
  double slope_ = 0.4;
  std::vector<Tensor> kernels_;
  std::vector<Tensor> biases_;
};

}  // namespace paranet::wavevae
