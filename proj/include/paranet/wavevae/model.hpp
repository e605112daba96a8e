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

// Waveform VAE: whitening encoder, IAF decoder, ELBO terms, spectral
// losses, prior synthesis and a small training loop.

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "paranet/config.hpp"
#include "paranet/dsp/audio.hpp"
#include "paranet/dsp/features.hpp"
#include "paranet/dsp/stft_loss.hpp"
#include "paranet/nn/optim.hpp"
#include "paranet/wavevae/networks.hpp"

namespace paranet::wavevae {

/// Trainable epsilon = exp(log_epsilon), starting at 1.
struct PosteriorConfig {
  Tensor log_epsilon = nn::zeros_param({1});

  Tensor epsilon() const { return nn::exp(log_epsilon); }
};

struct AnnealSchedule {
  double midpoint = 50000.0;
  double temperature = 10000.0;
};

/// 1 / (1 + exp(-(step - midpoint) / temperature)).
inline double anneal_weight(double step, const AnnealSchedule& s) {
  if (step < 0.0) throw ContractError("anneal_weight: step must be non-negative");
  if (!(s.temperature > 0.0)) throw ConfigError("anneal_weight: temperature must be positive");
  return 1.0 / (1.0 + std::exp(-(step - s.midpoint) / s.temperature));
}

inline GaussianStats gaussian_ar_forward(const GaussianARNet& net, const Tensor& x, const Tensor& cond) {
  return net.forward(x, cond);
}

struct PosteriorSample {
  Tensor z;
  GaussianStats stats;  // encoder mu(x_<t), sigma(x_<t)
  Tensor epsilon;
};

/// z = (x - mu) / sigma + epsilon * noise.
inline PosteriorSample posterior_sample(const GaussianARNet& encoder, const Tensor& x, const Tensor& cond,
                                        const PosteriorConfig& eps, const Tensor& noise) {
  if (noise.shape() != x.shape()) {
    throw ShapeError("posterior_sample: noise " + nn::shape_str(noise.shape()) + " vs signal " +
                     nn::shape_str(x.shape()));
  }
  PosteriorSample out;
  out.stats = gaussian_ar_forward(encoder, x, cond);
  out.epsilon = eps.epsilon();
  out.z = nn::add(nn::div(nn::sub(x, out.stats.mu), out.stats.sigma), nn::mul_scalar(noise, out.epsilon));
  return out;
}

struct FlowStep {
  Tensor z;
  GaussianStats stats;
};

/// z_next = z_prev * sigma + mu with (mu, sigma) predicted from z_prev.
inline FlowStep iaf_transform(const GaussianARNet& flow, const Tensor& z_prev, const Tensor& cond) {
  FlowStep out;
  out.stats = gaussian_ar_forward(flow, z_prev, cond);
  out.z = nn::add(nn::mul(z_prev, out.stats.sigma), out.stats.mu);
  return out;
}

/// Pushes z through every flow and returns the per-flow statistics.
inline std::vector<FlowStep> iaf_path(const std::vector<GaussianARNet>& flows, const Tensor& z0,
                                      const Tensor& cond) {
  if (flows.empty()) throw ConfigError("IAF stack needs at least one flow");
  std::vector<FlowStep> path;
  Tensor z = z0;
  for (const auto& f : flows) {
    path.push_back(iaf_transform(f, z, cond));
    z = path.back().z;
  }
  return path;
}

/// sigma_tot = prod_i sigma_i; mu_tot = sum_i mu_i prod_{j>i} sigma_j, with
/// `base` as term 0.
inline GaussianStats iaf_compose(const GaussianStats& base, const std::vector<GaussianStats>& flows) {
  GaussianStats tot = base;
  for (const auto& s : flows) {
    if (s.mu.shape() != tot.mu.shape()) throw ShapeError("iaf_compose: flow lengths differ");
    tot.mu = nn::add(nn::mul(tot.mu, s.sigma), s.mu);
    tot.sigma = nn::mul(tot.sigma, s.sigma);
  }
  return tot;
}

inline GaussianStats standard_normal_stats(std::size_t length) {
  return {Tensor({1, length}, 0.0), Tensor({1, length}, 1.0)};
}

inline GaussianStats compose_path(const std::vector<FlowStep>& path) {
  std::vector<GaussianStats> stats;
  for (const auto& p : path) stats.push_back(p.stats);
  return iaf_compose(standard_normal_stats(path.front().z.dim(1)), stats);
}

/// sum_t log N(x_t; mu_t, sigma_t).
inline Tensor gaussian_log_likelihood(const Tensor& x, const GaussianStats& s) {
  if (x.shape() != s.mu.shape() || x.shape() != s.sigma.shape()) {
    throw ShapeError("gaussian_log_likelihood: shape mismatch");
  }
  const double t = static_cast<double>(x.size());
  const Tensor delta = nn::div(nn::sub(x, s.mu), s.sigma);
  const Tensor per_step = nn::add(nn::log(s.sigma), nn::scale(nn::square(delta), 0.5));
  return nn::shift(nn::scale(nn::sum(per_step), -1.0), -0.5 * t * std::log(2.0 * std::numbers::pi));
}

inline Tensor decoder_likelihood(const Tensor& x, const GaussianStats& total) {
  return gaussian_log_likelihood(x, total);
}

/// sum_t [log(1/eps) + (eps^2 - 1 + ((x_t - mu_t) / sigma_t)^2) / 2].
inline Tensor kl_closed_form(const Tensor& x, const GaussianStats& enc, const Tensor& epsilon) {
  if (epsilon.size() != 1) throw ShapeError("kl_closed_form: epsilon must be a scalar");
  const double t = static_cast<double>(x.size());
  const Tensor delta = nn::div(nn::sub(x, enc.mu), enc.sigma);
  const Tensor e = nn::sum(epsilon);
  const Tensor per_eps = nn::add(nn::scale(nn::log(e), -t), nn::scale(nn::square(e), 0.5 * t));
  return nn::add(nn::shift(per_eps, -0.5 * t), nn::scale(nn::sum(nn::square(delta)), 0.5));
}

/// Hyperparameters that shape the VAE.
struct WaveVaeShape {
  std::size_t bands = 80;
  std::vector<std::size_t> flow_layers{10, 10, 10, 30};
  std::size_t encoder_layers = 20;
  std::size_t channels = 64;
  std::size_t filter_size = 3;
  std::size_t dilation_cycle = 10;
  std::vector<std::size_t> conditioner_strides{15, 20};
  std::size_t conditioner_freq_width = 3;
  double leaky_slope = 0.4;

  static WaveVaeShape from(const Hyperparams& h) {
    WaveVaeShape s;
    s.bands = h.mel_bands;
    s.flow_layers = h.wavevae_flow_layers;
    s.encoder_layers = h.wavevae_encoder_layers;
    s.channels = h.wavevae_channels;
    s.filter_size = h.wavevae_filter_size;
    s.dilation_cycle = h.wavevae_dilation_cycle;
    s.conditioner_strides = h.conditioner_strides;
    s.conditioner_freq_width = h.conditioner_freq_width;
    s.leaky_slope = h.conditioner_leaky_slope;
    return s;
  }
};

/// Encoder, flows and epsilon share one conditioner.
struct WaveVae {
  Conditioner conditioner;
  GaussianARNet encoder;
  std::vector<GaussianARNet> flows;
  PosteriorConfig posterior;

  WaveVae() = default;

  WaveVae(const WaveVaeShape& s, Rng& rng)
      : conditioner(s.bands, s.conditioner_strides, s.conditioner_freq_width, s.leaky_slope, rng) {
    if (s.flow_layers.empty()) throw ConfigError("WaveVae: need at least one flow");
    auto net_shape = [&](std::size_t layers) {
      return GaussianARShape{layers, s.channels, s.filter_size, s.dilation_cycle, s.bands};
    };
    encoder = GaussianARNet(net_shape(s.encoder_layers), rng);
    for (auto l : s.flow_layers) flows.emplace_back(net_shape(l), rng);
  }

  nn::NamedParams parameters() const {
    nn::NamedParams out;
    conditioner.collect(out, "wavevae.conditioner");
    encoder.collect(out, "wavevae.encoder");
    for (std::size_t i = 0; i < flows.size(); ++i) flows[i].collect(out, "wavevae.flow" + std::to_string(i));
    out.emplace_back("wavevae.log_epsilon", posterior.log_epsilon);
    return out;
  }
};

struct WaveVaeLosses {
  double recon = 0.0;
  double kl = 0.0;  // already multiplied by the anneal weight
  double stft_recon = 0.0;
  double stft_prior = 0.0;
  double total = 0.0;
  double kl_weight = 0.0;
  double epsilon = 0.0;

  std::vector<std::pair<std::string, double>> named() const {
    return {{"recon", recon},   {"kl", kl},           {"stft_recon", stft_recon}, {"stft_prior", stft_prior},
            {"total", total},   {"kl_weight", kl_weight}, {"epsilon", epsilon}};
  }
};

/// One training clip: waveform [1 x T] and its normalized log-mel.
struct WaveExample {
  Tensor audio;
  Tensor mel;  // [frames x bands]
  int sample_rate = 0;
};

inline WaveExample make_wave_example(const dsp::AudioClip& clip, const dsp::FeatureExtractor& fx) {
  WaveExample ex;
  ex.audio = Tensor({1, clip.size()}, clip.samples);
  ex.mel = dsp::normalize_log(fx.mel(clip).values, fx.config().log_floor);
  ex.sample_rate = clip.sample_rate;
  return ex;
}

/// Standard-normal draws for one loss evaluation.
struct LossNoise {
  Tensor posterior;
  Tensor reconstruction;
  Tensor prior;

  static LossNoise draw(std::size_t length, Rng& rng) {
    return {Tensor({1, length}, rng.normal_vector(length)), Tensor({1, length}, rng.normal_vector(length)),
            Tensor({1, length}, rng.normal_vector(length))};
  }
};

struct WaveVaeLossOptions {
  AnnealSchedule anneal;
  dsp::StftLossConfig stft;
};

namespace detail {

inline void require_finite(const WaveVaeLosses& l, const char* who) {
  bool ok = true;
  for (const auto& [name, v] : l.named()) ok = ok && std::isfinite(v);
  if (ok) return;
  std::ostringstream msg;
  msg << who << ": non-finite loss;";
  for (const auto& [name, v] : l.named()) msg << ' ' << name << '=' << v;
  throw NumericError(msg.str());
}

}  // namespace detail

/// The four objective terms as graph nodes.
struct WaveVaeTerms {
  Tensor recon;
  Tensor kl;  // weighted
  Tensor stft_recon;
  Tensor stft_prior;
  double kl_weight = 0.0;
  Tensor epsilon;
};

inline WaveVaeTerms wavevae_terms(const WaveVae& model, const WaveExample& ex, double step, const LossNoise& noise,
                                  const WaveVaeLossOptions& opt = {}) {
  const std::size_t len = ex.audio.dim(1);
  const Tensor cond = model.conditioner(ex.mel, len);
  const auto post = posterior_sample(model.encoder, ex.audio, cond, model.posterior, noise.posterior);
  const GaussianStats total = compose_path(iaf_path(model.flows, post.z, cond));

  WaveVaeTerms t;
  t.kl_weight = anneal_weight(step, opt.anneal);
  t.epsilon = post.epsilon;
  t.recon = nn::scale(decoder_likelihood(ex.audio, total), -1.0);
  t.kl = nn::scale(kl_closed_form(ex.audio, post.stats, post.epsilon), t.kl_weight);
  const Tensor drawn = nn::add(total.mu, nn::mul(noise.reconstruction, total.sigma));
  t.stft_recon = dsp::stft_loss(drawn, ex.audio, ex.sample_rate, opt.stft);
  const Tensor prior_audio = iaf_path(model.flows, noise.prior, cond).back().z;
  t.stft_prior = dsp::stft_loss(prior_audio, ex.audio, ex.sample_rate, opt.stft);
  return t;
}

/// Negative ELBO plus both spectral terms for one clip. The reported total
/// is recon + kl + stft_recon + stft_prior.
inline std::pair<Tensor, WaveVaeLosses> wavevae_loss(const WaveVae& model, const WaveExample& ex, double step,
                                                     const LossNoise& noise, const WaveVaeLossOptions& opt = {}) {
  const auto t = wavevae_terms(model, ex, step, noise, opt);
  WaveVaeLosses parts;
  parts.recon = t.recon.item();
  parts.kl = t.kl.item();
  parts.stft_recon = t.stft_recon.item();
  parts.stft_prior = t.stft_prior.item();
  parts.total = parts.recon + parts.kl + parts.stft_recon + parts.stft_prior;
  parts.kl_weight = t.kl_weight;
  parts.epsilon = t.epsilon.item();
  detail::require_finite(parts, "wavevae_loss");
  return {nn::sum_scalars({t.recon, t.kl, t.stft_recon, t.stft_prior}), parts};
}

/// Batch mean of wavevae_loss with fresh noise per clip.
inline std::pair<Tensor, WaveVaeLosses> wavevae_batch_loss(const WaveVae& model,
                                                           const std::vector<WaveExample>& batch, double step,
                                                           Rng& rng, const WaveVaeLossOptions& opt = {}) {
  if (batch.empty()) throw ContractError("wavevae_batch_loss: empty batch");
  std::vector<Tensor> terms;
  WaveVaeLosses mean;
  for (const auto& ex : batch) {
    auto [loss, parts] = wavevae_loss(model, ex, step, LossNoise::draw(ex.audio.dim(1), rng), opt);
    terms.push_back(loss);
    mean.recon += parts.recon;
    mean.kl += parts.kl;
    mean.stft_recon += parts.stft_recon;
    mean.stft_prior += parts.stft_prior;
    mean.kl_weight = parts.kl_weight;
    mean.epsilon = parts.epsilon;
  }
  const double n = static_cast<double>(batch.size());
  mean.recon /= n;
  mean.kl /= n;
  mean.stft_recon /= n;
  mean.stft_prior /= n;
  mean.total = mean.recon + mean.kl + mean.stft_recon + mean.stft_prior;
  return {nn::scale(nn::sum_scalars(terms), 1.0 / n), mean};
}

/// Flows applied to z0 = noise; the waveform is clipped to [-1, 1].
inline dsp::AudioClip prior_synthesize(const WaveVae& model, const Tensor& mel, const Tensor& noise,
                                       int sample_rate) {
  nn::NoGradGuard guard;
  if (noise.rank() != 2 || noise.dim(0) != 1) throw ShapeError("prior_synthesize: noise must be [1 x T]");
  const Tensor cond = model.conditioner(mel, noise.dim(1));
  const Tensor z = iaf_path(model.flows, noise, cond).back().z;
  dsp::AudioClip clip;
  clip.sample_rate = sample_rate;
  clip.samples.resize(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) clip.samples[i] = std::clamp(z.at(i), -1.0, 1.0);
  return clip;
}

/// Samples covered by `frames` of conditioning at the model's hop.
inline std::size_t samples_for_frames(const WaveVae& model, std::size_t frames) {
  return frames * model.conditioner.hop();
}

inline WaveVaeLossOptions loss_options(const Hyperparams& h) {
  WaveVaeLossOptions o;
  o.anneal = {h.anneal_midpoint, h.anneal_temperature};
  // Smallest power of two holding the analysis window: 2048 at 24 kHz.
  const auto win = static_cast<std::size_t>(std::lround(h.audio_sample_rate * o.stft.win_length_ms / 1000.0));
  o.stft.fft_size = std::bit_ceil(std::max<std::size_t>(win, 2));
  return o;
}

inline nn::OptimizerState make_wavevae_optimizer(const Hyperparams& h) {
  nn::OptimizerState s;
  s.learning_rate = h.adam_learning_rate;
  s.clip_norm = h.max_gradient_norm;
  s.clip_value = h.gradient_clipping_max_value;
  return s;
}

inline WaveVaeLosses wavevae_train_step(WaveVae& model, const std::vector<WaveExample>& batch,
                                        nn::OptimizerState& opt, Rng& rng, const WaveVaeLossOptions& lopt) {
  const auto params = model.parameters();
  nn::zero_grads(params);
  auto [loss, parts] = wavevae_batch_loss(model, batch, static_cast<double>(opt.step), rng, lopt);
  nn::backward(loss);
  auto tensors = nn::tensors_of(params);
  nn::adam_step(tensors, opt);
  for (const auto& [name, t] : params) {
    for (double v : t.data()) {
      if (!std::isfinite(v)) throw NumericError("wavevae_train_step: parameter " + name + " became non-finite");
    }
  }
  return parts;
}

/// Full-batch training; returns the per-step losses.
inline std::vector<WaveVaeLosses> train_wavevae(WaveVae& model, const std::vector<WaveExample>& corpus,
                                                const Hyperparams& h, std::size_t steps, Rng& rng,
                                                nn::OptimizerState* state = nullptr) {
  nn::OptimizerState local = make_wavevae_optimizer(h);
  nn::OptimizerState& opt = state ? *state : local;
  const auto lopt = loss_options(h);
  std::vector<WaveVaeLosses> log;
  for (std::size_t s = 0; s < steps; ++s) log.push_back(wavevae_train_step(model, corpus, opt, rng, lopt));
  return log;
}

}  // namespace paranet::wavevae
