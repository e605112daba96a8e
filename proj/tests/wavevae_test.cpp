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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "paranet/nn/gradcheck.hpp"
#include "paranet/seq2seq/toy_corpus.hpp"
#include "paranet/wavevae/model.hpp"

namespace paranet::wavevae {
namespace {

constexpr double kLog2Pi = 1.8378770664093453;

void Fill(const nn::NamedParams& params, double v) {
  for (auto [name, t] : params) {
    for (auto& x : t.mutable_data()) x = v;
  }
}

void Set(Tensor t, std::initializer_list<double> values) {
  auto d = t.mutable_data();
  ASSERT_EQ(d.size(), values.size());
  std::copy(values.begin(), values.end(), d.begin());
}

/// A net whose every weight is zero and whose heads emit constant (mu, log sigma).
GaussianARNet ConstantNet(std::size_t cond_channels, double mu, double log_sigma, std::size_t layers = 2) {
  Rng rng(3);
  GaussianARNet net({layers, 4, 3, 2, cond_channels}, rng);
  Fill(net.parameters(), 0.0);
  Set(net.output().bias, {mu, log_sigma});
  return net;
}

Tensor Row(std::vector<double> v) {
  const std::size_t n = v.size();
  return Tensor({1, n}, std::move(v));
}

Tensor RandomRow(std::size_t n, Rng& rng, double scale = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = scale * rng.normal();
  return Row(std::move(v));
}

Tensor RandomMatrix(std::size_t r, std::size_t c, Rng& rng) {
  std::vector<double> v(r * c);
  for (auto& x : v) x = rng.normal();
  return Tensor({r, c}, std::move(v));
}

WaveVaeShape TinyShape() {
  WaveVaeShape s;
  s.bands = 4;
  s.flow_layers = {2, 2};
  s.encoder_layers = 2;
  s.channels = 3;
  s.filter_size = 3;
  s.dilation_cycle = 2;
  s.conditioner_strides = {2, 2};
  return s;
}

WaveExample TinyExample(Rng& rng) {
  WaveExample ex;
  ex.sample_rate = 1000;
  std::vector<double> a(64);
  for (std::size_t n = 0; n < a.size(); ++n) a[n] = 0.4 * std::sin(0.3 * n) + 0.05 * rng.normal();
  ex.audio = Row(a);
  ex.mel = RandomMatrix(16, 4, rng);
  return ex;
}

WaveVaeLossOptions TinyOptions() {
  WaveVaeLossOptions o;
  o.stft.fft_size = 64;
  o.anneal = {10.0, 5.0};
  return o;
}

// ---------------------------------------------------------------------------
// Gaussian AR network.

TEST(GaussianAR, ZeroWeightsGiveBiasHeads) {
  const auto net = ConstantNet(2, 0.3, -0.2);
  Rng rng(1);
  const auto s = gaussian_ar_forward(net, RandomRow(9, rng), RandomMatrix(2, 9, rng));
  ASSERT_EQ(s.length(), 9u);
  for (std::size_t t = 0; t < 9; ++t) {
    EXPECT_DOUBLE_EQ(s.mu.at(t), 0.3);
    EXPECT_DOUBLE_EQ(s.sigma.at(t), std::exp(-0.2));
  }
}

TEST(GaussianAR, LogSigmaIsClamped) {
  Rng rng(1);
  const auto hi = gaussian_ar_forward(ConstantNet(1, 0.0, 50.0), RandomRow(3, rng), RandomMatrix(1, 3, rng));
  const auto lo = gaussian_ar_forward(ConstantNet(1, 0.0, -50.0), RandomRow(3, rng), RandomMatrix(1, 3, rng));
  EXPECT_DOUBLE_EQ(hi.sigma.at(0), std::exp(7.0));
  EXPECT_DOUBLE_EQ(lo.sigma.at(0), std::exp(-7.0));
  EXPECT_GT(lo.sigma.at(2), 0.0);
}

TEST(GaussianAR, StrictlyCausal) {
  Rng rng(5);
  GaussianARNet net({4, 5, 3, 3, 2}, rng);
  Tensor x = RandomRow(24, rng);
  const Tensor cond = RandomMatrix(2, 24, rng);
  const auto base = net.forward(x, cond);
  const std::size_t t0 = 11;
  x.mutable_data()[t0] += 0.7;
  const auto moved = net.forward(x, cond);
  for (std::size_t t = 0; t <= t0; ++t) {
    EXPECT_EQ(moved.mu.at(t), base.mu.at(t)) << t;
    EXPECT_EQ(moved.sigma.at(t), base.sigma.at(t)) << t;
  }
  EXPECT_NE(moved.mu.at(t0 + 1), base.mu.at(t0 + 1));
}

TEST(GaussianAR, FirstStepSeesNoHistory) {
  Rng rng(6);
  GaussianARNet net({3, 4, 3, 3, 1}, rng);
  const Tensor cond = RandomMatrix(1, 5, rng);
  const auto a = net.forward(RandomRow(5, rng), cond);
  const auto b = net.forward(RandomRow(5, rng), cond);
  EXPECT_EQ(a.mu.at(0), b.mu.at(0));
  EXPECT_EQ(a.sigma.at(0), b.sigma.at(0));
}

TEST(GaussianAR, OneLayerMatchesHandArithmetic) {
  Rng rng(0);
  GaussianARNet net({1, 1, 3, 1, 1}, rng);
  Set(net.input().weight, {0.5});
  Set(net.input().bias, {0.1});
  const auto& layer = net.layers()[0];
  Set(layer.kernel, {0.2, -0.3, 0.4, 0.1, 0.5, -0.2});
  Set(layer.bias, {0.05, -0.1});
  Set(layer.cond_weight, {0.3, -0.4});
  Set(layer.skip.weight, {1.5});
  Set(layer.skip.bias, {0.2});
  Set(net.hidden().weight, {0.8});
  Set(net.hidden().bias, {-0.1});
  Set(net.output().weight, {0.7, -0.6});
  Set(net.output().bias, {0.05, 0.02});

  const auto s = net.forward(Row({1.0, 0.0}), Row({0.5, -1.0}));

  const auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  const auto relu = [](double v) { return std::max(v, 0.0); };
  // Shifted input [0, 1] through the 1x1 input map.
  const double h0 = 0.1, h1 = 0.6;
  const double a0[2] = {0.4 * h0 + 0.05 + 0.3 * 0.5, -0.3 * h0 + 0.4 * h1 + 0.05 + 0.3 * -1.0};
  const double a1[2] = {-0.2 * h0 - 0.1 - 0.4 * 0.5, 0.5 * h0 - 0.2 * h1 - 0.1 - 0.4 * -1.0};
  for (int t = 0; t < 2; ++t) {
    const double gate = std::tanh(a0[t]) * sig(a1[t]);
    const double hidden = relu(0.8 * relu(1.5 * gate + 0.2) - 0.1);
    EXPECT_NEAR(s.mu.at(t), 0.7 * hidden + 0.05, 1e-14) << t;
    EXPECT_NEAR(s.sigma.at(t), std::exp(-0.6 * hidden + 0.02), 1e-14) << t;
  }
}

TEST(GaussianAR, DilationDoublesAndResetsPerCycle) {
  Rng rng(0);
  GaussianARNet net({7, 2, 3, 3, 1}, rng);
  std::vector<std::size_t> d;
  for (const auto& l : net.layers()) d.push_back(l.dilation);
  EXPECT_EQ(d, (std::vector<std::size_t>{1, 2, 4, 1, 2, 4, 1}));
}

TEST(GaussianAR, LengthMismatchIsShapeError) {
  const auto net = ConstantNet(2, 0, 0);
  Rng rng(0);
  EXPECT_THROW(net.forward(RandomRow(5, rng), RandomMatrix(2, 6, rng)), ShapeError);
  EXPECT_THROW(net.forward(RandomRow(5, rng), RandomMatrix(3, 5, rng)), ShapeError);
}

// ---------------------------------------------------------------------------
// Conditioner.

TEST(Conditioner, UpsamplesToFramesTimesHop) {
  Rng rng(2);
  Conditioner c(4, {2, 5}, 3, 0.4, rng);
  EXPECT_EQ(c.hop(), 10u);
  const Tensor mel = RandomMatrix(7, 4, rng);
  const Tensor full = c(mel, 70);
  EXPECT_EQ(full.shape(), (nn::Shape{4, 70}));
  const Tensor cropped = c(mel, 64);
  EXPECT_EQ(cropped.shape(), (nn::Shape{4, 64}));
  for (std::size_t f = 0; f < 4; ++f) {
    for (std::size_t t = 0; t < 64; ++t) EXPECT_EQ(cropped.at(f * 64 + t), full.at(f * 70 + t));
  }
  EXPECT_THROW(c(mel, 71), ShapeError);
  EXPECT_THROW(c(RandomMatrix(7, 5, rng), 70), ShapeError);
}

TEST(Conditioner, LeakySlopeOnNegativeInputs) {
  Rng rng(2);
  Conditioner c(1, {2}, 1, 0.4, rng);
  auto params = nn::NamedParams{};
  c.collect(params, "c");
  Fill(params, 0.0);
  Set(params[0].second, {1.0, 1.0, 1.0, 1.0});
  const Tensor out = c(Tensor({3, 1}, std::vector<double>{-2.0, 1.0, 0.5}), 6);
  // Stride 2, width 4, crop 1: output t gathers inputs floor((t+1)/2) and
  // floor((t+1)/2) - 1 where valid.
  const double expect[6] = {-2.0 * 0.4, -1.0 * 0.4, -1.0 * 0.4, 1.5, 1.5, 0.5};
  for (int t = 0; t < 6; ++t) EXPECT_NEAR(out.at(t), expect[t], 1e-15) << t;
}

// ---------------------------------------------------------------------------
// Posterior, flows and composition.

TEST(Posterior, IdentityWhiteningWithVanishingEpsilon) {
  const auto enc = ConstantNet(1, 0.0, 0.0);
  PosteriorConfig eps;
  Set(eps.log_epsilon, {-60.0});
  Rng rng(4);
  const Tensor x = RandomRow(12, rng);
  const auto p = posterior_sample(enc, x, RandomMatrix(1, 12, rng), eps, RandomRow(12, rng));
  for (std::size_t t = 0; t < 12; ++t) EXPECT_NEAR(p.z.at(t), x.at(t), 1e-20);
}

TEST(Posterior, SignalAtMeanWithoutNoiseIsZero) {
  const auto enc = ConstantNet(1, 0.25, 0.4);
  Rng rng(4);
  const auto p = posterior_sample(enc, Row(std::vector<double>(6, 0.25)), RandomMatrix(1, 6, rng), {},
                                  Row(std::vector<double>(6, 0.0)));
  for (std::size_t t = 0; t < 6; ++t) EXPECT_EQ(p.z.at(t), 0.0);
}

TEST(Posterior, MatchesScalarFormula) {
  Rng rng(8);
  GaussianARNet enc({3, 4, 3, 3, 2}, rng);
  PosteriorConfig eps;
  Set(eps.log_epsilon, {-0.3});
  const Tensor x = RandomRow(15, rng, 0.5), noise = RandomRow(15, rng), cond = RandomMatrix(2, 15, rng);
  const auto p = posterior_sample(enc, x, cond, eps, noise);
  const auto s = enc.forward(x, cond);
  for (std::size_t t = 0; t < 15; ++t) {
    const double want = (x.at(t) - s.mu.at(t)) / s.sigma.at(t) + std::exp(-0.3) * noise.at(t);
    EXPECT_NEAR(p.z.at(t), want, 1e-13);
  }
  EXPECT_THROW(posterior_sample(enc, x, cond, eps, RandomRow(14, rng)), ShapeError);
}

TEST(Posterior, EpsilonStartsAtOne) { EXPECT_DOUBLE_EQ(PosteriorConfig{}.epsilon().item(), 1.0); }

TEST(Iaf, IdentityFlow) {
  Rng rng(1);
  const Tensor z = RandomRow(8, rng);
  const auto out = iaf_transform(ConstantNet(1, 0.0, 0.0), z, RandomMatrix(1, 8, rng));
  for (std::size_t t = 0; t < 8; ++t) EXPECT_EQ(out.z.at(t), z.at(t));
}

TEST(Iaf, ConstantFlowArithmetic) {
  Rng rng(1);
  const auto out = iaf_transform(ConstantNet(1, 1.0, std::log(2.0)), Row({0.5}), RandomMatrix(1, 1, rng));
  EXPECT_NEAR(out.z.item(), 2.0, 1e-15);
}

TEST(Iaf, RandomFlowIsElementwiseAffine) {
  Rng rng(12);
  GaussianARNet flow({3, 4, 3, 2, 2}, rng);
  const Tensor z = RandomRow(20, rng), cond = RandomMatrix(2, 20, rng);
  const auto s = flow.forward(z, cond);
  const auto out = iaf_transform(flow, z, cond);
  for (std::size_t t = 0; t < 20; ++t) EXPECT_NEAR(out.z.at(t), z.at(t) * s.sigma.at(t) + s.mu.at(t), 1e-14);
}

TEST(Iaf, ComposeWithNoFlowsKeepsBase) {
  const GaussianStats base{Row({0.3, -1.0}), Row({2.0, 0.5})};
  const auto tot = iaf_compose(base, {});
  EXPECT_EQ(tot.mu.at(0), 0.3);
  EXPECT_EQ(tot.sigma.at(1), 0.5);
}

TEST(Iaf, ComposeTwoConstantFlows) {
  const GaussianStats base{Row({1.0}), Row({2.0})};
  const auto tot = iaf_compose(base, {{Row({-1.0}), Row({3.0})}});
  EXPECT_DOUBLE_EQ(tot.sigma.item(), 6.0);
  EXPECT_DOUBLE_EQ(tot.mu.item(), 2.0);
  for (double e : {-1.3, 0.0, 0.7}) EXPECT_DOUBLE_EQ((e * 2.0 + 1.0) * 3.0 - 1.0, e * 6.0 + 2.0);
}

TEST(Iaf, UnitScalesAddShifts) {
  const auto one = Row({1.0, 1.0});
  const auto tot = iaf_compose({Row({0.5, 0.0}), one}, {{Row({1.0, -2.0}), one}, {Row({0.25, 3.0}), one}});
  EXPECT_DOUBLE_EQ(tot.mu.at(0), 1.75);
  EXPECT_DOUBLE_EQ(tot.mu.at(1), 1.0);
  EXPECT_DOUBLE_EQ(tot.sigma.at(0), 1.0);
}

TEST(Iaf, SequentialApplicationMatchesClosedForm) {
  Rng rng(21);
  std::vector<GaussianARNet> flows;
  for (int i = 0; i < 3; ++i) flows.emplace_back(GaussianARShape{3, 4, 3, 2, 2}, rng);
  const Tensor eps = RandomRow(30, rng), cond = RandomMatrix(2, 30, rng);
  const auto path = iaf_path(flows, eps, cond);
  const auto tot = compose_path(path);
  const Tensor x = path.back().z;
  for (std::size_t t = 0; t < 30; ++t) {
    EXPECT_NEAR(x.at(t), eps.at(t) * tot.sigma.at(t) + tot.mu.at(t), 1e-8);
  }
  EXPECT_THROW(iaf_path({}, eps, cond), ConfigError);
}

// ---------------------------------------------------------------------------
// Likelihood, KL and annealing.

TEST(Likelihood, AtMeanWithUnitScale) {
  const auto ll = decoder_likelihood(Row({0.1, 0.2, 0.3}), {Row({0.1, 0.2, 0.3}), Row({1.0, 1.0, 1.0})});
  EXPECT_NEAR(ll.item(), -1.5 * kLog2Pi, 1e-14);
}

TEST(Likelihood, SingleSampleMatchesDensity) {
  const double x = 0.8, mu = -0.1, sigma = 0.35;
  const double density = std::exp(-0.5 * std::pow((x - mu) / sigma, 2)) / (sigma * std::sqrt(2 * std::numbers::pi));
  EXPECT_NEAR(decoder_likelihood(Row({x}), {Row({mu}), Row({sigma})}).item(), std::log(density), 1e-13);
}

TEST(Likelihood, FallsWithDistanceFromMean) {
  double prev = 1e300;
  for (double d : {0.0, 0.1, 0.5, 1.0, 3.0}) {
    const double ll = decoder_likelihood(Row({d}), {Row({0.0}), Row({0.7})}).item();
    EXPECT_LT(ll, prev);
    prev = ll;
  }
}

TEST(Kl, ZeroWhenPosteriorIsPrior) {
  Rng rng(3);
  const Tensor x = RandomRow(7, rng);
  EXPECT_NEAR(kl_closed_form(x, {x, Row(std::vector<double>(7, 0.9))}, Row({1.0})).item(), 0.0, 1e-15);
}

TEST(Kl, HalfEpsilonAtMean) {
  const double got = kl_closed_form(Row({0.4}), {Row({0.4}), Row({2.0})}, Tensor::scalar(0.5)).item();
  EXPECT_NEAR(got, std::log(2.0) - 0.375, 1e-15);
  EXPECT_NEAR(got, 0.318147, 1e-6);
}

TEST(Kl, UnitWhitenedOffset) {
  EXPECT_NEAR(kl_closed_form(Row({1.5}), {Row({1.0}), Row({0.5})}, Tensor::scalar(1.0)).item(), 0.5, 1e-15);
}

/// Monte-Carlo KL(N(m, e) || N(0, 1)) summed over steps.
struct McKl {
  double mean = 0.0;
  double stderr_ = 0.0;
};

McKl MonteCarloKl(const std::vector<double>& m, double e, std::size_t samples, Rng& rng) {
  double s = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    double v = 0.0;
    for (double mt : m) {
      const double z = mt + e * rng.normal();
      const double log_q = -0.5 * std::pow((z - mt) / e, 2) - std::log(e);
      const double log_p = -0.5 * z * z;
      v += log_q - log_p;
    }
    s += v;
    s2 += v * v;
  }
  const double n = static_cast<double>(samples);
  const double mean = s / n;
  return {mean, std::sqrt((s2 / n - mean * mean) / n)};
}

TEST(Kl, MatchesMonteCarloForHalfEpsilon) {
  Rng rng(17);
  const auto mc = MonteCarloKl({0.0}, 0.5, 100000, rng);
  EXPECT_NEAR(mc.mean, std::log(2.0) - 0.375, 3 * mc.stderr_);
}

TEST(Kl, MatchesMonteCarloOnRandomInputs) {
  Rng rng(23);
  for (int trial = 0; trial < 3; ++trial) {
    const std::size_t len = 4;
    const Tensor x = RandomRow(len, rng), mu = RandomRow(len, rng, 0.5);
    std::vector<double> sig(len), m(len);
    for (std::size_t t = 0; t < len; ++t) {
      sig[t] = 0.5 + rng.uniform(0.0, 1.5);
      m[t] = (x.at(t) - mu.at(t)) / sig[t];
    }
    const double e = rng.uniform(0.3, 1.6);
    const double closed = kl_closed_form(x, {mu, Row(sig)}, Tensor::scalar(e)).item();
    const auto mc = MonteCarloKl(m, e, 100000, rng);
    EXPECT_NEAR(closed, mc.mean, 3 * mc.stderr_) << "trial " << trial;
  }
}

TEST(Kl, NonNegativeOnRandomInputs) {
  Rng rng(29);
  for (int i = 0; i < 500; ++i) {
    const double e = std::exp(rng.uniform(-4.0, 3.0));
    const double d = rng.normal(0.0, 3.0);
    EXPECT_GE(kl_closed_form(Row({d}), {Row({0.0}), Row({1.0})}, Tensor::scalar(e)).item(), 0.0);
  }
}

TEST(Anneal, MidpointSaturationAndMonotonicity) {
  const AnnealSchedule s{200.0, 50.0};
  EXPECT_DOUBLE_EQ(anneal_weight(200.0, s), 0.5);
  EXPECT_NEAR(anneal_weight(200.0 + 20 * 50.0, s), 1.0, 1e-6);
  double prev = 0.0;
  for (double step = 0; step <= 2000; step += 25) {
    const double w = anneal_weight(step, s);
    EXPECT_GT(w, prev);
    EXPECT_GT(w, 0.0);
    EXPECT_LT(w, 1.0);
    prev = w;
  }
  EXPECT_THROW(anneal_weight(-1.0, s), ContractError);
  EXPECT_DOUBLE_EQ(anneal_weight(50000.0, AnnealSchedule{}), 0.5);
}

// ---------------------------------------------------------------------------
// Objective.

TEST(WaveVaeLoss, TotalIsExactSumOfComponents) {
  Rng rng(31);
  const WaveVae model(TinyShape(), rng);
  const auto ex = TinyExample(rng);
  const auto [loss, parts] = wavevae_loss(model, ex, 3.0, LossNoise::draw(64, rng), TinyOptions());
  EXPECT_EQ(parts.total, parts.recon + parts.kl + parts.stft_recon + parts.stft_prior);
  EXPECT_EQ(loss.item(), parts.total);
}

TEST(WaveVaeLoss, KlIsNegligibleAtStepZero) {
  Rng rng(32);
  const WaveVae model(TinyShape(), rng);
  const auto ex = TinyExample(rng);
  const auto noise = LossNoise::draw(64, rng);
  auto opt = TinyOptions();
  opt.anneal = {50000.0, 10000.0};
  const auto early = wavevae_terms(model, ex, 0.0, noise, opt);
  opt.anneal = {0.0, 10000.0};
  const double raw = 2.0 * wavevae_terms(model, ex, 0.0, noise, opt).kl.item();
  EXPECT_LT(early.kl_weight, 0.007);
  EXPECT_NEAR(early.kl.item(), early.kl_weight * raw, 1e-12 * std::abs(raw));
  EXPECT_LT(std::abs(early.kl.item()), 0.007 * std::abs(raw));
}

TEST(WaveVaeLoss, FiniteOnHalfSecondMiniClips) {
  const auto h = mini_preset();
  const dsp::FeatureExtractor fx(h.dsp());
  Rng rng(33);
  const WaveVae model(WaveVaeShape::from(h), rng);
  for (const auto& clip : seq2seq::sine_corpus(2, h.audio_sample_rate / 2, h.audio_sample_rate)) {
    const auto ex = make_wave_example(clip, fx);
    const auto [loss, parts] =
        wavevae_loss(model, ex, 0.0, LossNoise::draw(clip.size(), rng), loss_options(h));
    for (const auto& [name, v] : parts.named()) EXPECT_TRUE(std::isfinite(v)) << name;
  }
}

TEST(WaveVaeLoss, NonFiniteParameterAborts) {
  Rng rng(34);
  WaveVae model(TinyShape(), rng);
  const auto ex = TinyExample(rng);
  Tensor w = model.flows[0].output().bias;
  w.mutable_data()[0] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(wavevae_loss(model, ex, 0.0, LossNoise::draw(64, rng), TinyOptions()), NumericError);
}

class WaveVaeGradCheck : public ::testing::TestWithParam<int> {};

TEST_P(WaveVaeGradCheck, ComponentGradientsMatchFiniteDifferences) {
  Rng rng(40);
  const WaveVae model(TinyShape(), rng);
  // A generic interior point: no ReLU input exactly at zero and a
  // non-stationary epsilon.
  for (auto [name, t] : model.parameters()) {
    for (auto& v : t.mutable_data()) v = rng.uniform(-0.4, 0.4);
  }
  const auto ex = TinyExample(rng);
  const auto noise = LossNoise::draw(64, rng);
  const auto opt = TinyOptions();
  const int which = GetParam();
  const auto f = [&] {
    const auto t = wavevae_terms(model, ex, 10.0, noise, opt);
    switch (which) {
      case 0: return t.recon;
      case 1: return t.kl;
      case 2: return t.stft_recon;
      default: return t.stft_prior;
    }
  };
  nn::GradCheckOptions gopt;
  gopt.max_elements = 6;
  gopt.seed = 7;
  gopt.step = 1e-2;
  gopt.decades = 5;
  EXPECT_LT(nn::grad_check(f, nn::tensors_of(model.parameters()), gopt), 1e-4);
}

std::string ComponentName(const ::testing::TestParamInfo<int>& info) {
  static const char* const kNames[] = {"Recon", "Kl", "StftRecon", "StftPrior"};
  return kNames[info.param];
}

INSTANTIATE_TEST_SUITE_P(Components, WaveVaeGradCheck, ::testing::Values(0, 1, 2, 3), ComponentName);

TEST(WaveVaeLoss, PriorPathLeavesEncoderWithoutGradient) {
  Rng rng(41);
  const WaveVae model(TinyShape(), rng);
  const auto ex = TinyExample(rng);
  const auto params = model.parameters();
  nn::zero_grads(params);
  nn::backward(wavevae_terms(model, ex, 0.0, LossNoise::draw(64, rng), TinyOptions()).stft_prior);
  for (const auto& [name, t] : params) {
    if (name.rfind("wavevae.encoder", 0) != 0 && name != "wavevae.log_epsilon") continue;
    if (!t.has_grad()) continue;
    for (double g : t.grad()) EXPECT_EQ(g, 0.0) << name;
  }
}

// ---------------------------------------------------------------------------
// Prior synthesis and training.

TEST(PriorSynthesis, IdentityFlowsReturnClippedNoise) {
  Rng rng(50);
  WaveVae model(TinyShape(), rng);
  for (auto& f : model.flows) {
    Fill(f.parameters(), 0.0);
  }
  const Tensor noise = RandomRow(64, rng, 1.5);
  const auto clip = prior_synthesize(model, RandomMatrix(16, 4, rng), noise, 1000);
  ASSERT_EQ(clip.size(), 64u);
  EXPECT_EQ(clip.sample_rate, 1000);
  for (std::size_t t = 0; t < 64; ++t) EXPECT_EQ(clip.samples[t], std::clamp(noise.at(t), -1.0, 1.0));
}

TEST(PriorSynthesis, DeterministicAndSized) {
  Rng rng(51);
  const WaveVae model(TinyShape(), rng);
  const Tensor mel = RandomMatrix(16, 4, rng);
  Rng a(9), b(9);
  const auto x = prior_synthesize(model, mel, RandomRow(64, a), 1000);
  const auto y = prior_synthesize(model, mel, RandomRow(64, b), 1000);
  EXPECT_EQ(x.samples, y.samples);
  EXPECT_EQ(x.size(), samples_for_frames(model, 16));
  for (double v : x.samples) {
    EXPECT_GE(v, -1.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(WaveVaeTraining, SineCorpusLossDropsWithin150Steps) {
  const auto h = mini_preset();
  const dsp::FeatureExtractor fx(h.dsp());
  std::vector<WaveExample> corpus;
  for (const auto& clip : seq2seq::sine_corpus(4, h.wavevae_clip_samples, h.audio_sample_rate)) {
    corpus.push_back(make_wave_example(clip, fx));
  }
  Rng rng(1);
  WaveVae model(WaveVaeShape::from(h), rng);
  const auto log = train_wavevae(model, corpus, h, 150, rng);
  ASSERT_EQ(log.size(), 150u);
  const double initial = log.front().total;
  ASSERT_GT(initial, 0.0);
  EXPECT_LT(log.back().total, 0.7 * initial) << "initial " << initial;
}

}  // namespace
}  // namespace paranet::wavevae
