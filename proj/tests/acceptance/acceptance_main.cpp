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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails. Pass criterion numbers as arguments to
// run a subset.

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "paranet/harness/commands.hpp"
#include "paranet/nn/gradcheck.hpp"

namespace {

namespace fs = std::filesystem;
using namespace paranet;
using nn::Tensor;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

double Seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Tensor Random(nn::Shape shape, Rng& rng, double scale = 1.0) {
  std::vector<double> v(nn::numel(shape));
  for (auto& x : v) x = rng.uniform(-scale, scale);
  return Tensor(std::move(shape), std::move(v));
}

Tensor Row(std::vector<double> v) {
  const std::size_t n = v.size();
  return Tensor({1, n}, std::move(v));
}

// Fixed random weights reduce any tensor to a scalar with generic gradients.
Tensor Project(const Tensor& y, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> w(y.size());
  for (auto& v : w) v = rng.uniform(-1.0, 1.0);
  return nn::weighted_sum(y, w);
}

// Row-stochastic random matrix.
Tensor RandomAlignment(std::size_t rows, std::size_t cols, Rng& rng) {
  std::vector<double> v(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += v[r * cols + c] = rng.uniform(0.05, 1.0);
    for (std::size_t c = 0; c < cols; ++c) v[r * cols + c] /= s;
  }
  return Tensor({rows, cols}, std::move(v));
}

// ---------------------------------------------------------------------------
// 1. Gradient integrity.

Outcome GradientIntegrity() {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::size_t checks = 0;
  auto record = [&](const std::string& name, double err) {
    ++checks;
    worst = std::max(worst, err);
    o.require(err < 1e-4, name + " rel err " + std::to_string(err));
  };

  // Convolution blocks and the transposed upsampler.
  struct ConvCase {
    std::size_t c, t, w, dil;
    nn::Causality mode;
  };
  const std::vector<ConvCase> convs{{2, 6, 3, 1, nn::Causality::kCausal},
                                    {3, 9, 5, 2, nn::Causality::kNonCausal},
                                    {4, 14, 3, 3, nn::Causality::kCausal}};
  std::uint64_t seed = 300;
  for (const auto& cs : convs) {
    Rng rng(seed++);
    const auto x = Random({cs.c, cs.t}, rng);
    auto p = nn::make_conv_block(cs.c, cs.w, cs.mode, 1.0, rng, cs.dil);
    for (auto& v : p.bias.mutable_data()) v = rng.uniform(-0.5, 0.5);
    record("conv_block", nn::grad_check([&] { return Project(nn::conv_block(x, p, false, rng), seed); },
                                        {x, p.kernel, p.bias}));
    const auto k2 = Random({3, 2 * (cs.dil + 1)}, rng);
    const auto b2 = Tensor::scalar(0.2);
    record("conv_transpose2d_time",
           nn::grad_check([&] { return Project(nn::conv_transpose2d_time(x, k2, b2, cs.dil + 1), seed); },
                          {x, k2, b2}));
  }

  // Attention blocks, masked and unmasked.
  const std::vector<std::pair<std::size_t, std::size_t>> attn_shapes{{3, 2}, {5, 4}, {9, 6}};
  for (auto [N, M] : attn_shapes) {
    Rng rng(seed++);
    const auto p = attention::AttentionBlockParams::create(6, 6, 5, 6, rng, false, 8);
    const auto q = Random({6, N}, rng), k = Random({6, M}, rng), v = Random({5, M}, rng);
    const auto pq = Random({6, N}, rng), pk = Random({6, M}, rng);
    nn::NamedParams named;
    p.collect(named, "att");
    std::vector<Tensor> inputs{q, k, v};
    // The key bias shifts every score of a row equally; its gradient is zero.
    for (const auto& [name, t] : named) {
      if (name != "att.key.bias") inputs.push_back(t);
    }
    for (bool masked : {false, true}) {
      const auto allowed = attention::mask_matrix(N, M);
      record("attention", nn::grad_check(
                              [&] {
                                const auto out =
                                    attention::attention_forward(p, q, k, v, pq, pk, masked ? &allowed : nullptr);
                                return nn::add(Project(out.context, seed), Project(out.weights, seed + 1));
                              },
                              inputs));
    }
  }

  // Distillation cross entropy through a softmax of student scores.
  for (std::size_t K : {1u, 2u, 3u}) {
    Rng rng(seed++);
    const std::size_t N = 3 + 2 * K, M = 2 + K;
    const auto teacher = RandomAlignment(N, M, rng);
    std::vector<Tensor> scores;
    for (std::size_t i = 0; i < K; ++i) scores.push_back(Random({N, M}, rng, 2.0));
    record("distillation", nn::grad_check(
                               [&] {
                                 std::vector<Tensor> students;
                                 for (const auto& s : scores) students.push_back(nn::softmax_rows(s));
                                 return attention::attention_distillation_loss(students, teacher);
                               },
                               scores));
  }

  // STFT magnitude loss.
  for (std::size_t len : {90u, 120u, 170u}) {
    Rng rng(seed++);
    dsp::StftLossConfig cfg;
    cfg.fft_size = 64;
    const auto x = Random({len}, rng), y = Random({len}, rng);
    record("stft_loss", nn::grad_check([&] { return dsp::stft_loss(x, y, 800, cfg); }, {x}));
  }

  // ELBO components of the WaveVAE.
  for (std::size_t variant = 0; variant < 3; ++variant) {
    Rng rng(seed++);
    wavevae::WaveVaeShape shape;
    shape.bands = 3 + variant;
    shape.flow_layers = std::vector<std::size_t>(1 + variant % 2, 2);
    shape.encoder_layers = 2;
    shape.channels = 3;
    shape.filter_size = 2 + variant;
    shape.dilation_cycle = 2;
    shape.conditioner_strides = {2, 2};
    const wavevae::WaveVae model(shape, rng);
    for (auto [name, t] : model.parameters()) {
      for (auto& v : t.mutable_data()) v = rng.uniform(-0.4, 0.4);
    }
    const std::size_t frames = 12 + 4 * variant, samples = 4 * frames;
    wavevae::WaveExample ex;
    ex.sample_rate = 1000;
    std::vector<double> a(samples);
    for (std::size_t n = 0; n < samples; ++n) a[n] = 0.4 * std::sin(0.3 * n) + 0.05 * rng.normal();
    ex.audio = Row(a);
    ex.mel = Random({frames, shape.bands}, rng);
    const auto noise = wavevae::LossNoise::draw(samples, rng);
    wavevae::WaveVaeLossOptions lopt;
    lopt.stft.fft_size = 64;
    lopt.anneal = {10.0, 5.0};
    nn::GradCheckOptions gopt;
    gopt.max_elements = 4;
    gopt.seed = seed;
    gopt.step = 1e-2;
    gopt.decades = 5;
    const auto params = nn::tensors_of(model.parameters());
    const char* names[] = {"elbo.recon", "elbo.kl", "elbo.stft_recon", "elbo.stft_prior"};
    for (int which = 0; which < 4; ++which) {
      record(names[which], nn::grad_check(
                               [&] {
                                 const auto t = wavevae::wavevae_terms(model, ex, 10.0, noise, lopt);
                                 return which == 0 ? t.recon : which == 1 ? t.kl : which == 2 ? t.stft_recon
                                                                                              : t.stft_prior;
                               },
                               params, gopt));
    }
  }

  const double secs = Seconds(start);
  o.require(secs < 120.0, "runtime " + std::to_string(secs) + " s");
  o.detail << checks << " checks, worst relative error " << worst << ", " << secs << " s";
  return o;
}

// ---------------------------------------------------------------------------
// 2. Distillation oracles.

Outcome DistillationOracles() {
  Outcome o;
  std::vector<double> diag(16, 0.0);
  for (std::size_t i = 0; i < 4; ++i) diag[i * 4 + (3 * i + 1) % 4] = 1.0;
  const Tensor one_hot({4, 4}, diag);
  const Tensor uniform({4, 4}, 0.25);
  const double a = attention::attention_distillation_loss({one_hot, one_hot}, one_hot).item();
  const double b = attention::attention_distillation_loss({uniform, uniform}, uniform).item();
  // K = 2: one block equals the one-hot teacher (0), the other is uniform (ln 4).
  const double c = attention::attention_distillation_loss({one_hot, uniform}, one_hot).item();
  o.require(std::abs(a) <= 1e-9, "one-hot match " + std::to_string(a));
  o.require(std::abs(b - std::log(4.0)) <= 1e-9, "uniform M=4 " + std::to_string(b));
  o.require(std::abs(c - 0.693147) <= 1e-6, "mixed K=2 " + std::to_string(c));
  o.detail << "one-hot " << a << ", uniform " << b << ", mixed " << c;
  return o;
}

// ---------------------------------------------------------------------------
// 3. Flow composition.

Outcome FlowComposition() {
  Outcome o;
  Rng rng(3003);
  double worst = 0.0;
  for (int stack = 0; stack < 100; ++stack) {
    const std::size_t flows_n = 1 + rng.index(4);
    const std::size_t len = 1 + rng.index(64);
    const std::size_t cond_channels = 1 + rng.index(3);
    std::vector<wavevae::GaussianARNet> flows;
    for (std::size_t f = 0; f < flows_n; ++f) {
      flows.emplace_back(wavevae::GaussianARShape{1 + rng.index(3), 2 + rng.index(4), 2 + rng.index(3), 2,
                                                  cond_channels},
                         rng);
      for (auto [name, t] : flows.back().parameters()) {
        for (auto& v : t.mutable_data()) v = rng.uniform(-0.5, 0.5);
      }
    }
    std::vector<double> e(len), c(cond_channels * len);
    for (auto& v : e) v = rng.normal();
    for (auto& v : c) v = rng.normal();
    const Tensor eps = Row(e), cond({cond_channels, len}, c);
    nn::NoGradGuard guard;
    // Sequential application, one flow at a time.
    Tensor z = eps;
    std::vector<wavevae::GaussianStats> stats;
    for (const auto& f : flows) {
      const auto step = wavevae::iaf_transform(f, z, cond);
      z = step.z;
      stats.push_back(step.stats);
    }
    // Closed form accumulated test-side: mu_tot = mu_tot * s_i + mu_i,
    // sigma_tot = sigma_tot * s_i.
    std::vector<double> mu(len, 0.0), sg(len, 1.0);
    for (const auto& s : stats) {
      for (std::size_t t = 0; t < len; ++t) {
        mu[t] = mu[t] * s.sigma.at(t) + s.mu.at(t);
        sg[t] *= s.sigma.at(t);
      }
    }
    for (std::size_t t = 0; t < len; ++t) {
      const double err = std::abs(z.at(t) - (e[t] * sg[t] + mu[t]));
      worst = std::max(worst, err);
    }
    const auto tot = wavevae::iaf_compose(wavevae::standard_normal_stats(len), stats);
    for (std::size_t t = 0; t < len; ++t) {
      worst = std::max(worst, std::abs(z.at(t) - (e[t] * tot.sigma.at(t) + tot.mu.at(t))));
    }
  }
  o.require(worst <= 1e-8, "max deviation " + std::to_string(worst));
  o.detail << "100 stacks, max |sequential - closed form| = " << worst;
  return o;
}

// ---------------------------------------------------------------------------
// 4. KL closed form against Monte Carlo.

Outcome KlAgainstMonteCarlo() {
  Outcome o;
  Rng rng(4004);
  double worst_z = 0.0;
  double min_kl = 1e300;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t len = 1 + rng.index(6);
    std::vector<double> x(len), mu(len), sig(len), m(len);
    for (std::size_t t = 0; t < len; ++t) {
      x[t] = rng.normal();
      mu[t] = 0.5 * rng.normal();
      sig[t] = std::exp(rng.uniform(-1.0, 1.0));
      m[t] = (x[t] - mu[t]) / sig[t];
    }
    const double e = std::exp(rng.uniform(-1.5, 0.7));
    const double closed = wavevae::kl_closed_form(Row(x), {Row(mu), Row(sig)}, Tensor::scalar(e)).item();
    min_kl = std::min(min_kl, closed);
    // q(z) = N(m, e^2), p(z) = N(0, 1), summed over steps.
    double s = 0.0, s2 = 0.0;
    const std::size_t samples = 100000;
    for (std::size_t i = 0; i < samples; ++i) {
      double v = 0.0;
      for (double mt : m) {
        const double z = mt + e * rng.normal();
        v += (-0.5 * std::pow((z - mt) / e, 2) - std::log(e)) - (-0.5 * z * z);
      }
      s += v;
      s2 += v * v;
    }
    const double n = static_cast<double>(samples);
    const double mean = s / n;
    const double se = std::sqrt((s2 / n - mean * mean) / n);
    const double zscore = std::abs(closed - mean) / se;
    worst_z = std::max(worst_z, zscore);
    o.require(zscore <= 3.0, "trial " + std::to_string(trial) + " z " + std::to_string(zscore));
  }
  for (int i = 0; i < 2000; ++i) {
    const double e = std::exp(rng.uniform(-5.0, 3.0));
    const double kl = wavevae::kl_closed_form(Row({rng.normal(0.0, 3.0)}), {Row({rng.normal()}),
                                                                            Row({std::exp(rng.uniform(-3.0, 3.0))})},
                                              Tensor::scalar(e))
                          .item();
    min_kl = std::min(min_kl, kl);
  }
  o.require(min_kl >= 0.0, "negative KL " + std::to_string(min_kl));
  o.detail << "20 cases, worst |closed - MC| = " << worst_z << " SE; min KL " << min_kl;
  return o;
}

// ---------------------------------------------------------------------------
// 5. Masking contract.

Outcome MaskingContract() {
  Outcome o;
  std::size_t windows = 0;
  for (std::size_t M : {1u, 8u, 41u, 100u}) {
    for (std::size_t i = 0; i <= 200; ++i) {
      // Nearest integer to 40 i / 63 (no exact halves: gcd(80, 63) = 1).
      const long center = std::min<long>(static_cast<long>((80 * i + 63) / 126), static_cast<long>(M) - 1);
      std::vector<std::size_t> expect;
      for (long j = std::max(0L, center - 3); j <= std::min<long>(center + 3, static_cast<long>(M) - 1); ++j) {
        expect.push_back(static_cast<std::size_t>(j));
      }
      ++windows;
      if (attention::attention_mask(i, M) != expect) {
        o.require(false, "window i=" + std::to_string(i) + " M=" + std::to_string(M));
      }
    }
  }
  // Masked attention weights.
  Rng rng(5005);
  double worst_row = 0.0;
  std::size_t leaks = 0;
  for (std::size_t M : {1u, 8u, 41u}) {
    const std::size_t N = 63;
    const auto p = attention::AttentionBlockParams::create(6, 6, 5, 6, rng, false, 8);
    const auto allowed = attention::mask_matrix(N, M);
    nn::NoGradGuard guard;
    const auto out = attention::attention_forward(p, Random({6, N}, rng), Random({6, M}, rng), Random({5, M}, rng),
                                                  Random({6, N}, rng), Random({6, M}, rng), &allowed);
    for (std::size_t i = 0; i < N; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < M; ++j) {
        if (!allowed[i * M + j] && out.weights.at(i, j) != 0.0) ++leaks;
        row += out.weights.at(i, j);
      }
      worst_row = std::max(worst_row, std::abs(row - 1.0));
    }
  }
  o.require(leaks == 0, std::to_string(leaks) + " non-zero masked entries");
  o.require(worst_row <= 1e-6, "row sum deviation " + std::to_string(worst_row));
  o.detail << windows << " windows checked; masked entries non-zero: " << leaks << "; max |row sum - 1| "
           << worst_row;
  return o;
}

// ---------------------------------------------------------------------------
// 6. Parallel versus sequential decoding.

Outcome ParallelStructure() {
  Outcome o;
  const auto h = mini_preset();
  const text::TextFrontend frontend;
  const std::string sentence = "THE QUICK BROWN FOX JUMPS OVER LAZY DOGS";
  const auto tokens = frontend.tokenize(sentence);
  o.require(tokens.size() == 40, "sentence has " + std::to_string(tokens.size()) + " tokens");
  std::vector<std::size_t> ids;
  for (const auto& t : tokens) ids.push_back(t.id);
  Rng rng(6006);
  const seq2seq::TeacherModel teacher(h, frontend.vocabulary().size(), rng);
  const seq2seq::ParaNetModel paranet(h, frontend.vocabulary().size(), rng);
  attention::MaskConfig no_mask;
  no_mask.enabled = false;
  const auto tp = teacher.synthesize(ids, std::numeric_limits<std::size_t>::max(), no_mask);
  const auto pp = paranet.synthesize(ids, no_mask);
  o.require(tp.decoder_invocations == 63, "teacher invocations " + std::to_string(tp.decoder_invocations));
  o.require(pp.decoder_invocations == 1, "paranet invocations " + std::to_string(pp.decoder_invocations));
  o.require(tp.steps() == 63 && pp.steps() == 63, "step counts");
  const auto t_times = harness::summarize_timings(
      harness::time_runs(10, [&] { (void)teacher.synthesize(ids, std::numeric_limits<std::size_t>::max(), no_mask); }));
  const auto p_times = harness::summarize_timings(harness::time_runs(10, [&] { (void)paranet.synthesize(ids, no_mask); }));
  const double ratio = t_times.mean / p_times.mean;
  o.require(ratio >= 5.0, "speed ratio " + std::to_string(ratio));
  o.detail << "invocations teacher " << tp.decoder_invocations << " / paranet " << pp.decoder_invocations
           << "; mean of 10 runs " << t_times.mean << " s vs " << p_times.mean << " s, ratio " << ratio << "x";
  return o;
}

// ---------------------------------------------------------------------------
// 7. Ablation trends.

Outcome AblationTrends() {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  auto h = mini_preset();
  h.log_every = 0;
  const auto corpus = harness::toy_examples(h);
  seq2seq::AblationConfig cfg;
  cfg.teacher_steps = 300;
  cfg.paranet_steps = 300;
  cfg.seed = 1;
  const auto report = seq2seq::run_ablation(h, corpus, text::TextFrontend().vocabulary().size(), cfg);
  const auto& full = report.find("full").summary;
  const auto& no_distill = report.find("no_distillation").summary;
  const auto& no_pe = report.find("no_positional_encoding").summary;
  const double secs = Seconds(start);
  o.require(corpus.size() == 4, "corpus size");
  o.require(full.diagonal_rate >= 0.7, "full diagonal_rate " + std::to_string(full.diagonal_rate));
  o.require(no_distill.diagonal_rate <= full.diagonal_rate - 0.2,
            "no_distillation diagonal_rate " + std::to_string(no_distill.diagonal_rate));
  o.require(no_pe.diagonal_rate <= full.diagonal_rate - 0.2,
            "no_positional_encoding diagonal_rate " + std::to_string(no_pe.diagonal_rate));
  o.require(full.entropy_last < full.entropy_first, "entropy last >= first");
  o.require(secs <= 1200.0, "runtime " + std::to_string(secs) + " s");
  o.detail << "diagonal_rate full " << full.diagonal_rate << ", no_distillation " << no_distill.diagonal_rate
           << ", no_positional_encoding " << no_pe.diagonal_rate << "; entropy first " << full.entropy_first
           << " last " << full.entropy_last << "; " << secs << " s";
  return o;
}

// ---------------------------------------------------------------------------
// 8. Training smoke.

std::vector<double> TeacherTotals(const Hyperparams& h, const std::vector<seq2seq::Example>& corpus,
                                  std::size_t steps) {
  Rng rng(8008);
  seq2seq::TeacherModel teacher(h, text::TextFrontend().vocabulary().size(), rng);
  std::vector<double> totals;
  for (const auto& rec : seq2seq::train_teacher(teacher, corpus, h, steps, rng)) {
    totals.push_back(rec.values.back().second);
  }
  return totals;
}

std::vector<double> WaveVaeTotals(const Hyperparams& h, const std::vector<wavevae::WaveExample>& corpus,
                                  std::size_t steps) {
  Rng rng(8009);
  wavevae::WaveVae model(wavevae::WaveVaeShape::from(h), rng);
  std::vector<double> totals;
  for (const auto& l : wavevae::train_wavevae(model, corpus, h, steps, rng)) totals.push_back(l.total);
  return totals;
}

bool SameBits(const std::vector<double>& prefix, const std::vector<double>& full) {
  if (prefix.size() > full.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::bit_cast<std::uint64_t>(prefix[i]) != std::bit_cast<std::uint64_t>(full[i])) return false;
  }
  return true;
}

Outcome TrainingSmoke() {
  Outcome o;
  auto h = mini_preset();
  h.log_every = 0;
  const auto corpus = harness::toy_examples(h);
  const auto teacher = TeacherTotals(h, corpus, 300);
  const double t_ratio = teacher.back() / teacher.front();
  o.require(t_ratio < 0.5, "teacher final/initial " + std::to_string(t_ratio));
  o.require(SameBits(TeacherTotals(h, corpus, 5), teacher), "teacher rerun differs");

  const dsp::FeatureExtractor fx(h.dsp());
  std::vector<wavevae::WaveExample> sines;
  for (const auto& clip : seq2seq::sine_corpus(4, h.wavevae_clip_samples, h.audio_sample_rate)) {
    sines.push_back(wavevae::make_wave_example(clip, fx));
  }
  const auto vae = WaveVaeTotals(h, sines, 150);
  const double v_ratio = vae.back() / vae.front();
  o.require(vae.front() > 0.0 && vae.back() < 0.7 * vae.front(), "wavevae final/initial " + std::to_string(v_ratio));
  o.require(SameBits(WaveVaeTotals(h, sines, 5), vae), "wavevae rerun differs");
  o.detail << "teacher " << teacher.front() << " -> " << teacher.back() << " (" << t_ratio << "x) in 300 steps; "
           << "wavevae " << vae.front() << " -> " << vae.back() << " in 150 steps; reruns bit-identical";
  return o;
}

// ---------------------------------------------------------------------------
// 9. Parameter counts.

Outcome ParameterCounts() {
  Outcome o;
  const auto counts = harness::count_model_parameters(Hyperparams{});
  for (const auto& c : counts) {
    o.require(std::abs(c.deviation()) <= 0.2, c.model + " deviation " + std::to_string(c.deviation()));
    o.detail << c.model << " " << c.total << " (" << std::showpos << 100.0 * c.deviation() << std::noshowpos
             << "% vs " << c.reference << "; ";
    bool first = true;
    for (const auto& [group, n] : c.breakdown) {
      o.detail << (first ? "" : ", ") << group << " " << n;
      first = false;
    }
    o.detail << ") ";
  }
  return o;
}

// ---------------------------------------------------------------------------
// 10. Data-path exactness.

Outcome DataPathExactness() {
  Outcome o;
  Rng rng(1010);
  std::size_t roundtrips = 0;
  for (std::size_t r : {1u, 2u, 3u, 4u}) {
    for (std::size_t frames : {1u, 4u, 7u, 33u, 64u}) {
      const auto t = Random({frames, 5}, rng);
      const auto back = dsp::expand_frames(dsp::reduce_frames(t, r));
      ++roundtrips;
      if (back.shape() != t.shape() || !SameBits(t.values(), back.values())) {
        o.require(false, "reduce/expand r=" + std::to_string(r) + " frames=" + std::to_string(frames));
      }
    }
  }

  const auto dir = fs::temp_directory_path() / "paranet_acceptance_ckpt";
  fs::remove_all(dir);
  const auto h = mini_preset();
  const std::size_t vocab = text::TextFrontend().vocabulary().size();
  const seq2seq::ParaNetModel model(h, vocab, rng);
  auto ckpt = harness::model_checkpoint("paranet", model.parameters(), h, 7, 1010, rng, vocab);
  ckpt.tensors.push_back({"special",
                          {5},
                          {-0.0, std::numeric_limits<double>::denorm_min(), std::numeric_limits<double>::infinity(),
                           std::numeric_limits<double>::quiet_NaN(), 0.1}});
  io::save_checkpoint(dir / "a", ckpt);
  const auto back = io::load_checkpoint(dir / "a");
  bool exact = back.tensors.size() == ckpt.tensors.size();
  for (std::size_t i = 0; exact && i < ckpt.tensors.size(); ++i) {
    exact = back.tensors[i].name == ckpt.tensors[i].name && back.tensors[i].shape == ckpt.tensors[i].shape &&
            SameBits(ckpt.tensors[i].values, back.tensors[i].values);
  }
  o.require(exact, "checkpoint values differ after load");
  io::save_checkpoint(dir / "b", back);
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  };
  o.require(slurp(dir / "a" / io::kBlobName) == slurp(dir / "b" / io::kBlobName), "re-saved blob differs");
  const auto restored = harness::load_paranet(dir / "a");
  const auto p0 = model.parameters(), p1 = restored.model->parameters();
  bool params_exact = p0.size() == p1.size();
  for (std::size_t i = 0; params_exact && i < p0.size(); ++i) {
    params_exact = SameBits(p0[i].second.values(), p1[i].second.values());
  }
  o.require(params_exact, "restored parameters differ");
  fs::remove_all(dir);

  const fs::path data = PARANET_DATA_DIR;
  std::size_t counts[2] = {0, 0}, unknown = 0;
  const char* files[2] = {"sentences_15.txt", "sentences_100.txt"};
  for (int f = 0; f < 2; ++f) {
    const auto set = text::load_test_set(data / files[f]);
    counts[f] = set.size();
    for (const auto& u : set) {
      for (const auto& t : u.tokens) unknown += t.id == text::kUnkId;
    }
  }
  o.require(counts[0] == 15, "15-sentence set parsed to " + std::to_string(counts[0]));
  o.require(counts[1] == 100, "100-sentence set parsed to " + std::to_string(counts[1]));
  o.require(unknown == 0, std::to_string(unknown) + " unknown tokens");
  o.detail << roundtrips << " reduce/expand round trips exact; checkpoint of " << ckpt.tensors.size()
           << " tensors bit-exact and re-save byte-identical; test sets " << counts[0] << " and " << counts[1]
           << " utterances, " << unknown << " unknown tokens";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::warn);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient integrity", GradientIntegrity},
      {"distillation oracles", DistillationOracles},
      {"flow composition", FlowComposition},
      {"closed-form KL vs Monte Carlo", KlAgainstMonteCarlo},
      {"masking contract", MaskingContract},
      {"parallel vs sequential decoding", ParallelStructure},
      {"ablation trends", AblationTrends},
      {"training smoke", TrainingSmoke},
      {"parameter counts", ParameterCounts},
      {"data-path exactness", DataPathExactness},
  };
  std::set<std::size_t> only;
  for (int i = 1; i < argc; ++i) only.insert(std::stoul(argv[i]));
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!only.empty() && !only.count(i + 1)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    all = all && o.pass;
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.str().c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
