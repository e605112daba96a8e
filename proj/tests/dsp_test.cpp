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
#include <complex>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <vector>

#include "paranet/dsp/export.hpp"
#include "paranet/dsp/features.hpp"
#include "paranet/dsp/stft_loss.hpp"
#include "paranet/nn/gradcheck.hpp"

namespace paranet::dsp {
namespace {

using nn::Tensor;

constexpr double kPi = std::numbers::pi;

std::vector<double> Sine(double hz, int rate, std::size_t n, double amp = 0.5) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = amp * std::sin(2.0 * kPi * hz * i / rate);
  return x;
}

// Textbook framing and O(N^2) DFT, written independently of the FFTW path.
std::vector<std::vector<double>> DirectMagnitudes(const std::vector<double>& x, const StftParams& p) {
  const long L = static_cast<long>(x.size()), pad = static_cast<long>(p.win_length / 2);
  auto sample = [&](long i) {
    long s = i - pad;
    if (s < 0) s = -s;
    if (s >= L) s = 2 * (L - 1) - s;
    return x[static_cast<std::size_t>(s)];
  };
  const long frames = (L + 2 * pad - static_cast<long>(p.win_length)) / static_cast<long>(p.hop) + 1;
  std::vector<std::vector<double>> out(frames, std::vector<double>(p.fft_size / 2 + 1));
  for (long f = 0; f < frames; ++f) {
    for (std::size_t k = 0; k <= p.fft_size / 2; ++k) {
      std::complex<double> acc = 0.0;
      for (std::size_t n = 0; n < p.win_length; ++n) {
        const double w = 0.5 - 0.5 * std::cos(2.0 * kPi * n / p.win_length);
        acc += w * sample(f * static_cast<long>(p.hop) + static_cast<long>(n)) *
               std::polar(1.0, -2.0 * kPi * k * n / p.fft_size);
      }
      out[f][k] = std::abs(acc);
    }
  }
  return out;
}

Tensor Project(const Tensor& y, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> w(y.size());
  for (auto& v : w) v = rng.uniform(-1.0, 1.0);
  return nn::weighted_sum(y, w);
}

DspConfig SmallConfig() {
  DspConfig c;
  c.sample_rate = 8000;
  c.fft_size = 256;
  c.win_length = 200;
  c.hop = 50;
  c.mel_bands = 20;
  return c;
}

TEST(Stft, FrameCountFollowsReflectPadding) {
  const StftParams p{2048, 1200, 300};
  EXPECT_EQ(p.frames(24000), (24000 + 1200 - 1200) / 300 + 1);
  EXPECT_EQ(p.frames(601), 3u);
  EXPECT_THROW(p.frames(600), DataError);
}

TEST(Stft, MatchesDirectDft) {
  const StftParams p{64, 40, 10};
  Rng rng(3);
  std::vector<double> x(150);
  for (auto& v : x) v = rng.uniform(-1, 1);
  const auto got = stft_magnitude(AudioClip{x, 8000}, p);
  const auto want = DirectMagnitudes(x, p);
  ASSERT_EQ(got.dim(0), want.size());
  ASSERT_EQ(got.dim(1), 33u);
  for (std::size_t f = 0; f < want.size(); ++f) {
    for (std::size_t k = 0; k < 33; ++k) EXPECT_NEAR(got.at(f, k), want[f][k], 1e-10);
  }
}

TEST(Stft, SinePeaksAtNearestBin) {
  const int rate = 24000;
  const StftParams p{2048, 1200, 300};
  const double hz = 1000.0;
  const auto mag = stft_magnitude(AudioClip{Sine(hz, rate, 12000), rate}, p);
  const std::size_t expected = static_cast<std::size_t>(std::lround(hz * 2048 / rate));
  for (std::size_t f = 2; f + 2 < mag.dim(0); ++f) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < mag.dim(1); ++k) {
      if (mag.at(f, k) > mag.at(f, best)) best = k;
    }
    EXPECT_EQ(best, expected) << "frame " << f;
  }
}

TEST(Stft, DcEnergyLandsInBinZero) {
  // Window length equal to the FFT size puts every Hann sidelobe zero on a bin.
  const StftParams p{256, 256, 64};
  const auto mag = stft_magnitude(AudioClip{std::vector<double>(1000, 0.25), 8000}, p);
  double window_sum = 0.0;
  for (double w : hann_periodic(256)) window_sum += w;
  for (std::size_t f = 0; f < mag.dim(0); ++f) {
    EXPECT_NEAR(mag.at(f, 0), 0.25 * window_sum, 1e-9);
    EXPECT_LT(mag.at(f, 5), 1e-9);
  }
}

TEST(Stft, MagnitudeScalesLinearly) {
  const StftParams p{128, 100, 25};
  const auto x = Sine(440, 8000, 600);
  std::vector<double> x3 = x;
  for (auto& v : x3) v *= 3.0;
  const auto a = stft_magnitude(AudioClip{x, 8000}, p);
  const auto b = stft_magnitude(AudioClip{x3, 8000}, p);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(b.at(i), 3.0 * a.at(i), 1e-9);
}

TEST(Stft, GradientMatchesFiniteDifferences) {
  const StftParams p{32, 24, 6};
  Rng rng(11);
  std::vector<double> v(70);
  for (auto& s : v) s = rng.uniform(-1, 1);
  const double err = nn::grad_check(
      [&](const Tensor& x) { return Project(stft_magnitude(x, p), 5); }, Tensor({70}, v));
  EXPECT_LT(err, 1e-4);
}

TEST(Features, ProductionBinCount) {
  const DspConfig cfg;
  EXPECT_EQ(cfg.linear_bins(), 1025u);
  const auto lin = linear_spectrogram(AudioClip{Sine(500, 24000, 4800), 24000});
  EXPECT_EQ(lin.bins(), 1025u);
  EXPECT_EQ(lin.frames(), 17u);
}

TEST(Features, ZeroAudioHitsLogFloor) {
  const FeatureExtractor fx(SmallConfig());
  const auto [mel, lin] = fx.mel_and_linear(AudioClip{std::vector<double>(800, 0.0), 8000});
  EXPECT_EQ(mel.bins(), 20u);
  EXPECT_EQ(lin.bins(), 129u);
  for (double v : mel.values.data()) EXPECT_DOUBLE_EQ(v, std::log(1e-5));
  for (double v : lin.values.data()) EXPECT_DOUBLE_EQ(v, std::log(1e-5));
}

TEST(Features, FilterbankShape) {
  const auto cfg = SmallConfig();
  const auto fb = mel_filterbank(cfg);
  ASSERT_EQ(fb.dim(0), 20u);
  ASSERT_EQ(fb.dim(1), 129u);
  for (std::size_t k = 0; k < 129; ++k) {
    int nonzero = 0;
    for (std::size_t m = 0; m < 20; ++m) nonzero += fb.at(m, k) > 0.0;
    EXPECT_LE(nonzero, 2) << "bin " << k;
  }
  for (std::size_t m = 0; m < 20; ++m) {
    double row = 0.0;
    for (std::size_t k = 0; k < 129; ++k) row += fb.at(m, k);
    EXPECT_GT(row, 0.0) << "band " << m;
  }
}

TEST(Features, RejectsWrongSampleRate) {
  const FeatureExtractor fx(SmallConfig());
  EXPECT_THROW(fx.mel(AudioClip{std::vector<double>(800, 0.1), 16000}), DataError);
  EXPECT_THROW(fx.mel(AudioClip{{}, 8000}), DataError);
}

TEST(Reduction, PacksFourFramesPerStep) {
  std::vector<double> v(8 * 3);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
  const auto rf = reduce_frames(Tensor({8, 3}, v), 4);
  EXPECT_EQ(rf.steps(), 2u);
  EXPECT_EQ(rf.pad_frames, 0u);
  EXPECT_EQ(rf.values.dim(1), 12u);
  EXPECT_EQ(expand_frames(rf).values(), v);
}

TEST(Reduction, PadsTailAndDropsItOnExpand) {
  std::vector<double> v(9 * 2);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 + static_cast<double>(i);
  const auto rf = reduce_frames(Tensor({9, 2}, v), 4);
  EXPECT_EQ(rf.steps(), 3u);
  EXPECT_EQ(rf.pad_frames, 3u);
  EXPECT_EQ(rf.frames(), 9u);
  for (std::size_t i = 18; i < 24; ++i) EXPECT_EQ(rf.values.at(i), 0.0);
  EXPECT_EQ(expand_frames(rf).values(), v);
  EXPECT_EQ(expand_frames(rf, false).dim(0), 12u);
}

TEST(Reduction, FactorOneIsIdentity) {
  const std::vector<double> v{1, 2, 3, 4, 5, 6};
  const auto rf = reduce_frames(Tensor({3, 2}, v), 1);
  EXPECT_EQ(rf.values.values(), v);
  EXPECT_THROW(reduce_frames(Tensor({3, 2}, v), 0), ConfigError);
}

TEST(StftLoss, ZeroOnIdenticalInputsAndSymmetric) {
  const auto a = Sine(300, 8000, 1600);
  auto b = Sine(410, 8000, 1600, 0.3);
  EXPECT_DOUBLE_EQ(stft_loss(AudioClip{a, 8000}, AudioClip{a, 8000}), 0.0);
  EXPECT_NEAR(stft_loss(AudioClip{a, 8000}, AudioClip{b, 8000}),
              stft_loss(AudioClip{b, 8000}, AudioClip{a, 8000}), 1e-12);
  EXPECT_GT(stft_loss(AudioClip{a, 8000}, AudioClip{b, 8000}), 0.0);
}

TEST(StftLoss, MatchesDirectFormula) {
  // 8 kHz: 100-sample shift, 400-sample window.
  Rng rng(21);
  std::vector<double> a(1200), b(1200);
  for (auto& v : a) v = rng.uniform(-1, 1);
  for (auto& v : b) v = rng.uniform(-1, 1);
  const StftParams p{2048, 400, 100};
  const auto ma = DirectMagnitudes(a, p), mb = DirectMagnitudes(b, p);
  double sq = 0.0, logabs = 0.0;
  std::size_t count = 0;
  for (std::size_t f = 0; f < ma.size(); ++f) {
    for (std::size_t k = 0; k < ma[f].size(); ++k) {
      sq += (ma[f][k] - mb[f][k]) * (ma[f][k] - mb[f][k]);
      logabs += std::abs(std::log(std::max(ma[f][k], 1e-5)) - std::log(std::max(mb[f][k], 1e-5)));
      ++count;
    }
  }
  const double want = std::sqrt(sq) + logabs / static_cast<double>(count);
  EXPECT_NEAR(stft_loss(AudioClip{a, 8000}, AudioClip{b, 8000}), want, 1e-8 * want);
}

TEST(StftLoss, RejectsLengthMismatch) {
  EXPECT_THROW(stft_loss(AudioClip{std::vector<double>(900, 0.1), 8000},
                         AudioClip{std::vector<double>(1000, 0.1), 8000}),
               ShapeError);
}

TEST(StftLoss, GradientMatchesFiniteDifferences) {
  StftLossConfig cfg;
  cfg.fft_size = 64;  // 800 Hz: 10-sample shift, 40-sample window
  Rng rng(8);
  std::vector<double> a(120), b(120);
  for (auto& v : a) v = rng.uniform(-1, 1);
  for (auto& v : b) v = rng.uniform(-1, 1);
  const Tensor target({120}, b);
  const double err = nn::grad_check(
      [&](const Tensor& x) { return stft_loss(x, target, 800, cfg); }, Tensor({120}, a));
  EXPECT_LT(err, 1e-4);
}

TEST(GriffinLim, ZeroIterationsGivesRequestedLength) {
  const StftParams p{256, 200, 50};
  const std::size_t frames = 21;
  const Tensor mag({frames, p.bins()}, 1.0);
  GriffinLimOptions opt;
  opt.iterations = 0;
  EXPECT_EQ(griffin_lim(mag, p, opt).size(), (frames - 1) * p.hop);
}

TEST(GriffinLim, RecoversSineSpectrum) {
  const auto cfg = SmallConfig();
  const FeatureExtractor fx(cfg);
  const AudioClip clip{Sine(600, 8000, 4000), 8000};
  const auto lin = fx.linear(clip);
  GriffinLimOptions opt;
  opt.iterations = 200;
  const auto out = griffin_lim(lin, opt);
  EXPECT_EQ(out.size(), clip.size());
  const auto relin = fx.linear(out);
  const auto mag_in = stft_magnitude(clip, cfg.stft());
  const auto mag_out = stft_magnitude(out, cfg.stft());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < mag_in.size(); ++i) {
    num += (mag_in.at(i) - mag_out.at(i)) * (mag_in.at(i) - mag_out.at(i));
    den += mag_in.at(i) * mag_in.at(i);
  }
  EXPECT_LT(std::sqrt(num / den), 0.1);
  EXPECT_EQ(relin.frames(), lin.frames());
}

TEST(GriffinLim, RejectsMelInput) {
  const auto mel = mel_spectrogram(AudioClip{Sine(600, 8000, 800), 8000}, SmallConfig());
  EXPECT_THROW(griffin_lim(mel), DataError);
}

TEST(Wav, RoundTripWithin16BitQuantization) {
  const auto path = std::filesystem::temp_directory_path() / "paranet_dsp_test.wav";
  const AudioClip clip{Sine(220, 16000, 500, 0.9), 16000};
  write_wav(path, clip);
  const auto back = read_wav(path);
  EXPECT_EQ(back.sample_rate, 16000);
  ASSERT_EQ(back.size(), clip.size());
  for (std::size_t i = 0; i < clip.size(); ++i) EXPECT_NEAR(back.samples[i], clip.samples[i], 1.0 / 32767);
  std::filesystem::remove(path);
}

TEST(Wav, TruncatedFileIsDataError) {
  const auto path = std::filesystem::temp_directory_path() / "paranet_bad.wav";
  std::ofstream(path) << "RIFF\x10\x00";
  EXPECT_THROW(read_wav(path), DataError);
  std::filesystem::remove(path);
}

TEST(Export, CsvAndPgmLayout) {
  const auto dir = std::filesystem::temp_directory_path();
  const Tensor m({3, 2}, std::vector<double>{0, 1, 2, 3, 4, 5});
  write_csv(dir / "paranet_m.csv", m);
  std::ifstream csv(dir / "paranet_m.csv");
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "0,1");
  write_pgm(dir / "paranet_m.pgm", m);
  std::ifstream pgm(dir / "paranet_m.pgm", std::ios::binary);
  std::string magic;
  std::size_t w = 0, h = 0, maxv = 0;
  pgm >> magic >> w >> h >> maxv;
  pgm.get();
  EXPECT_EQ(magic, "P5");
  EXPECT_EQ(w, 3u);
  EXPECT_EQ(h, 2u);
  std::vector<unsigned char> px(6);
  pgm.read(reinterpret_cast<char*>(px.data()), 6);
  // Top row is bin 1: values 1, 3, 5 of the 0..5 range.
  EXPECT_EQ(px[0], 51);
  EXPECT_EQ(px[2], 255);
  EXPECT_EQ(px[3], 0);
}

}  // namespace
}  // namespace paranet::dsp
