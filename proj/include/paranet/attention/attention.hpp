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

// Dot-product attention with sinusoidal position encodings, the inference
// window mask, attention distillation and alignment diagnostics.
//
// Alignment matrices are [N decoder steps x M tokens], one row per step.

#pragma once

#include <algorithm>
#include <cfenv>
#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "paranet/dsp/export.hpp"
#include "paranet/nn/params.hpp"

namespace paranet::attention {

using nn::Tensor;

// ---------------------------------------------------------------------------
// Positional encodings.

enum class PeParity {
  kChannel,   // sin on even channels, cos on odd channels
  kTimestep,  // sin on even time steps, cos on odd time steps
};

struct PositionalEncodingConfig {
  std::size_t d = 64;
  double omega = 1.0;
  PeParity parity = PeParity::kChannel;
};

/// [d x length] table; column t encodes position `start + t`.
inline Tensor positional_encoding(std::size_t length, const PositionalEncodingConfig& cfg,
                                  std::size_t start = 0) {
  if (length == 0) throw ContractError("positional_encoding: length must be >= 1");
  if (!(cfg.omega > 0.0)) throw ConfigError("position rate must be positive");
  if (cfg.parity == PeParity::kChannel && cfg.d % 2 != 0) {
    throw ConfigError("channel-parity encodings need an even channel count");
  }
  const double d = static_cast<double>(cfg.d);
  std::vector<double> out(cfg.d * length);
  for (std::size_t k = 0; k < cfg.d; ++k) {
    const double exponent =
        cfg.parity == PeParity::kChannel ? static_cast<double>(k / 2 * 2) / d : static_cast<double>(k) / d;
    const double freq = cfg.omega / std::pow(10000.0, exponent);
    for (std::size_t t = 0; t < length; ++t) {
      const std::size_t i = start + t;
      const double arg = freq * static_cast<double>(i);
      const bool use_sin = cfg.parity == PeParity::kChannel ? k % 2 == 0 : i % 2 == 0;
      out[k * length + t] = use_sin ? std::sin(arg) : std::cos(arg);
    }
  }
  return Tensor({cfg.d, length}, std::move(out));
}

inline constexpr double kFramesPerToken = 6.3;

enum class PositionRole { kQuery, kTeacherKey, kParanetKeyTrain, kParanetKeySynth };

/// Position rate for each encoding site. Training-time ParaNet keys use the
/// true reduced-steps / tokens ratio of the utterance.
inline double position_rate(PositionRole role, std::size_t reduced_steps = 0,
                            std::size_t text_len = 0, std::size_t reduction = 4) {
  switch (role) {
    case PositionRole::kQuery:
      return 1.0;
    case PositionRole::kTeacherKey:
    case PositionRole::kParanetKeySynth:
      return kFramesPerToken / static_cast<double>(reduction);
    case PositionRole::kParanetKeyTrain:
      if (text_len == 0) throw ContractError("position_rate: text length is zero");
      if (reduced_steps == 0) throw ContractError("position_rate: spectrogram length is zero");
      return static_cast<double>(reduced_steps) / static_cast<double>(text_len);
  }
  return 1.0;
}

// ---------------------------------------------------------------------------
// Inference mask.

struct MaskConfig {
  bool enabled = true;
  std::size_t window_back = 3;
  std::size_t window_forward = 3;
  double rate_ratio = 4.0 / kFramesPerToken;  // tokens per decoder step
};

/// Round-half-to-even of i * rate_ratio, clamped into [0, M-1].
inline std::size_t mask_center(std::size_t i_query, std::size_t M, const MaskConfig& cfg) {
  if (M == 0) throw ContractError("attention_mask: no keys");
  const int saved = std::fegetround();
  std::fesetround(FE_TONEAREST);
  const double c = std::nearbyint(static_cast<double>(i_query) * cfg.rate_ratio);
  std::fesetround(saved);
  return static_cast<std::size_t>(std::clamp(c, 0.0, static_cast<double>(M - 1)));
}

/// Allowed key indices for one decoder step, in increasing order.
inline std::vector<std::size_t> attention_mask(std::size_t i_query, std::size_t M,
                                               const MaskConfig& cfg = {}) {
  const std::size_t c = mask_center(i_query, M, cfg);
  const std::size_t lo = c >= cfg.window_back ? c - cfg.window_back : 0;
  const std::size_t hi = std::min(M - 1, c + cfg.window_forward);
  std::vector<std::size_t> out;
  for (std::size_t j = lo; j <= hi; ++j) out.push_back(j);
  return out;
}

/// Row-major [N x M] allow-matrix for a whole decoding pass.
inline std::vector<std::uint8_t> mask_matrix(std::size_t N, std::size_t M, const MaskConfig& cfg = {}) {
  std::vector<std::uint8_t> allowed(N * M, cfg.enabled ? 0 : 1);
  if (!cfg.enabled) return allowed;
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j : attention_mask(i, M, cfg)) allowed[i * M + j] = 1;
  }
  return allowed;
}

// ---------------------------------------------------------------------------
// Attention block.

inline constexpr std::size_t kAttentionHidden = 128;

struct AttentionBlockParams {
  nn::Linear query_proj;
  nn::Linear key_proj;
  nn::Linear value_proj;
  nn::Linear out_proj;

  /// With `tie_query_key` the key projection starts as a copy of the query
  /// projection (requires d_query == d_key).
  static AttentionBlockParams create(std::size_t d_query, std::size_t d_key, std::size_t d_value,
                                     std::size_t d_out, Rng& rng, bool tie_query_key = false,
                                     std::size_t hidden = kAttentionHidden) {
    AttentionBlockParams p{nn::Linear::create(d_query, hidden, rng),
                           nn::Linear::create(d_key, hidden, rng),
                           nn::Linear::create(d_value, hidden, rng),
                           nn::Linear::create(hidden, d_out, rng)};
    if (tie_query_key) {
      if (d_query != d_key) throw ConfigError("tied query/key init needs equal input sizes");
      std::copy(p.query_proj.weight.data().begin(), p.query_proj.weight.data().end(),
                p.key_proj.weight.mutable_data().begin());
    }
    return p;
  }

  std::size_t hidden() const { return query_proj.out_features(); }

  void collect(nn::NamedParams& out, const std::string& prefix) const {
    query_proj.collect(out, prefix + ".query");
    key_proj.collect(out, prefix + ".key");
    value_proj.collect(out, prefix + ".value");
    out_proj.collect(out, prefix + ".out");
  }
};

struct AttentionOutput {
  Tensor context;  // [d_out x N]
  Tensor weights;  // [N x M]
};

/// `allowed` is an optional [N x M] allow-matrix; a row with no allowed key
/// raises ContractError.
inline AttentionOutput attention_forward(const AttentionBlockParams& p, const Tensor& query,
                                         const Tensor& keys, const Tensor& values,
                                         const Tensor& pe_query, const Tensor& pe_key,
                                         const std::vector<std::uint8_t>* allowed = nullptr) {
  if (pe_query.shape() != query.shape() || pe_key.shape() != keys.shape()) {
    throw ShapeError("attention_forward: positional encodings must match query/key shapes");
  }
  if (keys.dim(1) != values.dim(1)) throw ShapeError("attention_forward: keys and values differ in length");
  const std::size_t M = keys.dim(1);
  const Tensor q = p.query_proj(nn::add(query, pe_query));
  const Tensor k = p.key_proj(nn::add(keys, pe_key));
  const Tensor v = p.value_proj(values);
  const double score_scale = 1.0 / std::sqrt(static_cast<double>(p.hidden()));
  const Tensor scores = nn::scale(nn::matmul(nn::transpose(q), k), score_scale);
  const Tensor w = nn::softmax_rows(scores, allowed);
  const Tensor ctx = nn::scale(nn::matmul(v, nn::transpose(w)), std::sqrt(1.0 / static_cast<double>(M)));
  return {p.out_proj(ctx), w};
}

// ---------------------------------------------------------------------------
// Distillation and diagnostics.

inline constexpr double kDistillEpsilon = 1e-12;

/// -(1 / (K N)) sum_k sum_rows sum_cols teacher * log(student_k + eps).
/// Gradients flow into the students only.
inline Tensor attention_distillation_loss(const std::vector<Tensor>& students, const Tensor& teacher) {
  if (students.empty()) throw ContractError("attention_distillation_loss: no student blocks");
  const Tensor t = teacher.detach();
  std::vector<Tensor> terms;
  for (const auto& s : students) {
    if (s.shape() != t.shape()) {
      throw ShapeError("attention_distillation_loss: student " + nn::shape_str(s.shape()) +
                       " vs teacher " + nn::shape_str(t.shape()));
    }
    terms.push_back(nn::sum(nn::mul(t, nn::log(nn::shift(s, kDistillEpsilon)))));
  }
  const double norm = static_cast<double>(students.size() * t.dim(0));
  return nn::scale(nn::sum_scalars(terms), -1.0 / norm);
}

/// Mean over rows of -sum w log w (0 log 0 = 0).
inline double attention_entropy(const Tensor& w) {
  const std::size_t rows = w.dim(0), cols = w.dim(1);
  double acc = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = w.at(r, c);
      if (v > 0.0) acc -= v * std::log(v);
    }
  }
  return acc / static_cast<double>(rows);
}

struct DiagnosticsThresholds {
  std::size_t coverage_radius = 1;
  std::size_t backward_jump = 2;
  double diagonal_band = 0.2;
};

struct AlignmentDiagnostics {
  std::size_t skip_count = 0;
  std::size_t repeat_count = 0;
  double focus_rate = 0.0;
  double diagonal_rate = 0.0;
};

inline std::vector<std::size_t> argmax_path(const Tensor& w) {
  const std::size_t rows = w.dim(0), cols = w.dim(1);
  std::vector<std::size_t> path(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < cols; ++c) {
      if (w.at(r, c) > w.at(r, best)) best = c;
    }
    path[r] = best;
  }
  return path;
}

/// `is_pause[j]` marks tokens excluded from the skip count.
inline AlignmentDiagnostics alignment_diagnostics(const Tensor& w,
                                                  const std::vector<bool>& is_pause = {},
                                                  const DiagnosticsThresholds& th = {}) {
  const std::size_t N = w.dim(0), M = w.dim(1);
  if (!is_pause.empty() && is_pause.size() != M) {
    throw ShapeError("alignment_diagnostics: pause flags do not match token count");
  }
  const auto path = argmax_path(w);
  AlignmentDiagnostics d;

  std::vector<bool> covered(M, false);
  for (std::size_t p : path) {
    const std::size_t lo = p >= th.coverage_radius ? p - th.coverage_radius : 0;
    for (std::size_t j = lo; j <= std::min(M - 1, p + th.coverage_radius); ++j) covered[j] = true;
  }
  for (std::size_t j = 0; j < M; ++j) {
    if (!covered[j] && !(is_pause.empty() ? false : is_pause[j])) ++d.skip_count;
  }
  for (std::size_t r = 1; r < N; ++r) {
    if (path[r] + th.backward_jump <= path[r - 1]) ++d.repeat_count;
  }

  double focus = 0.0;
  std::size_t on_diagonal = 0;
  for (std::size_t r = 0; r < N; ++r) {
    focus += w.at(r, path[r]);
    const double expected = static_cast<double>(r) * static_cast<double>(M) / static_cast<double>(N);
    if (std::abs(static_cast<double>(path[r]) - expected) <= th.diagonal_band * static_cast<double>(M)) {
      ++on_diagonal;
    }
  }
  d.focus_rate = focus / static_cast<double>(N);
  d.diagonal_rate = static_cast<double>(on_diagonal) / static_cast<double>(N);
  return d;
}

/// Writes `<stem>.csv` and `<stem>.pgm` for one alignment.
inline void export_alignment(const Tensor& w, const std::filesystem::path& stem) {
  dsp::write_csv(std::filesystem::path(stem).concat(".csv"), w);
  dsp::write_pgm(std::filesystem::path(stem).concat(".pgm"), w);
}

}  // namespace paranet::attention
