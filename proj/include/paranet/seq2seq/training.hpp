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

// Training examples, masked spectrogram losses and optimizer steps for the
// teacher and the non-autoregressive student.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "paranet/dsp/features.hpp"
#include "paranet/nn/optim.hpp"
#include "paranet/seq2seq/models.hpp"
#include "paranet/text/frontend.hpp"

namespace paranet::seq2seq {

/// One utterance ready for training: token ids plus reduced targets. Targets
/// hold normalized log features (see dsp::normalize_log).
struct Example {
  std::string text;
  std::vector<std::size_t> ids;
  std::vector<bool> is_pause;
  dsp::ReducedFrames mel;     // [steps x r*mel]
  dsp::ReducedFrames linear;  // [steps x r*bins]

  std::size_t steps() const { return mel.steps(); }
  std::size_t frames() const { return mel.frames(); }
};

inline Example make_example(const std::string& text, const std::vector<text::Token>& tokens,
                            const dsp::Spectrogram& mel, const dsp::Spectrogram& linear, std::size_t r,
                            double log_floor) {
  if (tokens.empty()) throw DataError("empty transcript: '" + text + "'");
  if (mel.frames() != linear.frames()) {
    throw DataError("mel and linear frame counts differ for '" + text + "'");
  }
  Example ex;
  ex.text = text;
  for (const auto& t : tokens) {
    ex.ids.push_back(t.id);
    ex.is_pause.push_back(t.cls == text::TokenClass::kPause);
  }
  ex.mel = dsp::reduce_frames(dsp::normalize_log(mel.values, log_floor), r);
  ex.linear = dsp::reduce_frames(dsp::normalize_log(linear.values, log_floor), r);
  return ex;
}

inline Example make_example(const std::string& text, const text::TextFrontend& frontend,
                            const dsp::AudioClip& audio, const dsp::FeatureExtractor& fx, std::size_t r) {
  const auto [mel, linear] = fx.mel_and_linear(audio);
  return make_example(text, frontend.tokenize(text), mel, linear, r, fx.config().log_floor);
}

/// 1 where entry (step, channel) of a [steps x r*bins] layout belongs to a
/// real frame, 0 on the padded tail.
inline std::vector<double> valid_mask(const dsp::ReducedFrames& rf) {
  const std::size_t width = rf.r * rf.bins, n = rf.frames();
  std::vector<double> mask(rf.steps() * width);
  for (std::size_t s = 0; s < rf.steps(); ++s) {
    for (std::size_t c = 0; c < width; ++c) mask[s * width + c] = s * rf.r + c / rf.bins < n ? 1.0 : 0.0;
  }
  return mask;
}

/// Mean absolute error between a [r*bins x N] prediction and the target,
/// ignoring padded frames.
inline Tensor spectrogram_l1(const Tensor& prediction, const dsp::ReducedFrames& target) {
  if (prediction.dim(1) != target.steps() || prediction.dim(0) != target.values.dim(1)) {
    throw ShapeError("spectrogram_l1: prediction " + nn::shape_str(prediction.shape()) +
                     " vs target " + nn::shape_str(target.values.shape()) + " (transposed)");
  }
  return nn::masked_l1(nn::transpose(prediction), target.values, valid_mask(target));
}

struct TeacherLosses {
  double mel_l1 = 0.0;
  double linear_l1 = 0.0;
  double total = 0.0;
};

struct ParaNetLosses {
  double mel_l1 = 0.0;
  double linear_l1 = 0.0;
  double l_atten = 0.0;
  double total = 0.0;
};

inline double paranet_total(double mel_l1, double linear_l1, double l_atten, double weight) {
  return mel_l1 + linear_l1 + weight * l_atten;
}

namespace detail {

inline void require_finite(std::initializer_list<std::pair<const char*, double>> parts, const char* who) {
  bool ok = true;
  for (const auto& [name, v] : parts) ok = ok && std::isfinite(v);
  if (ok) return;
  std::ostringstream msg;
  msg << who << ": non-finite loss;";
  for (const auto& [name, v] : parts) msg << ' ' << name << '=' << v;
  throw NumericError(msg.str());
}

inline void require_finite_params(const nn::NamedParams& params, const char* who) {
  for (const auto& [name, t] : params) {
    for (double v : t.data()) {
      if (!std::isfinite(v)) throw NumericError(std::string(who) + ": parameter " + name + " became non-finite");
    }
  }
}

inline std::vector<Tensor> trainable(const nn::NamedParams& params) { return nn::tensors_of(params); }

}  // namespace detail

inline nn::OptimizerState make_optimizer(const Hyperparams& h) {
  nn::OptimizerState s;
  s.learning_rate = h.adam_learning_rate;
  s.clip_norm = h.max_gradient_norm;
  s.clip_value = h.gradient_clipping_max_value;
  return s;
}

/// Loss tensor and components for a teacher-forced batch.
inline std::pair<Tensor, TeacherLosses> teacher_loss(const TeacherModel& model,
                                                     const std::vector<const Example*>& batch,
                                                     bool training, Rng& rng) {
  if (batch.empty()) throw ContractError("teacher_loss: empty batch");
  std::vector<Tensor> terms;
  TeacherLosses out;
  for (const Example* ex : batch) {
    const auto pred = model.forward_teacher_forced(ex->ids, ex->mel.values, training, rng);
    const Tensor mel = spectrogram_l1(pred.mel, ex->mel);
    const Tensor lin = spectrogram_l1(pred.linear, ex->linear);
    out.mel_l1 += mel.item();
    out.linear_l1 += lin.item();
    terms.push_back(nn::add(mel, lin));
  }
  const double n = static_cast<double>(batch.size());
  out.mel_l1 /= n;
  out.linear_l1 /= n;
  out.total = out.mel_l1 + out.linear_l1;
  return {nn::scale(nn::sum_scalars(terms), 1.0 / n), out};
}

inline TeacherLosses teacher_train_step(TeacherModel& model, const std::vector<const Example*>& batch,
                                        nn::OptimizerState& opt, Rng& rng) {
  const auto params = model.parameters();
  nn::zero_grads(params);
  auto [loss, parts] = teacher_loss(model, batch, true, rng);
  detail::require_finite({{"mel_l1", parts.mel_l1}, {"linear_l1", parts.linear_l1}}, "teacher_train_step");
  nn::backward(loss);
  auto tensors = detail::trainable(params);
  nn::adam_step(tensors, opt);
  detail::require_finite_params(params, "teacher_train_step");
  return parts;
}

/// Teacher-forced teacher alignment [steps x tokens] for one example.
inline Tensor teacher_alignment(const TeacherModel& teacher, const Example& ex) {
  nn::NoGradGuard guard;
  Rng unused(0);
  return teacher.forward_teacher_forced(ex.ids, ex.mel.values, false, unused).alignments.front();
}

struct ParaNetLossOptions {
  double distillation_weight = 4.0;
  bool use_distillation = true;
};

/// Loss for the student given precomputed teacher alignments (one per
/// example). The distillation term is always reported; it only enters the
/// objective when enabled.
inline std::pair<Tensor, ParaNetLosses> paranet_loss(const ParaNetModel& model,
                                                     const std::vector<const Example*>& batch,
                                                     const std::vector<Tensor>& teacher_alignments,
                                                     const ParaNetLossOptions& opt, bool training, Rng& rng) {
  if (batch.empty()) throw ContractError("paranet_loss: empty batch");
  if (teacher_alignments.size() != batch.size()) {
    throw ContractError("paranet_loss: need one teacher alignment per example");
  }
  std::vector<Tensor> terms;
  ParaNetLosses out;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Example& ex = *batch[b];
    const auto pred = model.forward(ex.ids, ex.steps(), training, rng);
    const Tensor mel = spectrogram_l1(pred.mel, ex.mel);
    const Tensor lin = spectrogram_l1(pred.linear, ex.linear);
    const Tensor att = attention::attention_distillation_loss(pred.alignments, teacher_alignments[b]);
    out.mel_l1 += mel.item();
    out.linear_l1 += lin.item();
    out.l_atten += att.item();
    Tensor term = nn::add(mel, lin);
    if (opt.use_distillation) term = nn::add(term, nn::scale(att, opt.distillation_weight));
    terms.push_back(term);
  }
  const double n = static_cast<double>(batch.size());
  out.mel_l1 /= n;
  out.linear_l1 /= n;
  out.l_atten /= n;
  out.total = paranet_total(out.mel_l1, out.linear_l1, out.l_atten,
                            opt.use_distillation ? opt.distillation_weight : 0.0);
  return {nn::scale(nn::sum_scalars(terms), 1.0 / n), out};
}

inline ParaNetLosses paranet_train_step(ParaNetModel& model, const std::vector<const Example*>& batch,
                                        const std::vector<Tensor>& teacher_alignments,
                                        nn::OptimizerState& opt, const ParaNetLossOptions& lopt, Rng& rng) {
  const auto params = model.parameters();
  nn::zero_grads(params);
  auto [loss, parts] = paranet_loss(model, batch, teacher_alignments, lopt, true, rng);
  detail::require_finite(
      {{"mel_l1", parts.mel_l1}, {"linear_l1", parts.linear_l1}, {"l_atten", parts.l_atten}},
      "paranet_train_step");
  nn::backward(loss);
  auto tensors = detail::trainable(params);
  nn::adam_step(tensors, opt);
  detail::require_finite_params(params, "paranet_train_step");
  return parts;
}

/// Variant that runs the frozen teacher on the batch first.
inline ParaNetLosses paranet_train_step(ParaNetModel& model, const TeacherModel& teacher,
                                        const std::vector<const Example*>& batch, nn::OptimizerState& opt,
                                        const ParaNetLossOptions& lopt, Rng& rng) {
  std::vector<Tensor> alignments;
  for (const Example* ex : batch) alignments.push_back(teacher_alignment(teacher, *ex));
  return paranet_train_step(model, batch, alignments, opt, lopt, rng);
}

/// Shuffled passes over the corpus; a batch never repeats an example
/// unless the corpus is smaller than the batch.
class BatchSampler {
 public:
  BatchSampler(std::size_t corpus_size, std::size_t batch_size)
      : n_(corpus_size), batch_(std::min(batch_size, corpus_size)) {
    if (n_ == 0) throw DataError("training corpus is empty");
    if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  }

  std::vector<std::size_t> next(Rng& rng) {
    std::vector<std::size_t> out;
    while (out.size() < batch_) {
      if (cursor_ == order_.size()) {
        order_.resize(n_);
        std::iota(order_.begin(), order_.end(), 0);
        std::shuffle(order_.begin(), order_.end(), rng.engine());
        cursor_ = 0;
      }
      out.push_back(order_[cursor_++]);
    }
    return out;
  }

 private:
  std::size_t n_, batch_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

struct LossRecord {
  std::size_t step = 0;
  std::vector<std::pair<std::string, double>> values;
};

using StepCallback = std::function<void(const LossRecord&)>;

inline std::vector<const Example*> gather(const std::vector<Example>& corpus, const std::vector<std::size_t>& idx) {
  std::vector<const Example*> out;
  for (auto i : idx) out.push_back(&corpus.at(i));
  return out;
}

/// Runs `steps` teacher updates; every step is logged.
inline std::vector<LossRecord> train_teacher(TeacherModel& model, const std::vector<Example>& corpus,
                                             const Hyperparams& h, std::size_t steps, Rng& rng,
                                             nn::OptimizerState* state = nullptr,
                                             const StepCallback& on_step = {}) {
  nn::OptimizerState local = make_optimizer(h);
  nn::OptimizerState& opt = state ? *state : local;
  BatchSampler sampler(corpus.size(), h.batch_size);
  std::vector<LossRecord> log;
  for (std::size_t s = 0; s < steps; ++s) {
    const auto parts = teacher_train_step(model, gather(corpus, sampler.next(rng)), opt, rng);
    LossRecord rec{opt.step, {{"mel_l1", parts.mel_l1}, {"linear_l1", parts.linear_l1}, {"total", parts.total}}};
    if (h.log_every > 0 && (opt.step % h.log_every == 0 || s == 0)) {
      spdlog::info("teacher step {} total {:.5f}", opt.step, parts.total);
    }
    if (on_step) on_step(rec);
    log.push_back(std::move(rec));
  }
  return log;
}

inline std::vector<LossRecord> train_paranet(ParaNetModel& model, const TeacherModel& teacher,
                                             const std::vector<Example>& corpus, const Hyperparams& h,
                                             std::size_t steps, Rng& rng, nn::OptimizerState* state = nullptr,
                                             const StepCallback& on_step = {}) {
  nn::OptimizerState local = make_optimizer(h);
  nn::OptimizerState& opt = state ? *state : local;
  std::vector<Tensor> alignments;
  for (const auto& ex : corpus) alignments.push_back(teacher_alignment(teacher, ex));
  const ParaNetLossOptions lopt{h.distillation_weight, h.use_distillation};
  BatchSampler sampler(corpus.size(), h.batch_size);
  std::vector<LossRecord> log;
  for (std::size_t s = 0; s < steps; ++s) {
    const auto idx = sampler.next(rng);
    std::vector<Tensor> targets;
    for (auto i : idx) targets.push_back(alignments[i]);
    const auto parts = paranet_train_step(model, gather(corpus, idx), targets, opt, lopt, rng);
    LossRecord rec{opt.step,
                   {{"mel_l1", parts.mel_l1},
                    {"linear_l1", parts.linear_l1},
                    {"l_atten", parts.l_atten},
                    {"total", parts.total}}};
    if (h.log_every > 0 && (opt.step % h.log_every == 0 || s == 0)) {
      spdlog::info("paranet step {} total {:.5f} l_atten {:.5f}", opt.step, parts.total, parts.l_atten);
    }
    if (on_step) on_step(rec);
    log.push_back(std::move(rec));
  }
  return log;
}

/// Converts a [r*bins x N] normalized model output back to a frame-major
/// log spectrogram, keeping `frames` frames (all when 0).
inline dsp::Spectrogram to_spectrogram(const Tensor& prediction, std::size_t r, dsp::SpectrogramKind kind,
                                       const dsp::DspConfig& cfg, std::size_t frames = 0) {
  dsp::ReducedFrames rf{nn::transpose(prediction).detach(), r, prediction.dim(0) / r, 0};
  if (frames > 0) {
    if (frames > rf.steps() * r) throw ShapeError("to_spectrogram: more frames requested than predicted");
    rf.pad_frames = rf.steps() * r - frames;
  }
  return {dsp::denormalize_log(dsp::expand_frames(rf), cfg.log_floor), kind, cfg.hop, cfg.win_length, cfg.fft_size, cfg.sample_rate};
}

}  // namespace paranet::seq2seq
