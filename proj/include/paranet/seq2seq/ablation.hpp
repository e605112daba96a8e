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

// Ablation runs: one teacher, several student variants, alignment
// diagnostics on the training utterances.

#pragma once

#include <chrono>
#include <fstream>
#include <iomanip>
#include <string>
#include <vector>

#include "paranet/seq2seq/training.hpp"

namespace paranet::seq2seq {

struct AblationVariant {
  std::string name;
  bool use_distillation = true;
  bool use_positional_encoding = true;
  std::size_t decoder_layers = 0;  // 0 keeps the preset value
};

inline std::vector<AblationVariant> core_variants() {
  return {{"full", true, true, 0}, {"no_distillation", false, true, 0}, {"no_positional_encoding", true, false, 0}};
}

inline std::vector<AblationVariant> layer_variants(std::vector<std::size_t> layers = {6, 12, 17}) {
  std::vector<AblationVariant> out;
  for (auto l : layers) out.push_back({"layers_" + std::to_string(l), true, true, l});
  return out;
}

struct AblationConfig {
  std::size_t teacher_steps = 300;
  std::size_t paranet_steps = 300;
  std::uint64_t seed = 1;
  std::vector<AblationVariant> variants = core_variants();
};

/// Diagnostics averaged over utterances.
struct AlignmentSummary {
  double diagonal_rate = 0.0;
  double focus_rate = 0.0;
  double skip_count = 0.0;
  double repeat_count = 0.0;
  double entropy_first = 0.0;
  double entropy_last = 0.0;

  double proxy_errors() const { return skip_count + repeat_count; }
};

struct VariantReport {
  AblationVariant variant;
  std::size_t layers = 0;
  AlignmentSummary summary;
  std::vector<attention::AlignmentDiagnostics> per_utterance;
  double initial_total = 0.0;
  double final_total = 0.0;
  double seconds = 0.0;
};

struct AblationReport {
  double teacher_initial = 0.0;
  double teacher_final = 0.0;
  AlignmentSummary teacher;
  std::vector<VariantReport> variants;

  const VariantReport& find(const std::string& name) const {
    for (const auto& v : variants) {
      if (v.variant.name == name) return v;
    }
    throw ContractError("ablation report has no variant '" + name + "'");
  }
};

/// Diagnoses the last student block at the training length of each example.
inline AlignmentSummary summarize_alignments(const ParaNetModel& model, const std::vector<Example>& corpus,
                                             std::vector<attention::AlignmentDiagnostics>* per_utt = nullptr) {
  nn::NoGradGuard guard;
  Rng unused(0);
  AlignmentSummary s;
  for (const auto& ex : corpus) {
    const auto out = model.forward(ex.ids, ex.steps(), false, unused);
    const auto d = attention::alignment_diagnostics(out.alignments.back(), ex.is_pause);
    if (per_utt) per_utt->push_back(d);
    s.diagonal_rate += d.diagonal_rate;
    s.focus_rate += d.focus_rate;
    s.skip_count += static_cast<double>(d.skip_count);
    s.repeat_count += static_cast<double>(d.repeat_count);
    s.entropy_first += attention::attention_entropy(out.alignments.front());
    s.entropy_last += attention::attention_entropy(out.alignments.back());
  }
  const double n = static_cast<double>(corpus.size());
  for (double* v : {&s.diagonal_rate, &s.focus_rate, &s.skip_count, &s.repeat_count, &s.entropy_first,
                    &s.entropy_last}) {
    *v /= n;
  }
  return s;
}

inline AlignmentSummary summarize_alignments(const TeacherModel& teacher, const std::vector<Example>& corpus) {
  AlignmentSummary s;
  for (const auto& ex : corpus) {
    const Tensor w = teacher_alignment(teacher, ex);
    const auto d = attention::alignment_diagnostics(w, ex.is_pause);
    s.diagonal_rate += d.diagonal_rate;
    s.focus_rate += d.focus_rate;
    s.skip_count += static_cast<double>(d.skip_count);
    s.repeat_count += static_cast<double>(d.repeat_count);
    s.entropy_first += attention::attention_entropy(w);
  }
  const double n = static_cast<double>(corpus.size());
  for (double* v : {&s.diagonal_rate, &s.focus_rate, &s.skip_count, &s.repeat_count, &s.entropy_first}) *v /= n;
  s.entropy_last = s.entropy_first;
  return s;
}

/// Trains the teacher once, then every variant from the same seed.
inline AblationReport run_ablation(const Hyperparams& h, const std::vector<Example>& corpus,
                                   std::size_t vocab, const AblationConfig& cfg) {
  using clock = std::chrono::steady_clock;
  AblationReport report;
  Rng teacher_rng(cfg.seed);
  TeacherModel teacher(h, vocab, teacher_rng);
  const auto tlog = train_teacher(teacher, corpus, h, cfg.teacher_steps, teacher_rng);
  if (!tlog.empty()) {
    report.teacher_initial = tlog.front().values.back().second;
    report.teacher_final = tlog.back().values.back().second;
  }
  report.teacher = summarize_alignments(teacher, corpus);
  spdlog::info("ablation teacher: total {:.4f} -> {:.4f}, diagonal {:.3f}", report.teacher_initial,
               report.teacher_final, report.teacher.diagonal_rate);

  for (const auto& v : cfg.variants) {
    Hyperparams hv = h;
    hv.use_distillation = v.use_distillation;
    hv.use_positional_encoding = v.use_positional_encoding;
    if (v.decoder_layers > 0) hv.paranet_decoder_layers = v.decoder_layers;
    Rng rng(cfg.seed + 1);
    const auto start = clock::now();
    ParaNetModel model(hv, vocab, rng);
    const auto log = train_paranet(model, teacher, corpus, hv, cfg.paranet_steps, rng);
    VariantReport r;
    r.variant = v;
    r.layers = hv.paranet_decoder_layers;
    r.summary = summarize_alignments(model, corpus, &r.per_utterance);
    if (!log.empty()) {
      r.initial_total = log.front().values.back().second;
      r.final_total = log.back().values.back().second;
    }
    r.seconds = std::chrono::duration<double>(clock::now() - start).count();
    spdlog::info("ablation {}: diagonal {:.3f} focus {:.3f} entropy {:.3f} -> {:.3f} ({:.1f}s)", v.name,
                 r.summary.diagonal_rate, r.summary.focus_rate, r.summary.entropy_first, r.summary.entropy_last,
                 r.seconds);
    report.variants.push_back(std::move(r));
  }
  return report;
}

inline void write_ablation_csv(const std::filesystem::path& path, const AblationReport& report) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << std::setprecision(6);
  out << "variant,layers,distillation,positional_encoding,diagonal_rate,focus_rate,skip_count,repeat_count,"
         "entropy_first,entropy_last,initial_total,final_total,seconds\n";
  out << "teacher,1,0,1," << report.teacher.diagonal_rate << ',' << report.teacher.focus_rate << ','
      << report.teacher.skip_count << ',' << report.teacher.repeat_count << ',' << report.teacher.entropy_first
      << ',' << report.teacher.entropy_last << ',' << report.teacher_initial << ',' << report.teacher_final
      << ",0\n";
  for (const auto& r : report.variants) {
    const auto& s = r.summary;
    out << r.variant.name << ',' << r.layers << ',' << r.variant.use_distillation << ','
        << r.variant.use_positional_encoding << ',' << s.diagonal_rate << ',' << s.focus_rate << ','
        << s.skip_count << ',' << s.repeat_count << ',' << s.entropy_first << ',' << s.entropy_last << ','
        << r.initial_total << ',' << r.final_total << ',' << r.seconds << '\n';
  }
}

}  // namespace paranet::seq2seq
