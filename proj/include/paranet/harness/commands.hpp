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

// Implementations behind the command-line tool. Each command takes a
// RunContext (hyperparameters, seed, output directory) plus its own options
// and writes CSV reports with a header row.

#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "paranet/attention/attention.hpp"
#include "paranet/dsp/export.hpp"
#include "paranet/io/checkpoint.hpp"
#include "paranet/io/dataset.hpp"
#include "paranet/seq2seq/ablation.hpp"
#include "paranet/seq2seq/toy_corpus.hpp"
#include "paranet/wavevae/model.hpp"

namespace paranet::harness {

namespace fs = std::filesystem;
using nn::Tensor;

struct RunContext {
  Hyperparams h;
  std::uint64_t seed = 1;
  fs::path out = ".";
};

/// Preset defaults, then the optional config file on top.
inline Hyperparams load_hyperparams(const std::string& preset, const std::optional<fs::path>& config_path) {
  Hyperparams h = preset_by_name(preset);
  if (config_path) {
    std::ifstream in(*config_path);
    if (!in) throw ConfigError("cannot open config file " + config_path->string());
    h = parse_config(in, h, config_path->string());
  }
  h.validate();
  return h;
}

// ---------------------------------------------------------------------------
// CSV helpers.

class CsvWriter {
 public:
  CsvWriter(const fs::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw DataError("cannot write " + path.string());
    out_ << std::setprecision(10);
    row(header);
  }

  template <typename... Ts>
  void write(const Ts&... values) {
    bool first = true;
    ((out_ << (first ? "" : ",") << values, first = false), ...);
    out_ << '\n';
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }
  void row(const std::vector<double>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }
  void flush() { out_.flush(); }

 private:
  std::ofstream out_;
};

/// Loss log: "step" followed by the component names of the first record.
class LossLog {
 public:
  explicit LossLog(fs::path path) : path_(std::move(path)) {}

  void add(std::size_t step, const std::vector<std::pair<std::string, double>>& values) {
    if (!csv_) {
      std::vector<std::string> header{"step"};
      for (const auto& [name, v] : values) header.push_back(name);
      csv_ = std::make_unique<CsvWriter>(path_, header);
    }
    std::vector<double> cells{static_cast<double>(step)};
    for (const auto& [name, v] : values) cells.push_back(v);
    csv_->row(cells);
  }

 private:
  fs::path path_;
  std::unique_ptr<CsvWriter> csv_;
};

inline std::string padded(std::size_t i, std::size_t width = 3) {
  std::string n = std::to_string(i);
  return std::string(n.size() < width ? width - n.size() : 0, '0') + n;
}

// ---------------------------------------------------------------------------
// Model checkpoints.

inline io::Checkpoint model_checkpoint(const std::string& kind, const nn::NamedParams& params, const Hyperparams& h,
                                       std::uint64_t step, std::uint64_t seed, const Rng& rng,
                                       std::size_t vocab) {
  io::Checkpoint c;
  c.kind = kind;
  c.step = step;
  c.seed = seed;
  c.rng_state = rng.state();
  c.config_text = format_config(h);
  c.extra["vocab_size"] = vocab;
  c.tensors = io::records_of(params);
  return c;
}

inline void require_kind(const io::Checkpoint& c, const std::string& kind, const fs::path& dir) {
  if (c.kind != kind) {
    throw ConfigError(dir.string() + " holds a '" + c.kind + "' checkpoint, expected '" + kind + "'");
  }
}

template <typename Model>
struct Loaded {
  Hyperparams h;
  std::unique_ptr<Model> model;
  io::Checkpoint checkpoint;
};

template <typename Model>
Loaded<Model> load_model(const fs::path& dir, const std::string& kind) {
  Loaded<Model> out;
  out.checkpoint = io::load_checkpoint(dir);
  require_kind(out.checkpoint, kind, dir);
  out.h = out.checkpoint.config();
  Rng init(0);
  if constexpr (std::is_same_v<Model, wavevae::WaveVae>) {
    out.model = std::make_unique<Model>(wavevae::WaveVaeShape::from(out.h), init);
  } else {
    const auto vocab = out.checkpoint.extra.value("vocab_size", std::size_t{0});
    if (vocab == 0) throw DataError(dir.string() + ": checkpoint does not record a vocabulary size");
    out.model = std::make_unique<Model>(out.h, vocab, init);
  }
  io::restore(out.checkpoint, out.model->parameters());
  return out;
}

inline Loaded<seq2seq::TeacherModel> load_teacher(const fs::path& dir) {
  return load_model<seq2seq::TeacherModel>(dir, "teacher");
}
inline Loaded<seq2seq::ParaNetModel> load_paranet(const fs::path& dir) {
  return load_model<seq2seq::ParaNetModel>(dir, "paranet");
}
inline Loaded<wavevae::WaveVae> load_wavevae(const fs::path& dir) {
  return load_model<wavevae::WaveVae>(dir, "wavevae");
}

inline void require_same_preset(const Hyperparams& a, const Hyperparams& b, const std::string& what) {
  if (a.preset != b.preset) {
    throw ConfigError(what + ": preset '" + a.preset + "' does not match '" + b.preset + "'");
  }
}

// ---------------------------------------------------------------------------
// ingest / make-toy-corpus

inline io::Dataset run_ingest(const RunContext& ctx, const fs::path& corpus_dir) {
  const auto ds = io::ingest(corpus_dir, ctx.h);
  io::save_dataset(ctx.out, ds);
  spdlog::info("dataset cache written to {}", ctx.out.string());
  return ds;
}

inline void run_make_toy_corpus(const RunContext& ctx) {
  const text::TextFrontend frontend;
  seq2seq::write_toy_corpus(ctx.out, seq2seq::toy_transcripts(), frontend, seq2seq::ToyVoice::for_config(ctx.h));
  spdlog::info("toy corpus written to {}", ctx.out.string());
}

// ---------------------------------------------------------------------------
// train

struct TrainOptions {
  std::string model = "teacher";  // teacher | paranet | wavevae
  fs::path data;
  std::optional<fs::path> teacher;
  std::size_t steps = 0;  // 0 means h.train_steps
};

struct TrainSummary {
  std::size_t steps = 0;
  double initial_total = 0.0;
  double final_total = 0.0;
  fs::path checkpoint;
};

namespace detail {

inline void maybe_checkpoint(const RunContext& ctx, const io::Checkpoint& c) {
  if (ctx.h.checkpoint_every == 0 || c.step % ctx.h.checkpoint_every != 0) return;
  io::save_checkpoint(ctx.out / ("checkpoint_" + padded(c.step, 6)), c);
}

inline wavevae::WaveExample random_crop(const io::CachedUtterance& u, const Hyperparams& h,
                                        const dsp::FeatureExtractor& fx, Rng& rng) {
  const std::size_t hop = h.fft_window_shift;
  const std::size_t len = std::min(h.wavevae_clip_samples, u.audio.size()) / hop * hop;
  if (len <= h.fft_window_size / 2) throw DataError(u.file + ": too short for a WaveVAE crop");
  const std::size_t slots = (u.audio.size() - len) / hop + 1;
  const std::size_t start = hop * rng.index(slots);
  dsp::AudioClip crop;
  crop.sample_rate = u.audio.sample_rate;
  crop.samples.assign(u.audio.samples.begin() + static_cast<std::ptrdiff_t>(start),
                      u.audio.samples.begin() + static_cast<std::ptrdiff_t>(start + len));
  return wavevae::make_wave_example(crop, fx);
}

}  // namespace detail

inline TrainSummary run_train(const RunContext& ctx, const TrainOptions& o) {
  const Hyperparams& h = ctx.h;
  const std::size_t steps = o.steps > 0 ? o.steps : h.train_steps;
  const text::TextFrontend frontend;
  const std::size_t vocab = frontend.vocabulary().size();
  if (o.model == "paranet" && !o.teacher) {
    throw ConfigError("paranet training needs a trained teacher checkpoint (--teacher DIR)");
  }
  if (o.model != "teacher" && o.model != "paranet" && o.model != "wavevae") {
    throw ConfigError("unknown model '" + o.model + "' (expected teacher, paranet or wavevae)");
  }
  // Validate the teacher before touching the data.
  std::optional<Loaded<seq2seq::TeacherModel>> teacher;
  if (o.model == "paranet") {
    teacher = load_teacher(*o.teacher);
    require_same_preset(teacher->h, h, "teacher checkpoint");
  }
  const auto ds = io::load_dataset(o.data, h);
  fs::create_directories(ctx.out);
  Rng rng(ctx.seed);
  LossLog log(ctx.out / "loss_log.csv");
  TrainSummary summary;
  summary.steps = steps;
  auto track = [&](std::size_t step, const std::vector<std::pair<std::string, double>>& values) {
    log.add(step, values);
    const double total = values.at(values.size() - 1).second;
    for (const auto& [name, v] : values) {
      if (name == "total") {
        if (step == 1) summary.initial_total = v;
        summary.final_total = v;
      }
    }
    (void)total;
  };

  if (o.model == "wavevae") {
    wavevae::WaveVae model(wavevae::WaveVaeShape::from(h), rng);
    auto opt = wavevae::make_wavevae_optimizer(h);
    const auto lopt = wavevae::loss_options(h);
    const dsp::FeatureExtractor fx(h.dsp());
    seq2seq::BatchSampler sampler(ds.utterances.size(), h.batch_size);
    for (std::size_t s = 0; s < steps; ++s) {
      std::vector<wavevae::WaveExample> batch;
      for (auto i : sampler.next(rng)) batch.push_back(detail::random_crop(ds.utterances[i], h, fx, rng));
      const auto parts = wavevae::wavevae_train_step(model, batch, opt, rng, lopt);
      track(opt.step, parts.named());
      if (h.log_every > 0 && (opt.step % h.log_every == 0 || s == 0)) {
        spdlog::info("wavevae step {} total {:.4f}", opt.step, parts.total);
      }
      detail::maybe_checkpoint(ctx, model_checkpoint("wavevae", model.parameters(), h, opt.step, ctx.seed, rng, vocab));
    }
    summary.checkpoint = ctx.out / "final";
    io::save_checkpoint(summary.checkpoint, model_checkpoint("wavevae", model.parameters(), h, opt.step, ctx.seed, rng, vocab));
    return summary;
  }

  const auto corpus = io::to_examples(ds, frontend);
  spdlog::info("training {} on {} utterance(s), corpus ratio {:.3f}", o.model, corpus.size(), ds.corpus_ratio());
  if (o.model == "teacher") {
    seq2seq::TeacherModel model(h, vocab, rng);
    auto opt = seq2seq::make_optimizer(h);
    seq2seq::train_teacher(model, corpus, h, steps, rng, &opt, [&](const seq2seq::LossRecord& r) {
      track(r.step, r.values);
      detail::maybe_checkpoint(ctx, model_checkpoint("teacher", model.parameters(), h, r.step, ctx.seed, rng, vocab));
    });
    summary.checkpoint = ctx.out / "final";
    io::save_checkpoint(summary.checkpoint, model_checkpoint("teacher", model.parameters(), h, opt.step, ctx.seed, rng, vocab));
    return summary;
  }

  seq2seq::ParaNetModel model(h, vocab, rng);
  auto opt = seq2seq::make_optimizer(h);
  seq2seq::train_paranet(model, *teacher->model, corpus, h, steps, rng, &opt, [&](const seq2seq::LossRecord& r) {
    track(r.step, r.values);
    detail::maybe_checkpoint(ctx, model_checkpoint("paranet", model.parameters(), h, r.step, ctx.seed, rng, vocab));
  });
  summary.checkpoint = ctx.out / "final";
  io::save_checkpoint(summary.checkpoint, model_checkpoint("paranet", model.parameters(), h, opt.step, ctx.seed, rng, vocab));
  return summary;
}

// ---------------------------------------------------------------------------
// synthesize

struct SynthOptions {
  fs::path checkpoint;
  std::optional<std::string> text;
  std::optional<fs::path> test_set;
  bool mask = true;
  std::optional<double> speed;
  std::string vocoder = "griffinlim";  // griffinlim | wavevae
  std::optional<fs::path> vocoder_checkpoint;
  std::size_t griffin_lim_iterations = 60;
};

struct SynthResult {
  std::string text;
  std::size_t tokens = 0;
  std::size_t unknown = 0;
  std::size_t steps = 0;
  std::size_t decoder_invocations = 0;
  std::size_t alignment_images = 0;
  std::string vocoder;
};

inline attention::MaskConfig mask_config(const Hyperparams& h, bool enabled) {
  attention::MaskConfig m;
  m.enabled = enabled;
  m.window_back = h.mask_window;
  m.window_forward = h.mask_window;
  return m;
}

inline std::vector<text::Utterance> sentences(const std::optional<std::string>& text,
                                              const std::optional<fs::path>& test_set,
                                              const text::TextFrontend& frontend) {
  if (text && test_set) throw ConfigError("give either --text or --test-set, not both");
  if (text) {
    text::Utterance u;
    u.raw_text = *text;
    u.tokens = frontend.tokenize(*text);
    if (u.tokens.empty()) throw DataError("empty text");
    return {u};
  }
  if (test_set) return text::load_test_set(*test_set, frontend);
  throw ConfigError("nothing to synthesize: give --text or --test-set");
}

inline std::vector<SynthResult> run_synthesize(const RunContext& ctx, const SynthOptions& o) {
  const auto probe = io::load_checkpoint(o.checkpoint);
  const bool is_paranet = probe.kind == "paranet";
  if (!is_paranet && probe.kind != "teacher") {
    throw ConfigError(o.checkpoint.string() + " is a '" + probe.kind + "' checkpoint; synthesize needs a teacher "
                      "or paranet checkpoint");
  }
  std::optional<Loaded<seq2seq::ParaNetModel>> paranet;
  std::optional<Loaded<seq2seq::TeacherModel>> teacher;
  if (is_paranet) {
    paranet = load_paranet(o.checkpoint);
  } else {
    teacher = load_teacher(o.checkpoint);
  }
  const Hyperparams h = is_paranet ? paranet->h : teacher->h;

  std::string vocoder = o.vocoder;
  if (vocoder != "griffinlim" && vocoder != "wavevae") {
    throw ConfigError("unknown vocoder '" + vocoder + "' (expected griffinlim or wavevae)");
  }
  std::optional<Loaded<wavevae::WaveVae>> vae;
  if (vocoder == "wavevae") {
    if (!o.vocoder_checkpoint || !fs::exists(*o.vocoder_checkpoint / io::kManifestName)) {
      spdlog::warn("no WaveVAE checkpoint found; falling back to Griffin-Lim");
      vocoder = "griffinlim";
    } else {
      vae = load_wavevae(*o.vocoder_checkpoint);
      require_same_preset(vae->h, h, "vocoder checkpoint");
    }
  }

  const text::TextFrontend frontend;
  const auto utts = sentences(o.text, o.test_set, frontend);
  fs::create_directories(ctx.out);
  const auto dsp_cfg = h.dsp();
  const auto mask = mask_config(h, o.mask);
  CsvWriter report(ctx.out / "synthesis.csv", {"utterance", "tokens", "unknown_tokens", "steps",
                                               "decoder_invocations", "alignment_images", "vocoder", "samples"});
  std::vector<SynthResult> results;
  Rng noise_rng(ctx.seed);
  for (std::size_t i = 0; i < utts.size(); ++i) {
    const auto& u = utts[i];
    SynthResult r;
    r.text = u.raw_text;
    r.tokens = u.tokens.size();
    for (const auto& t : u.tokens) r.unknown += t.id == text::kUnkId;
    const auto ids = u.ids();
    const auto pred = is_paranet
                          ? paranet->model->synthesize(ids, mask, o.speed)
                          : teacher->model->synthesize(ids, std::numeric_limits<std::size_t>::max(), mask);
    r.steps = pred.steps();
    r.decoder_invocations = pred.decoder_invocations;
    const std::string stem = "utt" + padded(i + 1);
    const auto mel = seq2seq::to_spectrogram(pred.mel, h.reduction_factor, dsp::SpectrogramKind::kMel, dsp_cfg);
    const auto linear =
        seq2seq::to_spectrogram(pred.linear, h.reduction_factor, dsp::SpectrogramKind::kLinear, dsp_cfg);
    dsp::write_csv(ctx.out / (stem + ".mel.csv"), mel.values);
    dsp::write_pgm(ctx.out / (stem + ".mel.pgm"), mel.values);
    dsp::write_csv(ctx.out / (stem + ".linear.csv"), linear.values);
    dsp::write_pgm(ctx.out / (stem + ".linear.pgm"), linear.values);
    for (std::size_t b = 0; b < pred.alignments.size(); ++b) {
      attention::export_alignment(pred.alignments[b], ctx.out / (stem + ".align_block" + padded(b + 1, 2)));
    }
    r.alignment_images = pred.alignments.size();
    dsp::AudioClip audio;
    if (vae) {
      const Tensor normalized = dsp::normalize_log(mel.values, dsp_cfg.log_floor);
      const std::size_t samples = wavevae::samples_for_frames(*vae->model, mel.frames());
      audio = wavevae::prior_synthesize(*vae->model, normalized, Tensor({1, samples}, noise_rng.normal_vector(samples)),
                                        h.audio_sample_rate);
    } else {
      dsp::GriffinLimOptions gl;
      gl.iterations = o.griffin_lim_iterations;
      audio = dsp::griffin_lim(linear, gl);
    }
    r.vocoder = vocoder;
    dsp::write_wav(ctx.out / (stem + ".wav"), audio);
    report.write(i + 1, r.tokens, r.unknown, r.steps, r.decoder_invocations, r.alignment_images, r.vocoder,
                 audio.size());
    results.push_back(r);
  }
  return results;
}

// ---------------------------------------------------------------------------
// bench

struct BenchOptions {
  fs::path teacher;
  fs::path paranet;
  fs::path test_set;
  std::size_t runs = 50;
  std::size_t limit = 0;  // 0 means every sentence
  bool mask = false;
};

struct Timing {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::size_t runs = 0;
};

inline Timing summarize_timings(const std::vector<double>& t) {
  if (t.empty()) throw ContractError("summarize_timings: no runs");
  Timing s;
  s.runs = t.size();
  s.min = *std::min_element(t.begin(), t.end());
  s.max = *std::max_element(t.begin(), t.end());
  double sum = 0.0;
  for (double v : t) sum += v;
  s.mean = sum / static_cast<double>(t.size());
  return s;
}

/// Runs `f` once untimed, then `runs` timed calls; returns the timings in
/// seconds.
template <typename F>
std::vector<double> time_runs(std::size_t runs, F&& f) {
  using clock = std::chrono::steady_clock;
  f();
  std::vector<double> out;
  out.reserve(runs);
  for (std::size_t i = 0; i < runs; ++i) {
    const auto start = clock::now();
    f();
    out.push_back(std::chrono::duration<double>(clock::now() - start).count());
  }
  return out;
}

struct LatencyRow {
  std::size_t sentence = 0;
  std::size_t tokens = 0;
  std::size_t teacher_steps = 0;
  std::size_t paranet_steps = 0;
  std::size_t teacher_invocations = 0;
  std::size_t paranet_invocations = 0;
  Timing teacher;
  Timing paranet;

  double ratio() const { return teacher.mean / paranet.mean; }
};

struct LatencyReport {
  std::vector<LatencyRow> rows;

  double mean_teacher() const {
    double s = 0.0;
    for (const auto& r : rows) s += r.teacher.mean;
    return s / static_cast<double>(rows.size());
  }
  double mean_paranet() const {
    double s = 0.0;
    for (const auto& r : rows) s += r.paranet.mean;
    return s / static_cast<double>(rows.size());
  }
  double ratio() const { return mean_teacher() / mean_paranet(); }
};

inline LatencyReport measure_latency(const seq2seq::TeacherModel& teacher, const seq2seq::ParaNetModel& paranet,
                                     const std::vector<text::Utterance>& utts, std::size_t runs,
                                     const attention::MaskConfig& mask) {
  if (runs == 0) throw ConfigError("bench needs at least one run");
  LatencyReport report;
  for (std::size_t i = 0; i < utts.size(); ++i) {
    const auto ids = utts[i].ids();
    LatencyRow row;
    row.sentence = i + 1;
    row.tokens = ids.size();
    seq2seq::SpectrogramPrediction tp, pp;
    row.teacher = summarize_timings(
        time_runs(runs, [&] { tp = teacher.synthesize(ids, std::numeric_limits<std::size_t>::max(), mask); }));
    row.paranet = summarize_timings(time_runs(runs, [&] { pp = paranet.synthesize(ids, mask); }));
    row.teacher_steps = tp.steps();
    row.paranet_steps = pp.steps();
    row.teacher_invocations = tp.decoder_invocations;
    row.paranet_invocations = pp.decoder_invocations;
    report.rows.push_back(row);
  }
  return report;
}

inline void write_latency_csv(const fs::path& path, const LatencyReport& report) {
  CsvWriter csv(path, {"sentence", "tokens", "teacher_steps", "paranet_steps", "teacher_invocations",
                       "paranet_invocations", "runs", "teacher_mean_s", "teacher_min_s", "teacher_max_s",
                       "paranet_mean_s", "paranet_min_s", "paranet_max_s", "speedup"});
  for (const auto& r : report.rows) {
    csv.write(r.sentence, r.tokens, r.teacher_steps, r.paranet_steps, r.teacher_invocations, r.paranet_invocations,
              r.teacher.runs, r.teacher.mean, r.teacher.min, r.teacher.max, r.paranet.mean, r.paranet.min,
              r.paranet.max, r.ratio());
  }
  csv.write("all", "", "", "", "", "", report.rows.empty() ? 0 : report.rows.front().teacher.runs,
            report.mean_teacher(), "", "", report.mean_paranet(), "", "", report.ratio());
}

inline LatencyReport run_bench(const RunContext& ctx, const BenchOptions& o) {
  const auto teacher = load_teacher(o.teacher);
  const auto paranet = load_paranet(o.paranet);
  require_same_preset(teacher.h, paranet.h, "bench");
  auto utts = text::load_test_set(o.test_set);
  if (o.limit > 0 && utts.size() > o.limit) utts.resize(o.limit);
  const auto report = measure_latency(*teacher.model, *paranet.model, utts, o.runs, mask_config(paranet.h, o.mask));
  fs::create_directories(ctx.out);
  write_latency_csv(ctx.out / "latency.csv", report);
  spdlog::info("bench: teacher {:.4f}s, paranet {:.4f}s mean per sentence, speedup {:.1f}x", report.mean_teacher(),
               report.mean_paranet(), report.ratio());
  return report;
}

// ---------------------------------------------------------------------------
// analyze-attention

inline constexpr double kLowFocusThreshold = 0.5;

struct AttentionRow {
  std::size_t sentence = 0;
  std::size_t tokens = 0;
  std::size_t steps = 0;
  attention::AlignmentDiagnostics unmasked;
  attention::AlignmentDiagnostics masked;
};

struct AttentionTotals {
  std::size_t repeat = 0;
  std::size_t skip = 0;
  std::size_t low_focus = 0;
  std::size_t tokens = 0;
};

inline AttentionTotals totals(const std::vector<AttentionRow>& rows, bool masked) {
  AttentionTotals t;
  for (const auto& r : rows) {
    const auto& d = masked ? r.masked : r.unmasked;
    t.repeat += d.repeat_count;
    t.skip += d.skip_count;
    t.low_focus += d.focus_rate < kLowFocusThreshold;
    t.tokens += r.tokens;
  }
  return t;
}

struct AttentionOptions {
  fs::path checkpoint;
  fs::path test_set;
  std::size_t limit = 0;
};

/// Diagnoses the last alignment of each sentence with and without masking.
template <typename Synth>
std::vector<AttentionRow> analyze_sentences(const std::vector<text::Utterance>& utts, Synth&& synth) {
  std::vector<AttentionRow> rows;
  for (std::size_t i = 0; i < utts.size(); ++i) {
    std::vector<bool> pause;
    for (const auto& t : utts[i].tokens) pause.push_back(t.cls == text::TokenClass::kPause);
    const auto ids = utts[i].ids();
    AttentionRow row;
    row.sentence = i + 1;
    row.tokens = ids.size();
    const auto open = synth(ids, false);
    const auto closed = synth(ids, true);
    row.steps = open.steps();
    row.unmasked = attention::alignment_diagnostics(open.alignments.back(), pause);
    row.masked = attention::alignment_diagnostics(closed.alignments.back(), pause);
    rows.push_back(row);
  }
  return rows;
}

inline std::vector<AttentionRow> run_analyze_attention(const RunContext& ctx, const AttentionOptions& o) {
  const auto probe = io::load_checkpoint(o.checkpoint);
  auto utts = text::load_test_set(o.test_set);
  if (o.limit > 0 && utts.size() > o.limit) utts.resize(o.limit);
  std::vector<AttentionRow> rows;
  if (probe.kind == "paranet") {
    const auto m = load_paranet(o.checkpoint);
    rows = analyze_sentences(utts, [&](const std::vector<std::size_t>& ids, bool masked) {
      return m.model->synthesize(ids, mask_config(m.h, masked));
    });
  } else if (probe.kind == "teacher") {
    const auto m = load_teacher(o.checkpoint);
    rows = analyze_sentences(utts, [&](const std::vector<std::size_t>& ids, bool masked) {
      return m.model->synthesize(ids, std::numeric_limits<std::size_t>::max(), mask_config(m.h, masked));
    });
  } else {
    throw ConfigError(o.checkpoint.string() + " is a '" + probe.kind + "' checkpoint; expected teacher or paranet");
  }
  fs::create_directories(ctx.out);
  {
    CsvWriter csv(ctx.out / "attention_errors.csv",
                  {"sentence", "tokens", "steps", "repeat", "skip", "focus_rate", "low_focus", "diagonal_rate",
                   "repeat_masked", "skip_masked", "focus_rate_masked", "low_focus_masked", "diagonal_rate_masked"});
    for (const auto& r : rows) {
      csv.write(r.sentence, r.tokens, r.steps, r.unmasked.repeat_count, r.unmasked.skip_count, r.unmasked.focus_rate,
                r.unmasked.focus_rate < kLowFocusThreshold ? 1 : 0, r.unmasked.diagonal_rate, r.masked.repeat_count,
                r.masked.skip_count, r.masked.focus_rate, r.masked.focus_rate < kLowFocusThreshold ? 1 : 0,
                r.masked.diagonal_rate);
    }
  }
  CsvWriter csv(ctx.out / "attention_totals.csv", {"setting", "sentences", "tokens", "repeat", "skip", "low_focus"});
  for (bool masked : {false, true}) {
    const auto t = totals(rows, masked);
    csv.write(masked ? "masked" : "unmasked", rows.size(), t.tokens, t.repeat, t.skip, t.low_focus);
    spdlog::info("attention ({}): repeat {}, skip {}, low-focus {} over {} sentences",
                 masked ? "masked" : "unmasked", t.repeat, t.skip, t.low_focus, rows.size());
  }
  return rows;
}

// ---------------------------------------------------------------------------
// ablate

struct AblateOptions {
  std::optional<fs::path> data;  // toy corpus when absent
  std::size_t teacher_steps = 300;
  std::size_t paranet_steps = 300;
  bool layer_sweep = false;
};

/// The four-sentence toy corpus rendered at the preset's sample rate.
inline std::vector<seq2seq::Example> toy_examples(const Hyperparams& h) {
  const text::TextFrontend frontend;
  const dsp::FeatureExtractor fx(h.dsp());
  const auto voice = seq2seq::ToyVoice::for_config(h);
  std::vector<seq2seq::Example> out;
  for (const auto& t : seq2seq::toy_transcripts()) {
    out.push_back(seq2seq::make_example(t, frontend, seq2seq::render_toy_utterance(frontend.tokenize(t), voice), fx,
                                        h.reduction_factor));
  }
  return out;
}

inline seq2seq::AblationReport run_ablate(const RunContext& ctx, const AblateOptions& o) {
  const text::TextFrontend frontend;
  const auto corpus = o.data ? io::to_examples(io::load_dataset(*o.data, ctx.h), frontend) : toy_examples(ctx.h);
  seq2seq::AblationConfig cfg;
  cfg.teacher_steps = o.teacher_steps;
  cfg.paranet_steps = o.paranet_steps;
  cfg.seed = ctx.seed;
  if (o.layer_sweep) {
    for (auto& v : seq2seq::layer_variants()) cfg.variants.push_back(v);
  }
  const auto report = seq2seq::run_ablation(ctx.h, corpus, frontend.vocabulary().size(), cfg);
  fs::create_directories(ctx.out);
  seq2seq::write_ablation_csv(ctx.out / "ablation.csv", report);
  return report;
}

// ---------------------------------------------------------------------------
// params

struct ParameterCount {
  std::string model;
  std::size_t total = 0;
  double reference = 0.0;
  std::map<std::string, std::size_t> breakdown;

  double deviation() const { return (static_cast<double>(total) - reference) / reference; }
};

inline constexpr double kTeacherReferenceParams = 6.85e6;
inline constexpr double kParaNetReferenceParams = 17.61e6;

inline std::vector<ParameterCount> count_model_parameters(const Hyperparams& h) {
  const std::size_t vocab = text::TextFrontend().vocabulary().size();
  Rng rng(0);
  std::vector<ParameterCount> out;
  {
    const seq2seq::TeacherModel teacher(h, vocab, rng);
    const auto p = teacher.parameters();
    out.push_back({"teacher", nn::count_parameters(p), kTeacherReferenceParams, seq2seq::parameter_breakdown(p)});
  }
  {
    const seq2seq::ParaNetModel paranet(h, vocab, rng);
    const auto p = paranet.parameters();
    out.push_back({"paranet", nn::count_parameters(p), kParaNetReferenceParams, seq2seq::parameter_breakdown(p)});
  }
  return out;
}

inline std::vector<ParameterCount> run_params(const RunContext& ctx) {
  const auto counts = count_model_parameters(ctx.h);
  fs::create_directories(ctx.out);
  CsvWriter csv(ctx.out / "param_counts.csv", {"model", "group", "parameters", "reference", "deviation"});
  for (const auto& c : counts) {
    for (const auto& [group, n] : c.breakdown) csv.write(c.model, group, n, "", "");
    csv.write(c.model, "total", c.total, c.reference, c.deviation());
    spdlog::info("{}: {} parameters ({:+.1f}% vs {:.2f}M)", c.model, c.total, 100.0 * c.deviation(),
                 c.reference / 1e6);
  }
  return counts;
}

}  // namespace paranet::harness
