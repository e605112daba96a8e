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

// Corpus ingestion and the on-disk feature cache.
//
// A corpus directory holds metadata.csv with "file|transcript" lines (a
// third column, when present, is taken as the normalized transcript) and
// the referenced mono 16-bit WAV files at the configured sample rate. The
// cache reuses the checkpoint container with kind "dataset".

#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "paranet/dsp/audio.hpp"
#include "paranet/dsp/features.hpp"
#include "paranet/io/checkpoint.hpp"
#include "paranet/seq2seq/training.hpp"
#include "paranet/text/frontend.hpp"

namespace paranet::io {

inline constexpr const char* kMetadataName = "metadata.csv";

struct CachedUtterance {
  std::string file;
  std::string text;
  std::vector<std::size_t> ids;
  dsp::AudioClip audio;
  dsp::Spectrogram mel;
  dsp::Spectrogram linear;
};

struct IngestIssue {
  std::size_t line = 0;
  std::string file;
  std::string message;
};

struct Dataset {
  Hyperparams config;
  std::vector<CachedUtterance> utterances;
  std::vector<IngestIssue> issues;

  std::size_t total_tokens() const {
    std::size_t n = 0;
    for (const auto& u : utterances) n += u.ids.size();
    return n;
  }
  std::size_t total_steps() const {
    std::size_t n = 0;
    const std::size_t r = config.reduction_factor;
    for (const auto& u : utterances) n += (u.mel.frames() + r - 1) / r;
    return n;
  }
  /// Reduced decoder steps per token over the whole corpus.
  double corpus_ratio() const {
    const auto tokens = total_tokens();
    return tokens == 0 ? 0.0 : static_cast<double>(total_steps()) / static_cast<double>(tokens);
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_pipes(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto bar = line.find('|', start);
    out.push_back(line.substr(start, bar == std::string::npos ? std::string::npos : bar - start));
    if (bar == std::string::npos) break;
    start = bar + 1;
  }
  return out;
}

}  // namespace detail

/// Reads every metadata line; a bad line is recorded and skipped. Throws
/// DataError only when the metadata file is missing or nothing survives.
inline Dataset ingest(const std::filesystem::path& corpus_dir, const Hyperparams& h,
                      const text::TextFrontend& frontend = text::TextFrontend()) {
  const auto meta_path = corpus_dir / kMetadataName;
  std::ifstream meta(meta_path);
  if (!meta) throw DataError("cannot open " + meta_path.string());
  const dsp::FeatureExtractor fx(h.dsp());
  Dataset ds;
  ds.config = h;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(meta, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_pipes(line);
    std::string file = fields.empty() ? "" : detail::trim(fields[0]);
    try {
      if (fields.size() < 2) throw DataError("expected \"file|transcript\"");
      if (file.empty()) throw DataError("empty file name");
      if (std::filesystem::path(file).extension().empty()) file += ".wav";
      CachedUtterance u;
      u.file = file;
      u.text = detail::trim(fields.back());
      if (u.text.empty()) throw DataError("empty transcript");
      const auto tokens = frontend.tokenize(u.text);
      if (tokens.empty()) throw DataError("transcript has no tokens");
      std::size_t unknown = 0;
      for (const auto& t : tokens) {
        u.ids.push_back(t.id);
        unknown += t.id == text::kUnkId;
      }
      if (unknown > 0) spdlog::warn("{}:{}: {} unknown symbol(s) in '{}'", kMetadataName, line_no, unknown, u.text);
      const auto path = corpus_dir / file;
      if (!std::filesystem::exists(path)) throw DataError("missing audio file " + file);
      u.audio = dsp::read_wav(path);
      if (u.audio.sample_rate != h.audio_sample_rate) {
        throw DataError("sample rate " + std::to_string(u.audio.sample_rate) + " Hz, expected " +
                        std::to_string(h.audio_sample_rate));
      }
      auto [mel, linear] = fx.mel_and_linear(u.audio);
      u.mel = std::move(mel);
      u.linear = std::move(linear);
      ds.utterances.push_back(std::move(u));
    } catch (const DataError& e) {
      ds.issues.push_back({line_no, file, e.what()});
    }
  }
  for (const auto& issue : ds.issues) {
    spdlog::warn("{}:{} ({}) rejected: {}", kMetadataName, issue.line, issue.file, issue.message);
  }
  if (ds.utterances.empty()) {
    throw DataError(meta_path.string() + ": no usable utterances (" + std::to_string(ds.issues.size()) +
                    " rejected)");
  }
  spdlog::info("ingested {} utterance(s), rejected {}; corpus ratio {:.3f} steps per token", ds.utterances.size(),
               ds.issues.size(), ds.corpus_ratio());
  return ds;
}

inline void write_ingest_report(const std::filesystem::path& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "line,file,message\n";
  for (const auto& i : ds.issues) {
    std::string msg = i.message;
    for (auto& c : msg) {
      if (c == ',' || c == '\n') c = ';';
    }
    out << i.line << ',' << i.file << ',' << msg << '\n';
  }
}

inline std::string utterance_key(std::size_t i) {
  std::string n = std::to_string(i);
  return "utt" + std::string(n.size() < 4 ? 4 - n.size() : 0, '0') + n;
}

inline void save_dataset(const std::filesystem::path& dir, const Dataset& ds) {
  Checkpoint c;
  c.kind = "dataset";
  c.config_text = format_config(ds.config);
  auto& list = c.extra["utterances"] = nlohmann::json::array();
  for (std::size_t i = 0; i < ds.utterances.size(); ++i) {
    const auto& u = ds.utterances[i];
    const auto key = utterance_key(i);
    list.push_back({{"key", key}, {"file", u.file}, {"text", u.text}, {"ids", u.ids}});
    c.tensors.push_back({key + ".audio", {u.audio.size()}, u.audio.samples});
    c.tensors.push_back({key + ".mel", u.mel.values.shape(), u.mel.values.values()});
    c.tensors.push_back({key + ".linear", u.linear.values.shape(), u.linear.values.values()});
  }
  c.extra["corpus_ratio"] = ds.corpus_ratio();
  c.extra["rejected"] = ds.issues.size();
  save_checkpoint(dir, c);
  write_ingest_report(dir / "ingest_report.csv", ds);
}

/// Loads a cache; the cached feature settings must match `h`.
inline Dataset load_dataset(const std::filesystem::path& dir, const Hyperparams& h) {
  if (!std::filesystem::exists(dir / kManifestName)) {
    throw DataError("no dataset cache at " + dir.string() + "; run ingest first");
  }
  const auto c = load_checkpoint(dir);
  if (c.kind != "dataset") throw ConfigError(dir.string() + " holds a '" + c.kind + "' checkpoint, not a dataset");
  Dataset ds;
  ds.config = c.config();
  const auto a = ds.config.dsp(), b = h.dsp();
  if (a.sample_rate != b.sample_rate || a.fft_size != b.fft_size || a.hop != b.hop ||
      a.win_length != b.win_length || a.mel_bands != b.mel_bands || ds.config.reduction_factor != h.reduction_factor) {
    throw ConfigError(dir.string() + ": cached features were built for preset '" + ds.config.preset +
                      "' and do not match the requested '" + h.preset + "' settings; re-run ingest");
  }
  ds.config = h;
  const auto wrap = [&](const TensorRecord& r, dsp::SpectrogramKind kind) {
    return dsp::Spectrogram{nn::Tensor(r.shape, r.values), kind, b.hop, b.win_length, b.fft_size, b.sample_rate};
  };
  try {
    for (const auto& e : c.extra.at("utterances")) {
      CachedUtterance u;
      const auto key = e.at("key").get<std::string>();
      u.file = e.at("file").get<std::string>();
      u.text = e.at("text").get<std::string>();
      u.ids = e.at("ids").get<std::vector<std::size_t>>();
      u.audio.sample_rate = b.sample_rate;
      u.audio.samples = c.at(key + ".audio").values;
      u.mel = wrap(c.at(key + ".mel"), dsp::SpectrogramKind::kMel);
      u.linear = wrap(c.at(key + ".linear"), dsp::SpectrogramKind::kLinear);
      ds.utterances.push_back(std::move(u));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(dir.string() + ": malformed dataset metadata: " + e.what());
  }
  if (ds.utterances.empty()) throw DataError(dir.string() + ": dataset is empty");
  return ds;
}

/// Training examples (normalized, reduced features) for the spectrogram
/// models.
inline std::vector<seq2seq::Example> to_examples(const Dataset& ds,
                                                 const text::TextFrontend& frontend = text::TextFrontend()) {
  std::vector<seq2seq::Example> out;
  for (const auto& u : ds.utterances) {
    out.push_back(seq2seq::make_example(u.text, frontend.tokenize(u.text), u.mel, u.linear,
                                        ds.config.reduction_factor, ds.config.dsp().log_floor));
  }
  return out;
}

}  // namespace paranet::io
