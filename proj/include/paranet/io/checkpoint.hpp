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

// Checkpoint container: a JSON manifest next to one blob of little-endian
// IEEE-754 doubles.
//
//   <dir>/manifest.json   kind, step, seed, rng state, config text, extra
//                         metadata and one {name, shape, dtype, offset,
//                         length} record per tensor
//   <dir>/tensors.bin     tensor bytes back to back, in manifest order

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "paranet/config.hpp"
#include "paranet/nn/params.hpp"

namespace paranet::io {

inline constexpr const char* kManifestName = "manifest.json";
inline constexpr const char* kBlobName = "tensors.bin";
inline constexpr const char* kFormatTag = "paranet-checkpoint";
inline constexpr int kFormatVersion = 1;

struct TensorRecord {
  std::string name;
  nn::Shape shape;
  std::vector<double> values;
};

struct Checkpoint {
  std::string kind;  // "teacher", "paranet", "wavevae", "dataset"
  std::uint64_t step = 0;
  std::uint64_t seed = 0;
  std::string rng_state;
  std::string config_text;  // format_config output
  nlohmann::json extra = nlohmann::json::object();
  std::vector<TensorRecord> tensors;

  const TensorRecord* find(const std::string& name) const {
    for (const auto& t : tensors) {
      if (t.name == name) return &t;
    }
    return nullptr;
  }
  const TensorRecord& at(const std::string& name) const {
    if (const auto* t = find(name)) return *t;
    throw DataError("checkpoint has no tensor '" + name + "'");
  }

  Hyperparams config() const {
    std::istringstream in(config_text);
    return parse_config(in, Hyperparams{}, "checkpoint config");
  }
};

namespace detail {

inline std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    std::uint64_t out = 0;
    for (int i = 0; i < 8; ++i) out |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return out;
  }
}

inline void append_f64(std::string& blob, double v) {
  const std::uint64_t bits = to_little(std::bit_cast<std::uint64_t>(v));
  char bytes[8];
  std::memcpy(bytes, &bits, 8);
  blob.append(bytes, 8);
}

inline double read_f64(const char* p) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, p, 8);
  return std::bit_cast<double>(to_little(bits));
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace detail

/// Snapshot of trainable tensors, detached from any graph.
inline std::vector<TensorRecord> records_of(const nn::NamedParams& params) {
  std::vector<TensorRecord> out;
  out.reserve(params.size());
  for (const auto& [name, t] : params) out.push_back({name, t.shape(), t.values()});
  return out;
}

inline std::string encode_blob(const Checkpoint& ckpt) {
  std::string blob;
  for (const auto& t : ckpt.tensors) {
    if (t.values.size() != nn::numel(t.shape)) {
      throw ContractError("checkpoint tensor '" + t.name + "' has " + std::to_string(t.values.size()) +
                          " values for shape " + nn::shape_str(t.shape));
    }
    for (double v : t.values) detail::append_f64(blob, v);
  }
  return blob;
}

inline nlohmann::json encode_manifest(const Checkpoint& ckpt) {
  nlohmann::json m;
  m["format"] = kFormatTag;
  m["version"] = kFormatVersion;
  m["kind"] = ckpt.kind;
  m["step"] = ckpt.step;
  m["seed"] = ckpt.seed;
  m["rng_state"] = ckpt.rng_state;
  m["config"] = ckpt.config_text;
  m["extra"] = ckpt.extra;
  auto& list = m["tensors"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& t : ckpt.tensors) {
    const std::uint64_t length = 8 * static_cast<std::uint64_t>(t.values.size());
    list.push_back({{"name", t.name}, {"shape", t.shape}, {"dtype", "f64le"}, {"offset", offset}, {"length", length}});
    offset += length;
  }
  return m;
}

inline void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& ckpt) {
  std::filesystem::create_directories(dir);
  const std::string blob = encode_blob(ckpt);
  {
    std::ofstream out(dir / kBlobName, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + (dir / kBlobName).string());
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  }
  std::ofstream out(dir / kManifestName, std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + (dir / kManifestName).string());
  out << encode_manifest(ckpt).dump(2) << '\n';
}

inline Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  if (!std::filesystem::exists(dir / kManifestName)) {
    throw ConfigError("no checkpoint at " + dir.string() + " (missing " + kManifestName + ")");
  }
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(detail::read_file(dir / kManifestName));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(dir.string() + ": unreadable manifest: " + e.what());
  }
  const std::string blob = detail::read_file(dir / kBlobName);
  Checkpoint ckpt;
  try {
    if (m.at("format") != kFormatTag) throw DataError(dir.string() + ": not a checkpoint manifest");
    if (m.at("version").get<int>() != kFormatVersion) {
      throw DataError(dir.string() + ": unsupported checkpoint version " + m.at("version").dump());
    }
    ckpt.kind = m.at("kind").get<std::string>();
    ckpt.step = m.at("step").get<std::uint64_t>();
    ckpt.seed = m.at("seed").get<std::uint64_t>();
    ckpt.rng_state = m.at("rng_state").get<std::string>();
    ckpt.config_text = m.at("config").get<std::string>();
    ckpt.extra = m.value("extra", nlohmann::json::object());
    std::uint64_t expected_offset = 0;
    for (const auto& rec : m.at("tensors")) {
      TensorRecord t;
      t.name = rec.at("name").get<std::string>();
      t.shape = rec.at("shape").get<nn::Shape>();
      if (rec.at("dtype") != "f64le") throw DataError(t.name + ": unsupported dtype " + rec.at("dtype").dump());
      const auto offset = rec.at("offset").get<std::uint64_t>();
      const auto length = rec.at("length").get<std::uint64_t>();
      if (offset != expected_offset) {
        throw DataError(t.name + ": offset " + std::to_string(offset) + " overlaps or leaves a gap (expected " +
                        std::to_string(expected_offset) + ")");
      }
      if (length != 8 * nn::numel(t.shape)) throw DataError(t.name + ": byte length does not match shape");
      if (offset + length > blob.size()) throw DataError(t.name + ": extends past the end of " + kBlobName);
      t.values.resize(nn::numel(t.shape));
      for (std::size_t i = 0; i < t.values.size(); ++i) t.values[i] = detail::read_f64(blob.data() + offset + 8 * i);
      expected_offset = offset + length;
      ckpt.tensors.push_back(std::move(t));
    }
    if (expected_offset != blob.size()) throw DataError(dir.string() + ": blob has trailing bytes");
  } catch (const nlohmann::json::exception& e) {
    throw DataError(dir.string() + ": malformed manifest: " + e.what());
  }
  return ckpt;
}

/// Copies checkpoint values into `params` by name; every parameter must be
/// present with a matching shape.
inline void restore(const Checkpoint& ckpt, const nn::NamedParams& params) {
  for (auto [name, t] : params) {
    const auto* rec = ckpt.find(name);
    if (!rec) throw ConfigError("checkpoint (" + ckpt.kind + ") lacks parameter '" + name + "'");
    if (rec->shape != t.shape()) {
      throw ConfigError("parameter '" + name + "' has shape " + nn::shape_str(rec->shape) + " in the checkpoint, " +
                        nn::shape_str(t.shape()) + " in the model");
    }
    std::copy(rec->values.begin(), rec->values.end(), t.mutable_data().begin());
  }
}

}  // namespace paranet::io
