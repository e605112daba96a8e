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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "paranet/errors.hpp"

namespace paranet::dsp {

struct AudioClip {
  std::vector<double> samples;  // nominally in [-1, 1]
  int sample_rate = 24000;

  std::size_t size() const { return samples.size(); }
  double seconds() const { return static_cast<double>(samples.size()) / sample_rate; }
};

inline void validate(const AudioClip& clip) {
  if (clip.samples.empty()) throw DataError("audio clip is empty");
  if (clip.sample_rate <= 0) throw DataError("audio sample rate must be positive");
}

namespace detail {

inline std::uint32_t read_u32(const unsigned char* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
inline std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
inline void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>(v >> 8));
}

}  // namespace detail

/// Reads a RIFF/WAVE file holding mono 16-bit little-endian PCM.
/// Samples are scaled by 1/32768.
inline AudioClip read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open WAV file " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  const auto fail = [&](const std::string& why) {
    return DataError(path.string() + ": " + why);
  };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw fail("not a RIFF/WAVE file");
  }
  std::size_t pos = 12;
  bool have_fmt = false;
  AudioClip clip;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t len = detail::read_u32(&bytes[pos + 4]);
    const std::size_t body = pos + 8;
    if (body + len > bytes.size()) throw fail("truncated chunk");
    if (std::memcmp(&bytes[pos], "fmt ", 4) == 0) {
      if (len < 16) throw fail("short fmt chunk");
      const auto format = detail::read_u16(&bytes[body]);
      const auto channels = detail::read_u16(&bytes[body + 2]);
      clip.sample_rate = static_cast<int>(detail::read_u32(&bytes[body + 4]));
      const auto bits = detail::read_u16(&bytes[body + 14]);
      if (format != 1) throw fail("only PCM is supported");
      if (channels != 1) throw fail("only mono audio is supported");
      if (bits != 16) throw fail("only 16-bit samples are supported");
      have_fmt = true;
    } else if (std::memcmp(&bytes[pos], "data", 4) == 0) {
      if (!have_fmt) throw fail("data chunk before fmt chunk");
      const std::size_t n = len / 2;
      clip.samples.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto raw = static_cast<std::int16_t>(detail::read_u16(&bytes[body + 2 * i]));
        clip.samples[i] = raw / 32768.0;
      }
      if (n == 0) throw fail("no samples");
      return clip;
    }
    pos = body + len + (len & 1);
  }
  throw fail("missing data chunk");
}

/// Writes mono 16-bit PCM; samples are clipped to [-1, 1).
inline void write_wav(const std::filesystem::path& path, const AudioClip& clip) {
  std::string out;
  const auto n = static_cast<std::uint32_t>(clip.samples.size());
  out += "RIFF";
  detail::put_u32(out, 36 + 2 * n);
  out += "WAVEfmt ";
  detail::put_u32(out, 16);
  detail::put_u16(out, 1);
  detail::put_u16(out, 1);
  detail::put_u32(out, static_cast<std::uint32_t>(clip.sample_rate));
  detail::put_u32(out, static_cast<std::uint32_t>(clip.sample_rate) * 2);
  detail::put_u16(out, 2);
  detail::put_u16(out, 16);
  out += "data";
  detail::put_u32(out, 2 * n);
  for (double s : clip.samples) {
    const double v = std::clamp(s, -1.0, 1.0) * 32768.0;
    const auto q = static_cast<std::int16_t>(std::clamp(std::lround(v), -32768L, 32767L));
    detail::put_u16(out, static_cast<std::uint16_t>(q));
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

}  // namespace paranet::dsp
