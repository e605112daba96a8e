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

// CSV and 8-bit PGM writers for spectrograms and alignments.

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <string>

#include "paranet/errors.hpp"
#include "paranet/nn/tensor.hpp"

namespace paranet::dsp {

/// One matrix row per CSV line, full round-trip precision.
inline void write_csv(const std::filesystem::path& path, const nn::Tensor& m) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  const std::size_t rows = m.dim(0), cols = m.size() / rows;
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (c) out << ',';
      out << m.at(r * cols + c);
    }
    out << '\n';
  }
}

/// Binary PGM heatmap of a [time x bins] matrix, min-max scaled to 0..255.
/// Time runs along x; bin 0 is drawn at the bottom.
inline void write_pgm(const std::filesystem::path& path, const nn::Tensor& m) {
  const std::size_t rows = m.dim(0), cols = m.size() / rows;
  const auto [lo_it, hi_it] = std::minmax_element(m.data().begin(), m.data().end());
  const double lo = *lo_it, span = *hi_it - *lo_it;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "P5\n" << rows << ' ' << cols << "\n255\n";
  for (std::size_t y = 0; y < cols; ++y) {
    const std::size_t bin = cols - 1 - y;
    for (std::size_t x = 0; x < rows; ++x) {
      const double v = span > 0 ? (m.at(x * cols + bin) - lo) / span : 0.0;
      out.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
    }
  }
}

}  // namespace paranet::dsp
