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

// Character-level text front end: alphabet, tokenizer, test-set reader and
// the token embedding lookup.

#pragma once

#include <spdlog/spdlog.h>

#include <cctype>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "paranet/dsp/features.hpp"
#include "paranet/errors.hpp"
#include "paranet/nn/ops.hpp"

namespace paranet::text {

enum class TokenClass { kCharacter, kPause, kPunctuation };

struct Token {
  TokenClass cls = TokenClass::kCharacter;
  std::string symbol;
  std::size_t id = 0;

  bool operator==(const Token&) const = default;
};

inline constexpr std::size_t kPadId = 0;
inline constexpr std::size_t kUnkId = 1;
inline constexpr const char* kPauseSymbol = "%";

/// Maps symbols to ids. Ids 0 and 1 are reserved for padding and unknown
/// symbols; the remaining ids follow alphabet order.
class Vocabulary {
 public:
  explicit Vocabulary(const std::vector<std::string>& symbols) {
    symbols_ = {"<pad>", "<unk>"};
    for (const auto& s : symbols) {
      if (s.empty()) throw ConfigError("alphabet contains an empty symbol");
      if (ids_.count(s)) throw ConfigError("alphabet lists '" + s + "' twice");
      ids_[s] = symbols_.size();
      symbols_.push_back(s);
    }
  }

  /// Space, A-Z, apostrophe, '.', '?', '-' and the pause marker.
  static Vocabulary default_alphabet() {
    std::vector<std::string> s{" "};
    for (char c = 'A'; c <= 'Z'; ++c) s.emplace_back(1, c);
    for (const char* extra : {"'", ".", "?", "-", kPauseSymbol}) s.emplace_back(extra);
    return Vocabulary(s);
  }

  /// One symbol per line; '#' starts a comment line, `<space>` names ' '.
  static Vocabulary from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open alphabet file " + path.string());
    std::vector<std::string> symbols;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      symbols.push_back(line == "<space>" ? " " : line);
    }
    if (symbols.empty()) throw DataError("alphabet file " + path.string() + " lists no symbols");
    return Vocabulary(symbols);
  }

  std::size_t size() const { return symbols_.size(); }
  const std::string& symbol(std::size_t id) const { return symbols_.at(id); }
  const std::vector<std::string>& symbols() const { return symbols_; }

  std::optional<std::size_t> find(const std::string& s) const {
    const auto it = ids_.find(s);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, std::size_t> ids_;
};

/// Word -> phoneme symbols. Every phoneme must appear in the vocabulary.
using PhonemeLexicon = std::unordered_map<std::string, std::vector<std::string>>;

struct FrontendOptions {
  bool keep_spaces = true;
  PhonemeLexicon lexicon;  // empty: characters only
};

inline TokenClass classify(const std::string& symbol) {
  if (symbol == kPauseSymbol) return TokenClass::kPause;
  if (symbol.size() == 1) {
    const auto c = static_cast<unsigned char>(symbol[0]);
    if (std::isalnum(c) || c == ' ' || c == '\'') return TokenClass::kCharacter;
    return TokenClass::kPunctuation;
  }
  return TokenClass::kCharacter;
}

class TextFrontend {
 public:
  explicit TextFrontend(Vocabulary vocab = Vocabulary::default_alphabet(), FrontendOptions opt = {})
      : vocab_(std::move(vocab)), opt_(std::move(opt)) {}

  const Vocabulary& vocabulary() const { return vocab_; }
  const FrontendOptions& options() const { return opt_; }

  /// Unknown symbols become kUnkId tokens that keep their original text.
  std::vector<Token> tokenize(const std::string& text) const {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) throw DataError("cannot tokenize empty text");
    const auto last = text.find_last_not_of(" \t\r\n");
    const std::string body = text.substr(first, last - first + 1);

    std::vector<Token> out;
    std::size_t unknown = 0;
    std::size_t i = 0;
    while (i < body.size()) {
      if (!opt_.lexicon.empty() && std::isalpha(static_cast<unsigned char>(body[i]))) {
        std::size_t j = i;
        while (j < body.size() && (std::isalpha(static_cast<unsigned char>(body[j])) || body[j] == '\'')) ++j;
        const auto hit = opt_.lexicon.find(body.substr(i, j - i));
        if (hit != opt_.lexicon.end()) {
          for (const auto& ph : hit->second) out.push_back(make_token(ph, unknown));
          i = j;
          continue;
        }
      }
      const std::string sym(1, body[i++]);
      if (sym == " " && !opt_.keep_spaces) continue;
      out.push_back(make_token(sym, unknown));
    }
    if (unknown > 0) {
      spdlog::warn("{} unknown symbol(s) in \"{}\" mapped to <unk>", unknown, body);
    }
    return out;
  }

  std::vector<std::size_t> ids(const std::string& text) const {
    std::vector<std::size_t> out;
    for (const auto& t : tokenize(text)) out.push_back(t.id);
    return out;
  }

  static std::string detokenize(const std::vector<Token>& tokens) {
    std::string out;
    for (const auto& t : tokens) out += t.symbol;
    return out;
  }

 private:
  Token make_token(const std::string& sym, std::size_t& unknown) const {
    const auto id = vocab_.find(sym);
    if (!id) ++unknown;
    return {classify(sym), sym, id.value_or(kUnkId)};
  }

  Vocabulary vocab_;
  FrontendOptions opt_;
};

struct Utterance {
  std::string raw_text;
  std::vector<Token> tokens;
  std::optional<dsp::AudioClip> audio;
  std::optional<dsp::Spectrogram> mel;
  std::optional<dsp::Spectrogram> linear;

  std::vector<std::size_t> ids() const {
    std::vector<std::size_t> out;
    for (const auto& t : tokens) out.push_back(t.id);
    return out;
  }
  std::size_t count(TokenClass cls) const {
    std::size_t n = 0;
    for (const auto& t : tokens) n += t.cls == cls;
    return n;
  }
};

/// Reads "1. TEXT" lines numbered consecutively from 1. Blank lines are
/// skipped.
inline std::vector<Utterance> load_test_set(const std::filesystem::path& path,
                                            const TextFrontend& frontend = TextFrontend()) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open test set " + path.string());
  std::vector<Utterance> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto where = path.filename().string() + ":" + std::to_string(line_no);
    std::size_t pos = 0;
    while (pos < line.size() && std::isdigit(static_cast<unsigned char>(line[pos]))) ++pos;
    if (pos == 0 || pos >= line.size() || line[pos] != '.') {
      throw DataError(where + ": expected \"N. sentence\"");
    }
    const std::size_t number = std::stoul(line.substr(0, pos));
    if (number != out.size() + 1) {
      throw DataError(where + ": expected sentence number " + std::to_string(out.size() + 1) +
                      ", found " + std::to_string(number));
    }
    const auto body = line.substr(pos + 1);
    if (body.find_first_not_of(" \t") == std::string::npos) throw DataError(where + ": empty sentence");
    Utterance u;
    u.raw_text = body.substr(body.find_first_not_of(" \t"));
    u.tokens = frontend.tokenize(u.raw_text);
    out.push_back(std::move(u));
  }
  if (out.empty()) throw DataError(path.string() + ": test set is empty");
  return out;
}

/// [dim x M] embedding of the token sequence; trainable through `table`.
inline nn::Tensor embed(const std::vector<Token>& tokens, const nn::Tensor& table) {
  std::vector<std::size_t> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(t.id);
  return nn::embedding(table, ids);
}

}  // namespace paranet::text
