// Copyright 2026 The healthtext Authors.
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

// Normalization, tokenization, n-grams and sentence splitting shared by the
// vectorizer, the rule engine and the ROUGE scorer.

#include <cstddef>
#include <fstream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "healthtext/corpus_types.hpp"
#include "healthtext/error.hpp"
#include "healthtext/unicode.hpp"

namespace healthtext::textprep {

inline std::set<std::string> default_abbreviations() {
  return {"dr.",  "mr.",   "mrs.", "ms.",  "prof.", "st.",  "jr.",  "sr.",
          "inc.", "co.",   "corp.", "ltd.", "llc.", "vs.",  "etc.", "e.g.",
          "i.e.", "no.",   "approx.", "u.s.", "jan.", "feb.", "mar.", "apr.",
          "jun.", "jul.",  "aug.", "sep.", "sept.", "oct.", "nov.", "dec.",
          "mg.",  "b.i.d.", "t.i.d.", "q.h.s.", "p.o.", "pt."};
}

struct PrepConfig {
  bool lowercase = true;
  bool strip_accents = false;
  int ngram_min = 1;
  int ngram_max = 1;
  // Compared case-insensitively against the word that ends in the period.
  std::set<std::string> abbreviations = default_abbreviations();

  void check() const {
    if (ngram_min < 1 || ngram_max < ngram_min) {
      throw ConfigError("ngram range must satisfy 1 <= ngram_min <= ngram_max");
    }
  }

  friend bool operator==(const PrepConfig&, const PrepConfig&) = default;
};

struct Token {
  std::string text;
  std::size_t start = 0;
  std::size_t end = 0;

  friend bool operator==(const Token&, const Token&) = default;
};

// One entry per line; blank lines and lines starting with '#' are skipped.
inline std::set<std::string> load_abbreviations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open abbreviation list " + path);
  std::set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) {
      line.pop_back();
    }
    auto first = line.find_first_not_of(' ');
    if (first == std::string::npos || line[first] == '#') continue;
    out.insert(unicode::lowercase(line.substr(first)));
  }
  return out;
}

// NFC, optional accent stripping and lowercasing, whitespace runs collapsed
// to one space and trimmed. Idempotent.
inline std::string normalize(std::string_view text, const PrepConfig& config) {
  std::string s = config.strip_accents ? unicode::strip_accents(text)
                                       : unicode::nfc(text);
  if (config.lowercase) s = unicode::nfc(unicode::lowercase(s));
  std::u32string out;
  bool pending_space = false;
  for (char32_t c : unicode::decode(s)) {
    if (unicode::is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(U' ');
    pending_space = false;
    out.push_back(c);
  }
  return unicode::encode(out);
}

namespace detail {

inline bool is_connector(char32_t c) {
  return c == U'\'' || c == U'’' || c == U'-' || c == U'.';
}

inline bool is_word_char(char32_t c) {
  return unicode::is_alnum(c) || unicode::is_mark(c);
}

}  // namespace detail

// Maximal alphanumeric runs. Apostrophes, hyphens and periods stay inside a
// token only when both neighbours are alphanumeric ("E.coli", "don't").
inline std::vector<Token> tokenize(std::string_view text) {
  const auto cps = unicode::decode(text);
  std::vector<Token> tokens;
  const std::size_t n = cps.size();
  std::size_t i = 0;
  while (i < n) {
    if (!unicode::is_alnum(cps[i])) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    while (i < n) {
      if (detail::is_word_char(cps[i])) {
        ++i;
      } else if (detail::is_connector(cps[i]) && i + 1 < n &&
                 unicode::is_alnum(cps[i + 1])) {
        ++i;
      } else {
        break;
      }
    }
    tokens.push_back(
        {unicode::encode(std::u32string_view(cps).substr(start, i - start)),
         start, i});
  }
  return tokens;
}

inline std::vector<std::string> token_texts(const std::vector<Token>& tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.text);
  return out;
}

inline std::vector<std::string> ngrams(const std::vector<std::string>& tokens,
                                       int n_min, int n_max) {
  if (n_min < 1 || n_max < n_min) {
    throw ConfigError("ngram range must satisfy 1 <= n_min <= n_max");
  }
  std::vector<std::string> out;
  for (int n = n_min; n <= n_max; ++n) {
    const auto width = static_cast<std::size_t>(n);
    if (tokens.size() < width) break;
    for (std::size_t i = 0; i + width <= tokens.size(); ++i) {
      std::string term = tokens[i];
      for (std::size_t k = 1; k < width; ++k) {
        term += ' ';
        term += tokens[i + k];
      }
      out.push_back(std::move(term));
    }
  }
  return out;
}

// normalize -> tokenize -> n-grams with the config's range.
inline std::vector<std::string> terms(std::string_view text,
                                      const PrepConfig& config) {
  return ngrams(token_texts(tokenize(normalize(text, config))),
                config.ngram_min, config.ngram_max);
}

// Splits after '.', '!' or '?' when followed by whitespace and an uppercase
// letter, unless the word ending at the period is a known abbreviation.
// Sentences are trimmed; inter-sentence whitespace belongs to no sentence.
inline std::vector<Sentence> split_sentences(std::string_view text,
                                             const PrepConfig& config) {
  const auto cps = unicode::decode(text);
  const std::size_t n = cps.size();
  std::vector<Sentence> out;

  auto emit = [&](std::size_t start, std::size_t end) {
    while (end > start && unicode::is_space(cps[end - 1])) --end;
    if (end <= start) return;
    Sentence s;
    s.index = out.size();
    s.start = start;
    s.end = end;
    s.text = unicode::encode(std::u32string_view(cps).substr(start, end - start));
    out.push_back(std::move(s));
  };

  std::size_t start = 0;
  while (start < n && unicode::is_space(cps[start])) ++start;

  for (std::size_t i = start; i < n; ++i) {
    const char32_t c = cps[i];
    if (c != U'.' && c != U'!' && c != U'?') continue;
    if (i + 1 >= n || !unicode::is_space(cps[i + 1])) continue;
    std::size_t next = i + 1;
    while (next < n && unicode::is_space(cps[next])) ++next;
    if (next >= n || !unicode::is_upper(cps[next])) continue;
    if (c == U'.') {
      std::size_t w = i;
      while (w > start && !unicode::is_space(cps[w - 1])) --w;
      const auto word = unicode::lowercase(
          unicode::encode(std::u32string_view(cps).substr(w, i + 1 - w)));
      if (config.abbreviations.count(word) > 0) continue;
    }
    emit(start, i + 1);
    start = next;
    i = next - 1;
  }
  if (start < n) emit(start, n);
  return out;
}

}  // namespace healthtext::textprep
