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

// TF-IDF vectorizer with smoothed idf(t) = ln((1 + N) / (1 + df_t)) + 1,
// raw-count term frequency and L2 normalization. Columns are ordered
// lexicographically by term.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "healthtext/error.hpp"
#include "healthtext/textprep.hpp"

namespace healthtext::features {

using nlohmann::json;

inline constexpr int kModelVersion = 1;

struct SparseVector {
  std::vector<std::uint32_t> indices;  // strictly increasing
  std::vector<double> values;
  std::size_t dim = 0;

  std::size_t nnz() const { return indices.size(); }
  double norm() const {
    double s = 0.0;
    for (double v : values) s += v * v;
    return std::sqrt(s);
  }
  std::vector<double> dense() const {
    std::vector<double> out(dim, 0.0);
    for (std::size_t k = 0; k < indices.size(); ++k) out[indices[k]] = values[k];
    return out;
  }
  static SparseVector from_dense(const std::vector<double>& x) {
    SparseVector v;
    v.dim = x.size();
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] != 0.0) {
        v.indices.push_back(static_cast<std::uint32_t>(i));
        v.values.push_back(x[i]);
      }
    }
    return v;
  }

  friend bool operator==(const SparseVector&, const SparseVector&) = default;
};

struct VectorizerConfig {
  textprep::PrepConfig prep;
  std::size_t min_df = 1;
  double max_df_ratio = 1.0;

  void check() const {
    prep.check();
    if (min_df < 1) throw ConfigError("min_df must be >= 1");
    if (!(max_df_ratio > 0.0 && max_df_ratio <= 1.0)) {
      throw ConfigError("max_df_ratio must be in (0, 1]");
    }
  }
};

class TfIdfModel {
 public:
  TfIdfModel() = default;
  TfIdfModel(VectorizerConfig config, std::vector<std::string> terms,
             std::vector<double> idf, std::size_t n_docs)
      : config_(std::move(config)),
        terms_(std::move(terms)),
        idf_(std::move(idf)),
        n_docs_(n_docs) {
    if (terms_.size() != idf_.size()) {
      throw ValidationError("idf length differs from vocabulary size");
    }
    for (std::size_t i = 0; i < terms_.size(); ++i) {
      if (i > 0 && !(terms_[i - 1] < terms_[i])) {
        throw ValidationError("vocabulary must be sorted and unique");
      }
      if (!(idf_[i] > 0.0) || !std::isfinite(idf_[i])) {
        throw ValidationError("idf values must be finite and positive");
      }
      vocab_.emplace(terms_[i], static_cast<std::uint32_t>(i));
    }
  }

  const VectorizerConfig& config() const { return config_; }
  const std::vector<std::string>& terms() const { return terms_; }
  const std::vector<double>& idf() const { return idf_; }
  std::size_t dim() const { return terms_.size(); }
  std::size_t n_docs_fitted() const { return n_docs_; }

  std::optional<std::uint32_t> column(std::string_view term) const {
    auto it = vocab_.find(std::string(term));
    if (it == vocab_.end()) return std::nullopt;
    return it->second;
  }

  double idf_of(std::string_view term) const {
    auto c = column(term);
    if (!c) throw std::out_of_range("term not in vocabulary");
    return idf_[*c];
  }

  SparseVector transform(std::string_view text) const {
    std::map<std::uint32_t, double> counts;
    for (const auto& t : textprep::terms(text, config_.prep)) {
      if (auto c = column(t)) counts[*c] += 1.0;
    }
    SparseVector v;
    v.dim = dim();
    double sq = 0.0;
    for (const auto& [col, count] : counts) {
      const double w = count * idf_[col];
      v.indices.push_back(col);
      v.values.push_back(w);
      sq += w * w;
    }
    if (sq > 0.0) {
      const double inv = 1.0 / std::sqrt(sq);
      for (double& w : v.values) w *= inv;
    }
    return v;
  }

  std::vector<SparseVector> transform_all(const std::vector<std::string>& texts) const {
    std::vector<SparseVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(transform(t));
    return out;
  }

 private:
  VectorizerConfig config_;
  std::vector<std::string> terms_;
  std::vector<double> idf_;
  std::size_t n_docs_ = 0;
  std::unordered_map<std::string, std::uint32_t> vocab_;
};

inline TfIdfModel fit(const std::vector<std::string>& train_texts,
                      const VectorizerConfig& config) {
  config.check();
  if (train_texts.empty()) throw ValidationError("cannot fit TF-IDF on an empty training set");
  std::map<std::string, std::size_t> df;
  for (const auto& text : train_texts) {
    const auto ts = textprep::terms(text, config.prep);
    for (const auto& t : std::set<std::string>(ts.begin(), ts.end())) ++df[t];
  }
  const auto n = static_cast<double>(train_texts.size());
  std::vector<std::string> terms;
  std::vector<double> idf;
  for (const auto& [term, count] : df) {
    if (count < config.min_df) continue;
    if (static_cast<double>(count) / n > config.max_df_ratio) continue;
    terms.push_back(term);
    idf.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
  }
  return TfIdfModel(config, std::move(terms), std::move(idf), train_texts.size());
}

inline json prep_to_json(const textprep::PrepConfig& p) {
  return {{"lowercase", p.lowercase},
          {"strip_accents", p.strip_accents},
          {"ngram_min", p.ngram_min},
          {"ngram_max", p.ngram_max},
          {"abbreviations", p.abbreviations}};
}

inline textprep::PrepConfig prep_from_json(const json& j) {
  textprep::PrepConfig p;
  p.lowercase = j.value("lowercase", p.lowercase);
  p.strip_accents = j.value("strip_accents", p.strip_accents);
  p.ngram_min = j.value("ngram_min", p.ngram_min);
  p.ngram_max = j.value("ngram_max", p.ngram_max);
  if (j.contains("abbreviations")) {
    p.abbreviations = j["abbreviations"].get<std::set<std::string>>();
  }
  p.check();
  return p;
}

inline json to_json(const TfIdfModel& m) {
  return {{"version", kModelVersion},
          {"config",
           {{"prep", prep_to_json(m.config().prep)},
            {"min_df", m.config().min_df},
            {"max_df_ratio", m.config().max_df_ratio}}},
          {"n_docs_fitted", m.n_docs_fitted()},
          {"terms", m.terms()},
          {"idf", m.idf()}};
}

inline TfIdfModel from_json(const json& j) {
  try {
    if (j.at("version").get<int>() != kModelVersion) {
      throw ParseError("unsupported vectorizer version " + j.at("version").dump());
    }
    VectorizerConfig c;
    const auto& cj = j.at("config");
    c.prep = prep_from_json(cj.at("prep"));
    c.min_df = cj.at("min_df").get<std::size_t>();
    c.max_df_ratio = cj.at("max_df_ratio").get<double>();
    return TfIdfModel(c, j.at("terms").get<std::vector<std::string>>(),
                      j.at("idf").get<std::vector<double>>(),
                      j.at("n_docs_fitted").get<std::size_t>());
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad vectorizer file: ") + e.what());
  }
}

inline void save(const TfIdfModel& m, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << to_json(m).dump(1) << '\n';
}

inline TfIdfModel load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed vectorizer JSON: ") + e.what());
  }
  return from_json(j);
}

}  // namespace healthtext::features
