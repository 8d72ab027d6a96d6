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

// Class weights inversely proportional to empirical class frequency, and
// SMOTE oversampling on dense feature vectors.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "healthtext/error.hpp"

namespace healthtext::imbalance {

// Balanced convention: w_c = N / (C * n_c), so uniform data gives w = 1.
// For single-label data `freqs` are the class frequencies pi_c (sum to 1).
// Weights built by compute_label_weights() hold per-label positive rates
// instead, which need not sum to 1.
struct ClassWeights {
  std::vector<double> freqs;
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }

  static ClassWeights uniform(std::size_t num_classes) {
    return {std::vector<double>(num_classes, 1.0 / static_cast<double>(num_classes)),
            std::vector<double>(num_classes, 1.0)};
  }

  ClassWeights scaled(double factor) const {
    ClassWeights out = *this;
    for (double& w : out.weights) w *= factor;
    return out;
  }

  friend bool operator==(const ClassWeights&, const ClassWeights&) = default;
};

inline ClassWeights compute_class_weights(const std::vector<int>& labels,
                                          std::size_t num_classes) {
  if (num_classes == 0) throw ValidationError("num_classes must be positive");
  std::vector<std::size_t> counts(num_classes, 0);
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      throw ValidationError("label " + std::to_string(y) + " outside [0, " +
                            std::to_string(num_classes) + ")");
    }
    ++counts[static_cast<std::size_t>(y)];
  }
  const auto n = static_cast<double>(labels.size());
  const auto c = static_cast<double>(num_classes);
  ClassWeights out;
  for (std::size_t k = 0; k < num_classes; ++k) {
    if (counts[k] == 0) {
      throw ValidationError("class " + std::to_string(k) + " has no examples");
    }
    const auto nk = static_cast<double>(counts[k]);
    out.freqs.push_back(nk / n);
    out.weights.push_back(n / (c * nk));
  }
  return out;
}

// Multi-label data: one positive-class weight per label, N / (2 * n_pos),
// i.e. the balanced convention applied to each label's binary task.
inline ClassWeights compute_label_weights(
    const std::vector<std::vector<std::uint8_t>>& labels, std::size_t num_labels) {
  if (labels.empty()) throw ValidationError("no examples to weight");
  std::vector<std::size_t> pos(num_labels, 0);
  for (const auto& row : labels) {
    if (row.size() != num_labels) throw ValidationError("label row has wrong width");
    for (std::size_t k = 0; k < num_labels; ++k) pos[k] += row[k] ? 1 : 0;
  }
  const auto n = static_cast<double>(labels.size());
  ClassWeights out;
  for (std::size_t k = 0; k < num_labels; ++k) {
    if (pos[k] == 0) {
      throw ValidationError("label " + std::to_string(k) + " has no positive examples");
    }
    const auto p = static_cast<double>(pos[k]);
    out.freqs.push_back(p / n);
    out.weights.push_back(n / (2.0 * p));
  }
  return out;
}

struct SmoteConfig {
  std::size_t k_neighbors = 5;
  std::uint64_t seed = 0;

  void check() const {
    if (k_neighbors < 1) throw ConfigError("k_neighbors must be >= 1");
  }
};

struct Oversampled {
  std::vector<std::vector<double>> vectors;
  std::vector<int> labels;
};

namespace detail {

inline double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// k nearest same-class neighbours of every member, ties to lower index.
inline std::vector<std::vector<std::size_t>> nearest_neighbors(
    const std::vector<std::vector<double>>& x, const std::vector<std::size_t>& members,
    std::size_t k) {
  std::vector<std::vector<std::size_t>> out(members.size());
  std::vector<std::pair<double, std::size_t>> cand;
  for (std::size_t a = 0; a < members.size(); ++a) {
    cand.clear();
    for (std::size_t b = 0; b < members.size(); ++b) {
      if (a == b) continue;
      cand.emplace_back(squared_distance(x[members[a]], x[members[b]]), members[b]);
    }
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
    for (std::size_t i = 0; i < k; ++i) out[a].push_back(cand[i].second);
  }
  return out;
}

inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace detail

// Equalizes every class present in `labels` to the majority count with
// x_new = x_i + u * (x_nn - x_i). Originals come first in input order,
// synthetic points follow grouped by ascending class. Class c draws from an
// engine seeded with seed ^ c.
inline Oversampled smote_oversample(const std::vector<std::vector<double>>& vectors,
                                    const std::vector<int>& labels,
                                    const SmoteConfig& config) {
  config.check();
  if (vectors.size() != labels.size()) {
    throw ValidationError("vectors and labels differ in length");
  }
  Oversampled out{vectors, labels};
  if (vectors.empty()) return out;
  const std::size_t dim = vectors.front().size();
  for (const auto& v : vectors) {
    if (v.size() != dim) throw ValidationError("vectors differ in dimension");
  }
  int max_label = 0;
  for (int y : labels) {
    if (y < 0) throw ValidationError("labels must be non-negative");
    max_label = std::max(max_label, y);
  }
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(max_label) + 1);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    members[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  std::size_t majority = 0;
  for (const auto& m : members) majority = std::max(majority, m.size());

  for (std::size_t c = 0; c < members.size(); ++c) {
    const auto& idx = members[c];
    if (idx.empty() || idx.size() == majority) continue;
    if (idx.size() < 2) {
      throw ValidationError("class " + std::to_string(c) +
                            " has a single sample; SMOTE needs at least two");
    }
    const std::size_t k = std::min(config.k_neighbors, idx.size() - 1);
    const auto neighbors = detail::nearest_neighbors(vectors, idx, k);
    std::mt19937_64 rng(config.seed ^ static_cast<std::uint64_t>(c));
    for (std::size_t s = idx.size(); s < majority; ++s) {
      const std::size_t a = rng() % idx.size();
      const std::size_t nn = neighbors[a][rng() % k];
      const double u = detail::unit_uniform(rng);
      const auto& base = vectors[idx[a]];
      const auto& other = vectors[nn];
      std::vector<double> x(dim);
      for (std::size_t d = 0; d < dim; ++d) x[d] = base[d] + u * (other[d] - base[d]);
      out.vectors.push_back(std::move(x));
      out.labels.push_back(static_cast<int>(c));
    }
  }
  return out;
}

}  // namespace healthtext::imbalance
