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

// Shared helpers for the unit and acceptance tests: fixture paths, scratch
// directories and reference implementations that do not reuse library code.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "healthtext/corpus_types.hpp"
#include "healthtext/linear.hpp"

namespace healthtext::testing {

inline std::string data_path(const std::string& rel) {
  return std::string(HEALTHTEXT_DATA_DIR) + "/" + rel;
}
inline std::string fixture_path(const std::string& rel) {
  return std::string(HEALTHTEXT_FIXTURE_DIR) + "/" + rel;
}

// Fresh directory under the system temp dir, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("healthtext-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

// ---------------------------------------------------------------------------
// Oracles

struct Counts {
  std::size_t tp = 0, fp = 0, fn = 0;
};

inline double ratio(double a, double b) { return b == 0.0 ? 0.0 : a / b; }

inline double oracle_f1(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

// Pair-by-pair counting for single-label predictions.
inline std::vector<Counts> oracle_class_counts(const std::vector<int>& pred,
                                               const std::vector<int>& gold, int classes) {
  std::vector<Counts> out(static_cast<std::size_t>(classes));
  for (int c = 0; c < classes; ++c) {
    auto& k = out[static_cast<std::size_t>(c)];
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const bool p = pred[i] == c, g = gold[i] == c;
      if (p && g) ++k.tp;
      else if (p) ++k.fp;
      else if (g) ++k.fn;
    }
  }
  return out;
}

inline std::vector<std::vector<int>> oracle_lcs_table(const std::vector<std::string>& a,
                                                      const std::vector<std::string>& b) {
  std::vector<std::vector<int>> t(a.size() + 1, std::vector<int>(b.size() + 1, 0));
  for (std::size_t i = a.size(); i-- > 0;) {
    for (std::size_t j = b.size(); j-- > 0;) {
      t[i][j] = a[i] == b[j] ? t[i + 1][j + 1] + 1 : std::max(t[i + 1][j], t[i][j + 1]);
    }
  }
  return t;
}

inline std::size_t oracle_lcs(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  return static_cast<std::size_t>(oracle_lcs_table(a, b)[0][0]);
}

inline std::size_t oracle_multiset_overlap(const std::vector<std::string>& a,
                                           const std::vector<std::string>& b) {
  std::map<std::string, int> ca, cb;
  for (const auto& t : a) ++ca[t];
  for (const auto& t : b) ++cb[t];
  std::size_t n = 0;
  for (const auto& [tok, c] : ca) {
    auto it = cb.find(tok);
    if (it != cb.end()) n += static_cast<std::size_t>(std::min(c, it->second));
  }
  return n;
}

// Distance from p to the segment [a, b].
inline double distance_to_segment(const std::vector<double>& p, const std::vector<double>& a,
                                   const std::vector<double>& b) {
  double ab2 = 0.0, ap_ab = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    ab2 += (b[i] - a[i]) * (b[i] - a[i]);
    ap_ab += (p[i] - a[i]) * (b[i] - a[i]);
  }
  const double t = ab2 == 0.0 ? 0.0 : std::clamp(ap_ab / ab2, 0.0, 1.0);
  double d2 = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = a[i] + t * (b[i] - a[i]);
    d2 += (p[i] - q) * (p[i] - q);
  }
  return std::sqrt(d2);
}

// Entity matching oracles. Exact: multiset intersection of full keys.
// Overlap: repeatedly take the unmatched pair with the largest overlap,
// lowest gold index, lowest prediction index.
inline std::array<std::size_t, kNumEntityTypes> oracle_entity_tp(
    const std::vector<EntityMention>& pred, const std::vector<EntityMention>& gold, bool overlap) {
  std::array<std::size_t, kNumEntityTypes> tp{};
  std::vector<bool> pu(pred.size(), false), gu(gold.size(), false);
  auto same_group = [](const EntityMention& a, const EntityMention& b) {
    return a.doc_id == b.doc_id && a.sentence == b.sentence && a.type == b.type;
  };
  if (!overlap) {
    for (std::size_t g = 0; g < gold.size(); ++g) {
      for (std::size_t p = 0; p < pred.size(); ++p) {
        if (!pu[p] && same_group(pred[p], gold[g]) && pred[p].start == gold[g].start &&
            pred[p].end == gold[g].end) {
          pu[p] = true;
          ++tp[static_cast<std::size_t>(gold[g].type)];
          break;
        }
      }
    }
    return tp;
  }
  // Greedy per group; indices are relative to each group's own ordering.
  std::map<std::tuple<std::string, std::size_t, int>, std::pair<std::vector<std::size_t>,
                                                                std::vector<std::size_t>>>
      groups;
  for (std::size_t g = 0; g < gold.size(); ++g) {
    groups[{gold[g].doc_id, gold[g].sentence, static_cast<int>(gold[g].type)}].first.push_back(g);
  }
  for (std::size_t p = 0; p < pred.size(); ++p) {
    groups[{pred[p].doc_id, pred[p].sentence, static_cast<int>(pred[p].type)}].second.push_back(p);
  }
  for (const auto& [key, members] : groups) {
    const auto& [gs, ps] = members;
    std::vector<bool> gtaken(gs.size(), false), ptaken(ps.size(), false);
    while (true) {
      std::size_t best = 0, bg = 0, bp = 0;
      for (std::size_t i = 0; i < gs.size(); ++i) {
        if (gtaken[i]) continue;
        for (std::size_t j = 0; j < ps.size(); ++j) {
          if (ptaken[j]) continue;
          const auto& a = gold[gs[i]];
          const auto& b = pred[ps[j]];
          const std::size_t lo = std::max(a.start, b.start), hi = std::min(a.end, b.end);
          const std::size_t ov = hi > lo ? hi - lo : 0;
          if (ov > best) {
            best = ov;
            bg = i;
            bp = j;
          }
        }
      }
      if (best == 0) break;
      gtaken[bg] = ptaken[bp] = true;
      ++tp[static_cast<std::size_t>(std::get<2>(key))];
    }
  }
  return tp;
}

// ---------------------------------------------------------------------------
// Central finite differences on weighted_loss.

struct GradCheck {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
};

// Relative error per component is |a - n| / max(|a|, |n|, floor); the floor
// keeps components that are zero up to rounding from dividing by ~0.
inline GradCheck finite_difference_check(const linear::LinearModel& model,
                                         const std::vector<linear::Example>& batch,
                                         const imbalance::ClassWeights& weights,
                                         const linear::LossOptions& opts, double eps = 1e-5,
                                         double floor = 1e-4) {
  const auto g = linear::gradient(model, batch, weights, opts);
  GradCheck out;
  auto probe = [&](double analytic, auto&& set) {
    linear::LinearModel plus = model, minus = model;
    set(plus, +eps);
    set(minus, -eps);
    const double numeric = (linear::weighted_loss(plus, batch, weights, opts) -
                            linear::weighted_loss(minus, batch, weights, opts)) /
                           (2.0 * eps);
    const double diff = std::abs(analytic - numeric);
    const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
    out.max_abs_error = std::max(out.max_abs_error, diff);
    out.max_rel_error = std::max(out.max_rel_error, diff / scale);
  };
  for (std::size_t i = 0; i < g.weights.size(); ++i) {
    probe(g.weights[i], [&](linear::LinearModel& m, double d) { m.weights()[i] += d; });
  }
  for (std::size_t c = 0; c < g.bias.size(); ++c) {
    probe(g.bias[c], [&](linear::LinearModel& m, double d) { m.bias()[c] += d; });
  }
  return out;
}

}  // namespace healthtext::testing
