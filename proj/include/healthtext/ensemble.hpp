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

// Seed ensembles: k independently trained linear models whose predicted
// probabilities are averaged at inference.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "healthtext/error.hpp"
#include "healthtext/linear.hpp"

namespace healthtext::ensemble {

using linear::LinearModel;
using nlohmann::json;

inline constexpr int kManifestVersion = 1;

class Ensemble {
 public:
  Ensemble() = default;
  explicit Ensemble(std::vector<LinearModel> members) : members_(std::move(members)) {
    if (members_.empty()) throw ValidationError("ensemble needs at least one member");
    const auto& first = members_.front();
    for (const auto& m : members_) {
      if (m.mode() != first.mode()) throw ValidationError("ensemble members differ in mode");
      if (m.dim() != first.dim() || m.class_names() != first.class_names()) {
        throw ValidationError("ensemble members differ in dimension or classes");
      }
    }
  }

  const std::vector<LinearModel>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }
  const LinearModel& front() const { return members_.front(); }
  std::vector<std::uint64_t> seeds() const {
    std::vector<std::uint64_t> s;
    for (const auto& m : members_) s.push_back(m.seed());
    return s;
  }

 private:
  std::vector<LinearModel> members_;
};

struct EnsembleResult {
  Ensemble ensemble;
  std::vector<linear::TrainResult> runs;  // per member, in seed order
};

// Member i is trained with config.seed = seeds[i]. Members train
// concurrently; each run is deterministic on its own.
inline EnsembleResult train_ensemble(const std::vector<linear::Example>& train_data,
                                     const std::vector<linear::Example>& dev_data,
                                     linear::Mode mode,
                                     const std::vector<std::string>& class_names,
                                     std::size_t dim, const linear::TrainConfig& config,
                                     const imbalance::ClassWeights& weights,
                                     const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw ValidationError("at least one seed is required");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw ValidationError("ensemble seeds must be distinct");
  }
  std::vector<std::future<linear::TrainResult>> jobs;
  for (auto seed : seeds) {
    linear::TrainConfig c = config;
    c.seed = seed;
    jobs.push_back(std::async(std::launch::async, [&, c] {
      return linear::train(train_data, dev_data, mode, class_names, dim, c, weights);
    }));
  }
  EnsembleResult out;
  std::vector<LinearModel> members;
  for (auto& job : jobs) {
    out.runs.push_back(job.get());
    members.push_back(out.runs.back().model);
  }
  out.ensemble = Ensemble(std::move(members));
  return out;
}

// Arithmetic mean of member probabilities. Each component is summed in
// ascending order of value, so the result does not depend on member order.
inline std::vector<double> mean_probs(const Ensemble& ens, const features::SparseVector& x) {
  std::vector<std::vector<double>> all;
  for (const auto& m : ens.members()) all.push_back(linear::forward(m, x));
  std::vector<double> out(all.front().size(), 0.0);
  std::vector<double> column(all.size());
  for (std::size_t c = 0; c < out.size(); ++c) {
    for (std::size_t i = 0; i < all.size(); ++i) column[i] = all[i][c];
    std::sort(column.begin(), column.end());
    double s = 0.0;
    for (double v : column) s += v;
    out[c] = s / static_cast<double>(all.size());
  }
  return out;
}

inline linear::Prediction predict_ensemble(const Ensemble& ens, const features::SparseVector& x,
                                           double threshold = 0.5) {
  if (ens.size() == 0) throw ValidationError("empty ensemble");
  return linear::decide(ens.front().mode(), mean_probs(ens, x), threshold);
}

// Writes member_<i>.json files and manifest.json into `dir`. `extra` keys are
// merged into the manifest.
inline void save(const Ensemble& ens, const linear::TrainConfig& config,
                 const std::string& dir, const json& extra = json::object()) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
  json manifest = extra;
  manifest["version"] = kManifestVersion;
  manifest["seeds"] = ens.seeds();
  manifest["member_files"] = json::array();
  for (std::size_t i = 0; i < ens.size(); ++i) {
    const std::string name = "member_" + std::to_string(i) + ".json";
    linear::TrainConfig c = config;
    c.seed = ens.members()[i].seed();
    linear::save(ens.members()[i], c, (std::filesystem::path(dir) / name).string());
    manifest["member_files"].push_back(name);
  }
  std::ofstream out(std::filesystem::path(dir) / "manifest.json", std::ios::trunc);
  if (!out) throw IoError("cannot write manifest in " + dir);
  out << manifest.dump(1) << '\n';
}

inline json load_manifest(const std::string& dir) {
  std::ifstream in(std::filesystem::path(dir) / "manifest.json");
  if (!in) throw IoError("no manifest.json in " + dir);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed manifest: ") + e.what());
  }
}

inline Ensemble load(const std::string& dir) {
  const json manifest = load_manifest(dir);
  if (manifest.value("version", 0) != kManifestVersion) {
    throw ParseError("unsupported ensemble manifest version");
  }
  std::vector<LinearModel> members;
  for (const auto& name : manifest.at("member_files")) {
    members.push_back(
        linear::load((std::filesystem::path(dir) / name.get<std::string>()).string()).model);
  }
  return Ensemble(std::move(members));
}

}  // namespace healthtext::ensemble
