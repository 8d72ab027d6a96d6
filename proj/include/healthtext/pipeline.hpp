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

// Experiment flows behind the CLI subcommands: train, predict, evaluate,
// extract and augment. Each takes a RunConfig (JSON with --set overrides) and
// writes its artifacts with {tool_version, config_hash} attached.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "healthtext/augment.hpp"
#include "healthtext/corpus.hpp"
#include "healthtext/ensemble.hpp"
#include "healthtext/error.hpp"
#include "healthtext/features.hpp"
#include "healthtext/imbalance.hpp"
#include "healthtext/linear.hpp"
#include "healthtext/metrics.hpp"
#include "healthtext/provenance.hpp"
#include "healthtext/rulex.hpp"

namespace healthtext::pipeline {

using nlohmann::json;

enum class Task { kTask4St1, kTask4St2a, kTask4St2b, kTask5St1, kTask5St2 };

inline constexpr std::array<std::string_view, 5> kTaskNames = {
    "task4_st1", "task4_st2a", "task4_st2b", "task5_st1", "task5_st2"};

inline std::string_view to_string(Task t) { return kTaskNames[static_cast<std::size_t>(t)]; }

inline Task parse_task(std::string_view s) {
  for (std::size_t i = 0; i < kTaskNames.size(); ++i) {
    if (kTaskNames[i] == s) return static_cast<Task>(i);
  }
  throw ConfigError("unknown task '" + std::string(s) + "'");
}

inline bool is_task4(Task t) {
  return t == Task::kTask4St1 || t == Task::kTask4St2a || t == Task::kTask4St2b;
}
inline bool is_trainable(Task t) { return t != Task::kTask4St2b && t != Task::kTask5St2; }
inline corpus::Schema schema_of(Task t) {
  return is_task4(t) ? corpus::Schema::kTask4 : corpus::Schema::kTask5;
}
inline linear::Mode mode_of(Task t) {
  return t == Task::kTask5St1 ? linear::Mode::kSoftmax : linear::Mode::kMultilabelSigmoid;
}

// ---------------------------------------------------------------------------
// Configuration

// Dotted-path override: "train.epochs=0". The value is parsed as JSON when
// possible and taken as a string otherwise.
inline void apply_override(json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' is not key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  std::string pointer;
  std::stringstream ss(key);
  std::string part;
  while (std::getline(ss, part, '.')) {
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty segment");
    pointer += "/" + part;
  }
  try {
    config[json::json_pointer(pointer)] = value;
  } catch (const json::exception& e) {
    throw ConfigError("cannot apply override '" + assignment + "': " + e.what());
  }
}

struct RunConfig {
  json raw = json::object();
  Task task = Task::kTask5St1;

  static RunConfig from_json(json j) {
    RunConfig c;
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    if (!j.contains("task") || !j["task"].is_string()) throw ConfigError("config needs a 'task'");
    c.task = parse_task(j["task"].get<std::string>());
    c.raw = std::move(j);
    return c;
  }

  static RunConfig load(const std::string& path, const std::vector<std::string>& overrides = {},
                        std::optional<std::uint64_t> seed = std::nullopt) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("malformed config: ") + e.what());
    }
    for (const auto& o : overrides) apply_override(j, o);
    if (seed) {
      j["seeds"] = json::array({*seed});
      j["train"]["seed"] = *seed;
      j["smote"]["seed"] = *seed;
    }
    return from_json(std::move(j));
  }

  json section(const char* name) const {
    return raw.contains(name) && raw[name].is_object() ? raw[name] : json::object();
  }

  std::optional<std::string> path(const char* name) const {
    const auto p = section("paths");
    if (p.contains(name) && p[name].is_string() && !p[name].get<std::string>().empty()) {
      return p[name].get<std::string>();
    }
    return std::nullopt;
  }

  std::string require_path(const char* name) const {
    auto p = path(name);
    if (!p) throw ConfigError("config is missing paths." + std::string(name));
    return *p;
  }

  std::string require_existing(const char* name) const {
    auto p = require_path(name);
    if (!std::filesystem::exists(p)) {
      throw ConfigError("paths." + std::string(name) + " does not exist: " + p);
    }
    return p;
  }

  Split split(const char* role, Split fallback) const {
    const auto s = section("splits");
    if (!s.contains(role)) return fallback;
    try {
      return parse_split(s[role].get<std::string>());
    } catch (const Error& e) {
      throw ConfigError(std::string("splits.") + role + ": " + e.what());
    }
  }

  textprep::PrepConfig prep() const {
    auto p = features::prep_from_json(section("prep"));
    if (auto file = path("abbreviations")) p.abbreviations = textprep::load_abbreviations(*file);
    return p;
  }

  features::VectorizerConfig vectorizer() const {
    features::VectorizerConfig v;
    v.prep = prep();
    const auto f = section("features");
    v.min_df = f.value("min_df", v.min_df);
    v.max_df_ratio = f.value("max_df_ratio", v.max_df_ratio);
    v.check();
    return v;
  }

  linear::TrainConfig train() const { return linear::train_config_from_json(section("train")); }

  std::vector<std::uint64_t> seeds() const {
    if (raw.contains("seeds") && raw["seeds"].is_array() && !raw["seeds"].empty()) {
      return raw["seeds"].get<std::vector<std::uint64_t>>();
    }
    return {train().seed};
  }

  double threshold() const { return raw.value("threshold", 0.5); }

  std::vector<std::string> rule_names() const {
    std::vector<std::string> names = {"rule_0", "rule_1", "rule_2", "rule_3", "rule_4"};
    if (raw.contains("rule_names")) {
      auto given = raw["rule_names"].get<std::vector<std::string>>();
      if (given.size() != kNumRules) throw ConfigError("rule_names needs five entries");
      names = given;
    }
    return names;
  }

  json provenance() const { return healthtext::provenance(raw); }
};

// Re-throws with the stage name prefixed, keeping the error category.
template <typename Fn>
auto stage(std::string_view name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(name) + ": " + e.what());
  } catch (const Error& e) {
    throw Error(std::string(name) + ": " + e.what());
  } catch (const json::exception& e) {
    throw Error(std::string(name) + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Units: sentences (task5_st1) or documents (task4_st1 / task4_st2a)

struct Unit {
  std::string id;
  std::string text;
  bool labeled = false;
  int label = -1;
  std::vector<std::uint8_t> labels;
};

inline std::vector<std::string> class_names(Task t, const RunConfig& cfg) {
  if (t == Task::kTask5St1) return {"Recall", "Outbreak", "Neither"};
  std::vector<std::string> names = {"insomnia"};
  for (const auto& r : cfg.rule_names()) names.push_back(r);
  return names;
}

inline std::string sentence_unit_id(const std::string& doc_id, std::size_t index) {
  return doc_id + ":" + std::to_string(index);
}

inline std::vector<Unit> units_for(Task t, const Corpus& c, Split split) {
  std::vector<Unit> out;
  for (const Document* d : corpus::documents_in(c, split)) {
    const AnnotationSet* a = c.annotations_for(d->id);
    if (t == Task::kTask5St1) {
      for (const auto& s : d->sentences) {
        Unit u{sentence_unit_id(d->id, s.index), s.text, false, -1, {}};
        if (a != nullptr) {
          auto it = a->sentence_labels.find(s.index);
          if (it != a->sentence_labels.end()) {
            u.labeled = true;
            u.label = static_cast<int>(it->second);
          }
        }
        out.push_back(std::move(u));
      }
    } else {
      Unit u{d->id, d->text, false, -1, {}};
      if (a != nullptr && a->insomnia) {
        u.labeled = true;
        u.labels.push_back(*a->insomnia ? 1 : 0);
        for (bool b : *a->rule_tags) u.labels.push_back(b ? 1 : 0);
      }
      out.push_back(std::move(u));
    }
  }
  return out;
}

inline std::vector<linear::Example> examples_of(const std::vector<Unit>& units,
                                                const features::TfIdfModel& vec) {
  std::vector<linear::Example> out;
  for (const auto& u : units) {
    if (!u.labeled) continue;
    out.push_back({vec.transform(u.text), u.label, u.labels});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Output helpers

inline void ensure_parent(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
    if (ec) throw IoError("cannot create " + parent.string() + ": " + ec.message());
  }
}

class JsonlWriter {
 public:
  JsonlWriter(const std::string& path, json provenance) : prov_(std::move(provenance)) {
    ensure_parent(path);
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw IoError("cannot write " + path);
  }
  void write(json line) {
    line["tool_version"] = prov_["tool_version"];
    line["config_hash"] = prov_["config_hash"];
    out_ << line.dump() << '\n';
  }

 private:
  json prov_;
  std::ofstream out_;
};

inline void write_json(const std::string& path, const json& j) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(2) << '\n';
}

inline std::vector<json> read_jsonl(const std::string& path) {
  std::vector<json> out;
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), lineno);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// train

struct TrainSummary {
  std::size_t train_examples = 0;
  std::size_t synthetic_examples = 0;
  std::size_t members = 0;
  std::size_t dim = 0;
};

namespace detail {

// SMOTE on densified TF-IDF rows. Multi-label targets are oversampled by
// label powerset: each distinct label vector is one class.
inline std::size_t apply_smote(std::vector<linear::Example>& examples, linear::Mode mode,
                               std::size_t dim, const imbalance::SmoteConfig& sc) {
  std::vector<std::vector<double>> dense;
  std::vector<int> labels;
  std::map<std::vector<std::uint8_t>, int> powerset;
  std::vector<std::vector<std::uint8_t>> powerset_rows;
  for (const auto& ex : examples) {
    dense.push_back(ex.x.dense());
    if (mode == linear::Mode::kSoftmax) {
      labels.push_back(ex.label);
    } else {
      auto [it, inserted] = powerset.emplace(ex.labels, static_cast<int>(powerset.size()));
      if (inserted) powerset_rows.push_back(ex.labels);
      labels.push_back(it->second);
    }
  }
  const auto out = imbalance::smote_oversample(dense, labels, sc);
  const std::size_t added = out.vectors.size() - examples.size();
  for (std::size_t i = examples.size(); i < out.vectors.size(); ++i) {
    linear::Example ex;
    ex.x = features::SparseVector::from_dense(out.vectors[i]);
    ex.x.dim = dim;
    if (mode == linear::Mode::kSoftmax) {
      ex.label = out.labels[i];
    } else {
      ex.labels = powerset_rows[static_cast<std::size_t>(out.labels[i])];
    }
    examples.push_back(std::move(ex));
  }
  return added;
}

}  // namespace detail

inline TrainSummary cmd_train(const RunConfig& cfg) {
  if (!is_trainable(cfg.task)) {
    throw ConfigError(std::string(to_string(cfg.task)) + " is rule-based; use 'extract'");
  }
  const std::string corpus_path = cfg.require_existing("corpus");
  const std::string model_dir = cfg.require_path("model_dir");
  const auto train_cfg = cfg.train();
  const auto seeds = cfg.seeds();
  const auto mode = mode_of(cfg.task);
  const auto names = class_names(cfg.task, cfg);

  const Corpus corpus = stage("load", [&] {
    return corpus::load_corpus(corpus_path, schema_of(cfg.task), cfg.path("annotations"));
  });
  const auto train_units = units_for(cfg.task, corpus, cfg.split("train", Split::kTrain));
  const auto dev_units = units_for(cfg.task, corpus, cfg.split("dev", Split::kDev));

  std::vector<std::string> train_texts;
  for (const auto& u : train_units) {
    if (u.labeled) train_texts.push_back(u.text);
  }
  if (train_texts.empty()) throw ConfigError("train split has no labeled units");

  const auto vectorizer =
      stage("features", [&] { return features::fit(train_texts, cfg.vectorizer()); });
  auto train_examples = examples_of(train_units, vectorizer);
  const auto dev_examples = examples_of(dev_units, vectorizer);

  TrainSummary summary;
  summary.train_examples = train_examples.size();
  summary.dim = vectorizer.dim();

  const auto smote = cfg.section("smote");
  if (smote.value("enabled", false)) {
    imbalance::SmoteConfig sc;
    sc.k_neighbors = smote.value("k_neighbors", sc.k_neighbors);
    sc.seed = smote.value("seed", sc.seed);
    summary.synthetic_examples = stage("smote", [&] {
      return detail::apply_smote(train_examples, mode, vectorizer.dim(), sc);
    });
  }

  const std::string weighting = cfg.raw.value("class_weights", "balanced");
  const auto weights = stage("class_weights", [&] {
    if (weighting == "none") return imbalance::ClassWeights::uniform(names.size());
    if (weighting != "balanced") throw ConfigError("class_weights must be 'balanced' or 'none'");
    if (mode == linear::Mode::kSoftmax) {
      std::vector<int> labels;
      for (const auto& ex : train_examples) labels.push_back(ex.label);
      return imbalance::compute_class_weights(labels, names.size());
    }
    std::vector<std::vector<std::uint8_t>> rows;
    for (const auto& ex : train_examples) rows.push_back(ex.labels);
    return imbalance::compute_label_weights(rows, names.size());
  });

  const auto result = stage("train", [&] {
    return ensemble::train_ensemble(train_examples, dev_examples, mode, names, vectorizer.dim(),
                                    train_cfg, weights, seeds);
  });
  summary.members = result.ensemble.size();

  stage("persist", [&] {
    const json prov = cfg.provenance();
    std::filesystem::create_directories(model_dir);
    json vj = features::to_json(vectorizer);
    vj["provenance"] = prov;
    write_json((std::filesystem::path(model_dir) / "vectorizer.json").string(), vj);
    json manifest = {{"task", std::string(to_string(cfg.task))},
                     {"mode", std::string(linear::to_string(mode))},
                     {"class_names", names},
                     {"vectorizer_file", "vectorizer.json"},
                     {"vectorizer_version", features::kModelVersion},
                     {"model_version", linear::kModelVersion},
                     {"class_weights", {{"freqs", weights.freqs}, {"weights", weights.weights}}},
                     {"config", cfg.raw},
                     {"provenance", prov}};
    ensemble::save(result.ensemble, train_cfg, model_dir, manifest);
    JsonlWriter log((std::filesystem::path(model_dir) / "train_log.jsonl").string(), prov);
    for (std::size_t m = 0; m < result.runs.size(); ++m) {
      for (const auto& e : result.runs[m].log) {
        log.write({{"member", m},
                   {"seed", seeds[m]},
                   {"epoch", e.epoch},
                   {"train_loss", e.train_loss},
                   {"dev_macro_f1", e.dev_macro_f1 ? json(*e.dev_macro_f1) : json(nullptr)},
                   {"best_epoch", result.runs[m].best_epoch}});
      }
    }
  });
  return summary;
}

// ---------------------------------------------------------------------------
// predict

struct LoadedPipeline {
  features::TfIdfModel vectorizer;
  ensemble::Ensemble ensemble;
  json manifest;
};

inline LoadedPipeline load_model_dir(const std::string& dir) {
  LoadedPipeline p;
  p.manifest = ensemble::load_manifest(dir);
  const std::string vfile = p.manifest.value("vectorizer_file", "vectorizer.json");
  p.vectorizer = features::load((std::filesystem::path(dir) / vfile).string());
  p.ensemble = ensemble::load(dir);
  if (p.vectorizer.dim() != p.ensemble.front().dim()) {
    throw ValidationError("vectorizer (version " + std::to_string(features::kModelVersion) +
                          ", dim " + std::to_string(p.vectorizer.dim()) + ") does not match model (version " +
                          std::to_string(linear::kModelVersion) + ", dim " +
                          std::to_string(p.ensemble.front().dim()) + ")");
  }
  return p;
}

inline std::size_t cmd_predict(const RunConfig& cfg) {
  if (!is_trainable(cfg.task)) {
    throw ConfigError(std::string(to_string(cfg.task)) + " is rule-based; use 'extract'");
  }
  const std::string corpus_path = cfg.require_existing("corpus");
  const std::string model_dir = cfg.require_existing("model_dir");
  const std::string out_path = cfg.require_path("predictions");
  const double threshold = cfg.threshold();

  const auto model = stage("load_model", [&] { return load_model_dir(model_dir); });
  const Corpus corpus = stage("load", [&] {
    return corpus::load_corpus(corpus_path, schema_of(cfg.task), cfg.path("annotations"));
  });
  const auto units = units_for(cfg.task, corpus, cfg.split("predict", Split::kTest));
  const auto& names = model.ensemble.front().class_names();

  return stage("predict", [&] {
    JsonlWriter out(out_path, cfg.provenance());
    for (const auto& u : units) {
      const auto p = ensemble::predict_ensemble(model.ensemble, model.vectorizer.transform(u.text),
                                                threshold);
      json probs = json::object();
      for (std::size_t c = 0; c < names.size(); ++c) probs[names[c]] = p.probs[c];
      json pred;
      if (model.ensemble.front().mode() == linear::Mode::kSoftmax) {
        pred = names[static_cast<std::size_t>(p.label)];
      } else {
        pred = json::array();
        for (std::size_t c = 0; c < names.size(); ++c) {
          if (p.labels[c]) pred.push_back(names[c]);
        }
      }
      out.write({{"id", u.id}, {"pred", pred}, {"probs", probs}});
    }
    return units.size();
  });
}

// ---------------------------------------------------------------------------
// extract

inline std::size_t cmd_extract(const RunConfig& cfg) {
  if (is_trainable(cfg.task)) {
    throw ConfigError(std::string(to_string(cfg.task)) + " is not an extraction task");
  }
  const std::string rules_path = cfg.require_existing("rules");
  const std::string corpus_path = cfg.require_existing("corpus");
  const std::string out_path = cfg.require_path("extractions");
  const auto rules = stage("compile_rules", [&] { return rulex::compile_rules(rules_path); });
  const bool want_evidence = cfg.task == Task::kTask4St2b;
  if (!rules.empty() && (rules.mode() == rulex::RuleMode::kEvidence) != want_evidence) {
    throw ConfigError("rule file mode does not fit task " + std::string(to_string(cfg.task)));
  }
  const Corpus corpus = stage("load", [&] {
    return corpus::load_corpus(corpus_path, schema_of(cfg.task), cfg.path("annotations"));
  });
  const auto docs = corpus::documents_in(corpus, cfg.split("predict", Split::kTest));
  const json prov = cfg.provenance();

  return stage("extract", [&] {
    JsonlWriter out(out_path, prov);
    std::optional<JsonlWriter> decisions;
    if (want_evidence) {
      if (auto p = cfg.path("rule_decisions")) decisions.emplace(*p, prov);
    }
    std::size_t lines = 0;
    for (const Document* d : docs) {
      if (want_evidence) {
        const auto spans = rulex::extract_evidence(rules, *d);
        for (const auto& s : spans) {
          out.write({{"doc_id", s.doc_id},
                     {"rule_id", s.rule_id},
                     {"rule_name", rules.rule_names[static_cast<std::size_t>(s.rule_id)]},
                     {"start", s.start},
                     {"end", s.end},
                     {"text", s.text}});
          ++lines;
        }
        if (decisions) {
          const auto dec = rulex::decide_from_evidence(spans);
          decisions->write({{"doc_id", d->id},
                            {"insomnia", dec.insomnia},
                            {"rule_tags", dec.rule_tags}});
        }
      } else {
        for (const auto& s : d->sentences) {
          for (const auto& m : rulex::extract_entities(rules, s)) {
            out.write({{"doc_id", m.doc_id},
                       {"sentence", m.sentence},
                       {"type", std::string(to_string(m.type))},
                       {"start", m.start},
                       {"end", m.end},
                       {"text", m.text}});
            ++lines;
          }
        }
      }
    }
    return lines;
  });
}

// ---------------------------------------------------------------------------
// evaluate

inline json score_json(double p, double r, double f) {
  return {{"f1", f}, {"precision", p}, {"recall", r}};
}

inline json class_json(const metrics::ClassScore& s) {
  json j = score_json(s.precision, s.recall, s.f1);
  j["support"] = s.support;
  if (s.absent) j["absent"] = true;
  return j;
}

namespace detail {

inline std::string fmt3(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << v;
  return os.str();
}

inline std::string render_rows(const std::vector<std::string>& header,
                               const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size(), 0);
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  }
  auto line = [&](const std::vector<std::string>& cells) {
    std::string s;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c) s += "  ";
      s += cells[c] + std::string(width[c] - cells[c].size(), ' ');
    }
    while (!s.empty() && s.back() == ' ') s.pop_back();
    return s + "\n";
  };
  std::string out = line(header);
  std::size_t total = 0;
  for (auto w : width) total += w;
  out += std::string(total + 2 * (width.size() - 1), '-') + "\n";
  for (const auto& r : rows) out += line(r);
  return out;
}

[[noreturn]] inline void throw_missing(const std::string& what, const std::vector<std::string>& ids) {
  std::string msg = what + ": ";
  for (std::size_t i = 0; i < std::min<std::size_t>(ids.size(), 10); ++i) {
    msg += (i ? ", " : "") + ids[i];
  }
  if (ids.size() > 10) msg += " (+" + std::to_string(ids.size() - 10) + " more)";
  throw ValidationError(msg);
}

// Gold units keyed by id and predictions keyed by id must cover each other.
inline std::map<std::string, json> match_predictions(const std::vector<Unit>& gold,
                                                     const std::vector<json>& preds) {
  std::map<std::string, json> by_id;
  for (const auto& p : preds) by_id[p.at("id").get<std::string>()] = p;
  std::vector<std::string> missing, extra;
  std::set<std::string> gold_ids;
  for (const auto& u : gold) {
    gold_ids.insert(u.id);
    if (!by_id.count(u.id)) missing.push_back(u.id);
  }
  for (const auto& [id, p] : by_id) {
    if (!gold_ids.count(id)) extra.push_back(id);
  }
  if (!missing.empty()) throw_missing("predictions missing for ids", missing);
  if (!extra.empty()) throw_missing("predictions for ids absent from gold", extra);
  return by_id;
}

inline int index_of(const std::vector<std::string>& names, const std::string& name) {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw ValidationError("unknown class '" + name + "' in predictions");
  return static_cast<int>(it - names.begin());
}

}  // namespace detail

struct EvaluationOutput {
  json report;
  std::string table;
};

inline EvaluationOutput evaluate_classification(const RunConfig& cfg, const Corpus& corpus) {
  const auto names = class_names(cfg.task, cfg);
  const auto preds = read_jsonl(cfg.require_existing("predictions"));
  const auto units = units_for(cfg.task, corpus, cfg.split("evaluate", Split::kTest));
  const auto by_id = detail::match_predictions(units, preds);

  EvaluationOutput out;
  json& r = out.report;
  const std::string task = std::string(to_string(cfg.task));
  r["task"] = task.substr(0, 5);
  r["subtask"] = task.substr(6);
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header;

  if (cfg.task == Task::kTask5St1) {
    std::vector<int> p, g;
    for (const auto& u : units) {
      if (!u.labeled) continue;
      g.push_back(u.label);
      p.push_back(detail::index_of(names, by_id.at(u.id).at("pred").get<std::string>()));
    }
    const auto rep = metrics::classification_report(metrics::confusion(p, g, names.size()));
    r["per_class"] = json::object();
    for (std::size_t c = 0; c < names.size(); ++c) {
      r["per_class"][names[c]] = class_json(rep.per_class[c]);
      rows.push_back({names[c], detail::fmt3(rep.per_class[c].f1),
                      detail::fmt3(rep.per_class[c].precision),
                      detail::fmt3(rep.per_class[c].recall), ""});
    }
    r["macro"] = score_json(rep.macro_precision, rep.macro_recall, rep.macro_f1);
    r["micro"] = score_json(rep.micro_precision, rep.micro_recall, rep.micro_f1);
    r["accuracy"] = rep.accuracy;
    r["items"] = rep.total;
    header = {"Class", "F1-score", "Precision", "Recall", "Accuracy"};
    rows.push_back({"Macro", detail::fmt3(rep.macro_f1), detail::fmt3(rep.macro_precision),
                    detail::fmt3(rep.macro_recall), detail::fmt3(rep.accuracy)});
  } else {
    // Task 4 label vectors: [insomnia, rule_0..rule_4].
    const std::size_t first = cfg.task == Task::kTask4St1 ? 0 : 1;
    const std::size_t last = cfg.task == Task::kTask4St1 ? 1 : names.size();
    std::vector<std::vector<std::uint8_t>> p, g;
    for (const auto& u : units) {
      if (!u.labeled) continue;
      std::set<std::string> predicted;
      for (const auto& n : by_id.at(u.id).at("pred")) predicted.insert(n.get<std::string>());
      std::vector<std::uint8_t> prow, grow;
      for (std::size_t c = first; c < last; ++c) {
        prow.push_back(predicted.count(names[c]) ? 1 : 0);
        grow.push_back(u.labels[c]);
      }
      p.push_back(prow);
      g.push_back(grow);
    }
    const auto rep = metrics::multilabel_report(p, g);
    r["per_class"] = json::object();
    header = {"Label", "F1-score", "Precision", "Recall"};
    for (std::size_t c = first; c < last; ++c) {
      const auto& s = rep.per_class.empty() ? metrics::ClassScore{} : rep.per_class[c - first];
      r["per_class"][names[c]] = class_json(s);
      rows.push_back({names[c], detail::fmt3(s.f1), detail::fmt3(s.precision),
                      detail::fmt3(s.recall)});
    }
    r["macro"] = score_json(rep.macro_precision, rep.macro_recall, rep.macro_f1);
    r["micro"] = score_json(rep.micro_precision, rep.micro_recall, rep.micro_f1);
    r["accuracy"] = rep.accuracy;
    r["items"] = rep.total;
    if (cfg.task == Task::kTask4St2a) {
      rows.push_back({"Macro", detail::fmt3(rep.macro_f1), detail::fmt3(rep.macro_precision),
                      detail::fmt3(rep.macro_recall)});
    }
  }
  out.table = detail::render_rows(header, rows);
  return out;
}

inline void check_known_docs(const std::vector<json>& lines, const std::set<std::string>& docs) {
  std::vector<std::string> unknown;
  for (const auto& l : lines) {
    const auto id = l.at("doc_id").get<std::string>();
    if (!docs.count(id) && std::find(unknown.begin(), unknown.end(), id) == unknown.end()) {
      unknown.push_back(id);
    }
  }
  if (!unknown.empty()) detail::throw_missing("extractions for ids absent from gold", unknown);
}

inline EvaluationOutput evaluate_entities(const RunConfig& cfg, const Corpus& corpus) {
  const auto lines = read_jsonl(cfg.require_existing("extractions"));
  std::set<std::string> doc_ids;
  std::vector<EntityMention> gold;
  for (const Document* d : corpus::documents_in(corpus, cfg.split("evaluate", Split::kTest))) {
    doc_ids.insert(d->id);
    if (const auto* a = corpus.annotations_for(d->id)) {
      gold.insert(gold.end(), a->entities.begin(), a->entities.end());
    }
  }
  check_known_docs(lines, doc_ids);
  std::vector<EntityMention> pred;
  for (const auto& l : lines) {
    pred.push_back({l.at("doc_id").get<std::string>(), l.at("sentence").get<std::size_t>(),
                    parse_entity_type(l.at("type").get<std::string>()),
                    l.at("start").get<std::size_t>(), l.at("end").get<std::size_t>(),
                    l.value("text", "")});
  }
  EvaluationOutput out;
  json& r = out.report;
  r["task"] = "task5";
  r["subtask"] = "st2";
  r["gold_mentions"] = gold.size();
  r["predicted_mentions"] = pred.size();
  std::vector<std::string> header = {"Mode", "Metric", "Avg."};
  for (auto t : kAllEntityTypes) header.emplace_back(column_name(t));
  std::vector<std::vector<std::string>> rows;
  for (auto mode : {metrics::MatchMode::kExact, metrics::MatchMode::kOverlap}) {
    const std::string mode_name = mode == metrics::MatchMode::kExact ? "exact" : "overlap";
    const auto rep = metrics::entity_f1(pred, gold, mode);
    json m;
    m["per_type"] = json::object();
    for (auto t : kAllEntityTypes) {
      m["per_type"][std::string(column_name(t))] =
          class_json(rep.per_type[static_cast<std::size_t>(t)]);
    }
    m["avg"] = score_json(rep.avg_precision, rep.avg_recall, rep.avg_f1);
    m["micro"] = score_json(rep.micro.precision, rep.micro.recall, rep.micro.f1);
    r[mode_name] = m;
    for (const char* metric : {"F1", "P", "R"}) {
      std::vector<std::string> row = {mode_name, metric};
      auto pick = [&](double f, double p, double rr) {
        return detail::fmt3(metric[0] == 'F' ? f : metric[0] == 'P' ? p : rr);
      };
      row.push_back(pick(rep.avg_f1, rep.avg_precision, rep.avg_recall));
      for (const auto& s : rep.per_type) row.push_back(pick(s.f1, s.precision, s.recall));
      rows.push_back(row);
    }
  }
  out.table = detail::render_rows(header, rows);
  return out;
}

inline EvaluationOutput evaluate_evidence(const RunConfig& cfg, const Corpus& corpus) {
  const auto lines = read_jsonl(cfg.require_existing("extractions"));
  std::set<std::string> doc_ids;
  std::vector<EvidenceSpan> gold;
  for (const Document* d : corpus::documents_in(corpus, cfg.split("evaluate", Split::kTest))) {
    doc_ids.insert(d->id);
    if (const auto* a = corpus.annotations_for(d->id)) {
      gold.insert(gold.end(), a->evidence_spans.begin(), a->evidence_spans.end());
    }
  }
  check_known_docs(lines, doc_ids);
  std::vector<EvidenceSpan> pred;
  for (const auto& l : lines) {
    pred.push_back({l.at("doc_id").get<std::string>(), l.at("rule_id").get<int>(),
                    l.at("start").get<std::size_t>(), l.at("end").get<std::size_t>(),
                    l.value("text", "")});
  }
  const auto rep = metrics::evidence_score(pred, gold);
  const auto names = cfg.rule_names();
  EvaluationOutput out;
  json& r = out.report;
  r["task"] = "task4";
  r["subtask"] = "st2b";
  auto ev_json = [](const metrics::EvidenceScore& e) {
    return json{{"rouge1", score_json(e.rouge1.precision, e.rouge1.recall, e.rouge1.f1)},
                {"rougeL_f1", e.rougeL_f1},
                {"gold_spans", e.gold_spans},
                {"pred_spans", e.pred_spans}};
  };
  r["per_rule"] = json::object();
  std::vector<std::vector<std::string>> rows;
  for (const auto& [rule, e] : rep.per_rule) {
    const std::string name = rule >= 0 && rule < static_cast<int>(kNumRules)
                                 ? names[static_cast<std::size_t>(rule)]
                                 : "rule_" + std::to_string(rule);
    r["per_rule"][name] = ev_json(e);
    rows.push_back({name, detail::fmt3(e.rouge1.f1), detail::fmt3(e.rouge1.precision),
                    detail::fmt3(e.rouge1.recall), detail::fmt3(e.rougeL_f1)});
  }
  r["overall"] = ev_json(rep.overall);
  rows.push_back({"Overall", detail::fmt3(rep.overall.rouge1.f1),
                  detail::fmt3(rep.overall.rouge1.precision),
                  detail::fmt3(rep.overall.rouge1.recall), detail::fmt3(rep.overall.rougeL_f1)});
  out.table = detail::render_rows({"Rule", "F1-score", "Precision", "Recall", "ROUGE-L F1"}, rows);
  return out;
}

inline EvaluationOutput cmd_evaluate(const RunConfig& cfg) {
  const std::string gold_path = cfg.path("gold") ? *cfg.path("gold") : cfg.require_path("corpus");
  if (!std::filesystem::exists(gold_path)) throw ConfigError("gold corpus does not exist: " + gold_path);
  const std::string report_path = cfg.require_path("report");
  const Corpus corpus = stage("load", [&] {
    return corpus::load_corpus(gold_path, schema_of(cfg.task), cfg.path("annotations"));
  });
  EvaluationOutput out = stage("evaluate", [&] {
    switch (cfg.task) {
      case Task::kTask5St2: return evaluate_entities(cfg, corpus);
      case Task::kTask4St2b: return evaluate_evidence(cfg, corpus);
      default: return evaluate_classification(cfg, corpus);
    }
  });
  out.report["provenance"] = cfg.provenance();
  stage("persist", [&] {
    write_json(report_path, out.report);
    if (auto table = cfg.path("table")) {
      ensure_parent(*table);
      std::ofstream t(*table, std::ios::binary | std::ios::trunc);
      if (!t) throw IoError("cannot write " + *table);
      t << out.table;
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// augment

struct AugmentSummary {
  std::size_t candidates = 0;
  std::size_t accepted = 0;
  std::map<std::string, std::size_t> rejected;
};

inline AugmentSummary cmd_augment(const RunConfig& cfg) {
  const std::string corpus_path = cfg.require_existing("corpus");
  const std::string out_corpus = cfg.require_path("augmented_corpus");
  const std::string audit_path = cfg.require_path("audit");
  const auto aug = cfg.section("augment");
  const auto client = augment::client_config_from_json(
      aug.contains("client") ? aug["client"] : json::object());
  const auto tpl = augment::template_from_json(
      aug.contains("template") ? aug["template"] : json::object());
  const auto filter = augment::filter_config_from_json(
      aug.contains("filter") ? aug["filter"] : json::object());
  const std::size_t count = aug.value("num_candidates", std::size_t{100});
  const std::size_t in_flight = aug.value("in_flight", std::size_t{4});
  const std::size_t first_topic = aug.value("first_topic_index", std::size_t{0});
  stage("client", [&] { client.check(); });

  const Corpus corpus = stage("load", [&] {
    return corpus::load_corpus(corpus_path, corpus::Schema::kTask5, cfg.path("annotations"));
  });
  const auto run = stage("generate", [&] {
    return augment::generate_candidates(client, tpl, count, in_flight, first_topic);
  });

  std::vector<std::string> existing;
  for (const auto& d : corpus.documents) existing.push_back(d.text);
  const auto records = augment::filter_generated(run.candidates, existing, filter);

  AugmentSummary summary;
  summary.candidates = records.size();
  std::vector<augment::AugmentationRecord> accepted;
  const json prov = cfg.provenance();
  stage("persist", [&] {
    JsonlWriter audit(audit_path, prov);
    for (std::size_t i = 0; i < records.size(); ++i) {
      json line = augment::to_json(records[i]);
      line["index"] = run.candidates[i].index;
      audit.write(line);
      if (records[i].accepted) {
        accepted.push_back(records[i]);
      } else {
        ++summary.rejected[std::string(augment::to_string(*records[i].rejection_reason))];
      }
    }
    summary.accepted = accepted.size();
    if (auto p = cfg.path("accepted")) {
      JsonlWriter acc(*p, prov);
      for (const auto& r : accepted) acc.write(augment::to_json(r));
    }
    const Corpus mixed = augment::mix_into_corpus(corpus, accepted);
    corpus::throw_if_invalid(corpus::validate(mixed, corpus::Schema::kTask5));
    ensure_parent(out_corpus);
    corpus::save_corpus(mixed, out_corpus);
    json side = prov;
    side["source_corpus"] = corpus_path;
    side["added_documents"] = accepted.size();
    write_json(out_corpus + ".provenance.json", side);
  });
  if (run.error) {
    throw Error("generate: " + *run.error + " (" + std::to_string(records.size()) +
                " candidates kept in " + audit_path + ")");
  }
  return summary;
}

}  // namespace healthtext::pipeline
