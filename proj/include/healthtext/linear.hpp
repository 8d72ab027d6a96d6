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

// Linear classifier trained with class-weighted cross-entropy
//
//   L = -sum_c w_c * 1{y = c} * log p_c
//
// in two modes: a multinomial softmax over C classes, and C independent
// sigmoids for multi-label targets (weighted binary cross-entropy, with w_c
// applied to the positive term of label c). An optional focal factor
// (1 - p_true)^gamma multiplies each term; gamma = 0 is the plain loss.
// Batch loss is the mean over examples plus 0.5 * l2 * ||W||^2 (bias not
// regularized). Log-probabilities are clamped below at log(1e-12).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "healthtext/error.hpp"
#include "healthtext/features.hpp"
#include "healthtext/imbalance.hpp"
#include "healthtext/metrics.hpp"

namespace healthtext::linear {

using features::SparseVector;
using imbalance::ClassWeights;
using nlohmann::json;

inline constexpr int kModelVersion = 1;
inline constexpr double kProbFloor = 1e-12;

enum class Mode { kSoftmax, kMultilabelSigmoid };

inline std::string_view to_string(Mode m) {
  return m == Mode::kSoftmax ? "softmax" : "multilabel_sigmoid";
}
inline Mode parse_mode(std::string_view s) {
  if (s == "softmax") return Mode::kSoftmax;
  if (s == "multilabel_sigmoid") return Mode::kMultilabelSigmoid;
  throw ParseError("unknown model mode '" + std::string(s) + "'");
}

struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 200;
  std::size_t batch_size = 32;
  double l2 = 1e-4;
  int early_stop_patience = 10;  // epochs without dev macro-F1 gain; 0 disables
  double focal_gamma = 0.0;
  std::uint64_t seed = 0;

  void check() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (epochs < 0) throw ConfigError("epochs must be >= 0");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(l2 >= 0.0)) throw ConfigError("l2 must be >= 0");
    if (early_stop_patience < 0) throw ConfigError("early_stop_patience must be >= 0");
    if (!(focal_gamma >= 0.0)) throw ConfigError("focal_gamma must be >= 0");
  }

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

inline json to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"epochs", c.epochs},
          {"batch_size", c.batch_size},       {"l2", c.l2},
          {"early_stop_patience", c.early_stop_patience},
          {"focal_gamma", c.focal_gamma},     {"seed", c.seed}};
}

inline TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.l2 = j.value("l2", c.l2);
  c.early_stop_patience = j.value("early_stop_patience", c.early_stop_patience);
  c.focal_gamma = j.value("focal_gamma", c.focal_gamma);
  c.seed = j.value("seed", c.seed);
  c.check();
  return c;
}

// The parts of TrainConfig that shape the objective.
struct LossOptions {
  double l2 = 0.0;
  double focal_gamma = 0.0;

  static LossOptions from(const TrainConfig& c) { return {c.l2, c.focal_gamma}; }
};

// Softmax mode reads `label`; multi-label mode reads `labels` (one 0/1 per class).
struct Example {
  SparseVector x;
  int label = -1;
  std::vector<std::uint8_t> labels;
};

class LinearModel {
 public:
  LinearModel() = default;
  LinearModel(Mode mode, std::vector<std::string> class_names, std::size_t dim,
              std::uint64_t seed = 0)
      : mode_(mode),
        class_names_(std::move(class_names)),
        dim_(dim),
        seed_(seed),
        weights_(class_names_.size() * dim, 0.0),
        bias_(class_names_.size(), 0.0) {
    if (class_names_.empty()) throw ValidationError("model needs at least one class");
  }

  Mode mode() const { return mode_; }
  const std::vector<std::string>& class_names() const { return class_names_; }
  std::size_t num_classes() const { return class_names_.size(); }
  std::size_t dim() const { return dim_; }
  std::uint64_t seed() const { return seed_; }
  void set_seed(std::uint64_t s) { seed_ = s; }

  // Row-major C x V.
  std::vector<double>& weights() { return weights_; }
  const std::vector<double>& weights() const { return weights_; }
  std::vector<double>& bias() { return bias_; }
  const std::vector<double>& bias() const { return bias_; }

  double& w(std::size_t c, std::size_t j) { return weights_[c * dim_ + j]; }
  double w(std::size_t c, std::size_t j) const { return weights_[c * dim_ + j]; }

  bool finite() const {
    auto ok = [](double v) { return std::isfinite(v); };
    return std::all_of(weights_.begin(), weights_.end(), ok) &&
           std::all_of(bias_.begin(), bias_.end(), ok);
  }

  std::vector<double> logits(const SparseVector& x) const {
    if (x.dim != dim_) {
      throw ValidationError("input dimension " + std::to_string(x.dim) +
                            " does not match model dimension " + std::to_string(dim_));
    }
    std::vector<double> z = bias_;
    for (std::size_t c = 0; c < z.size(); ++c) {
      const double* row = weights_.data() + c * dim_;
      for (std::size_t k = 0; k < x.indices.size(); ++k) {
        z[c] += row[x.indices[k]] * x.values[k];
      }
    }
    return z;
  }

  friend bool operator==(const LinearModel&, const LinearModel&) = default;

 private:
  Mode mode_ = Mode::kSoftmax;
  std::vector<std::string> class_names_;
  std::size_t dim_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<double> weights_;
  std::vector<double> bias_;
};

namespace detail {

inline double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline std::vector<double> log_softmax(const std::vector<double>& z) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  const double lse = m + std::log(s);
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] - lse;
  return out;
}

inline const double kLogFloor = std::log(kProbFloor);

// Loss of one example and its derivative with respect to the logits.
inline double example_loss(const LinearModel& model, const std::vector<double>& z,
                           const Example& ex, const ClassWeights& weights,
                           double gamma, std::vector<double>* dz) {
  const std::size_t c_count = z.size();
  double loss = 0.0;
  if (dz) dz->assign(c_count, 0.0);

  if (model.mode() == Mode::kSoftmax) {
    if (ex.label < 0 || static_cast<std::size_t>(ex.label) >= c_count) {
      throw ValidationError("label " + std::to_string(ex.label) + " out of range");
    }
    const auto y = static_cast<std::size_t>(ex.label);
    const auto logp = log_softmax(z);
    const double p = std::exp(logp[y]);
    const double q = -std::expm1(logp[y]);
    const bool clamped = logp[y] < kLogFloor;
    const double log_p = clamped ? kLogFloor : logp[y];
    const double focal = gamma == 0.0 ? 1.0 : std::pow(q, gamma);
    const double wy = weights.weights[y];
    loss = -wy * focal * log_p;
    if (dz) {
      // d loss / dp * p, then chain through dp/dz_j = p (delta_jy - p_j).
      double dfocal = 0.0;
      if (gamma != 0.0 && q > 0.0) dfocal = gamma * std::pow(q, gamma - 1.0) * log_p * p;
      const double coef = -wy * (-dfocal + (clamped ? 0.0 : focal));
      for (std::size_t j = 0; j < c_count; ++j) {
        const double pj = std::exp(logp[j]);
        (*dz)[j] = coef * ((j == y ? 1.0 : 0.0) - pj);
      }
    }
    return loss;
  }

  if (ex.labels.size() != c_count) {
    throw ValidationError("multi-label target has wrong width");
  }
  for (std::size_t k = 0; k < c_count; ++k) {
    const double p = sigmoid(z[k]);
    const double q = sigmoid(-z[k]);
    if (ex.labels[k]) {
      const double raw = -softplus(-z[k]);
      const bool clamped = raw < kLogFloor;
      const double lp = clamped ? kLogFloor : raw;
      const double focal = gamma == 0.0 ? 1.0 : std::pow(q, gamma);
      const double wk = weights.weights[k];
      loss += -wk * focal * lp;
      if (dz) {
        (*dz)[k] = -wk * (-gamma * focal * p * lp + (clamped ? 0.0 : focal * q));
      }
    } else {
      const double raw = -softplus(z[k]);
      const bool clamped = raw < kLogFloor;
      const double lq = clamped ? kLogFloor : raw;
      const double focal = gamma == 0.0 ? 1.0 : std::pow(p, gamma);
      loss += -focal * lq;
      if (dz) {
        (*dz)[k] = -(gamma * focal * q * lq - (clamped ? 0.0 : focal * p));
      }
    }
  }
  return loss;
}

inline void check_batch(const LinearModel& model, const std::vector<Example>& batch,
                        const ClassWeights& weights) {
  if (batch.empty()) throw ValidationError("batch must be non-empty");
  if (weights.size() != model.num_classes()) {
    throw ValidationError("class weights length " + std::to_string(weights.size()) +
                          " differs from class count " +
                          std::to_string(model.num_classes()));
  }
}

}  // namespace detail

inline std::vector<double> forward(const LinearModel& model, const SparseVector& x) {
  const auto z = model.logits(x);
  if (model.mode() == Mode::kSoftmax) {
    auto logp = detail::log_softmax(z);
    for (double& v : logp) v = std::exp(v);
    return logp;
  }
  std::vector<double> p(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) p[k] = detail::sigmoid(z[k]);
  return p;
}

inline double l2_penalty(const LinearModel& model, double l2) {
  if (l2 == 0.0) return 0.0;
  double s = 0.0;
  for (double v : model.weights()) s += v * v;
  return 0.5 * l2 * s;
}

inline double weighted_loss(const LinearModel& model, const std::vector<Example>& batch,
                            const ClassWeights& weights, const LossOptions& opts = {}) {
  detail::check_batch(model, batch, weights);
  double total = 0.0;
  for (const auto& ex : batch) {
    total += detail::example_loss(model, model.logits(ex.x), ex, weights,
                                  opts.focal_gamma, nullptr);
  }
  return total / static_cast<double>(batch.size()) + l2_penalty(model, opts.l2);
}

struct Gradient {
  std::vector<double> weights;  // row-major C x V
  std::vector<double> bias;

  double norm() const {
    double s = 0.0;
    for (double v : weights) s += v * v;
    for (double v : bias) s += v * v;
    return std::sqrt(s);
  }
};

// Loss and exact gradient in one pass.
inline double loss_and_gradient(const LinearModel& model, const std::vector<Example>& batch,
                                const ClassWeights& weights, const LossOptions& opts,
                                Gradient& grad) {
  detail::check_batch(model, batch, weights);
  const std::size_t c_count = model.num_classes();
  const std::size_t dim = model.dim();
  grad.weights.assign(c_count * dim, 0.0);
  grad.bias.assign(c_count, 0.0);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  std::vector<double> dz;
  for (const auto& ex : batch) {
    const auto z = model.logits(ex.x);
    total += detail::example_loss(model, z, ex, weights, opts.focal_gamma, &dz);
    for (std::size_t c = 0; c < c_count; ++c) {
      const double g = dz[c] * inv_n;
      if (g == 0.0) continue;
      grad.bias[c] += g;
      double* row = grad.weights.data() + c * dim;
      for (std::size_t k = 0; k < ex.x.indices.size(); ++k) {
        row[ex.x.indices[k]] += g * ex.x.values[k];
      }
    }
  }
  if (opts.l2 != 0.0) {
    const auto& w = model.weights();
    for (std::size_t i = 0; i < w.size(); ++i) grad.weights[i] += opts.l2 * w[i];
  }
  return total * inv_n + l2_penalty(model, opts.l2);
}

inline Gradient gradient(const LinearModel& model, const std::vector<Example>& batch,
                         const ClassWeights& weights, const LossOptions& opts = {}) {
  Gradient g;
  loss_and_gradient(model, batch, weights, opts, g);
  return g;
}

struct Prediction {
  int label = 0;                      // argmax, ties to the lowest index
  std::vector<std::uint8_t> labels;   // multi-label: prob >= threshold
  std::vector<double> probs;
};

inline Prediction decide(Mode mode, std::vector<double> probs, double threshold) {
  Prediction p;
  p.label = static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
  if (mode == Mode::kMultilabelSigmoid) {
    p.labels.reserve(probs.size());
    for (double v : probs) p.labels.push_back(v >= threshold ? 1 : 0);
  }
  p.probs = std::move(probs);
  return p;
}

inline Prediction predict(const LinearModel& model, const SparseVector& x,
                          double threshold = 0.5) {
  return decide(model.mode(), forward(model, x), threshold);
}

// Macro-F1 used for early stopping: class macro-F1 in softmax mode, label
// macro-F1 at threshold 0.5 in multi-label mode.
inline double dev_macro_f1(const LinearModel& model, const std::vector<Example>& dev) {
  if (model.mode() == Mode::kSoftmax) {
    std::vector<int> preds, golds;
    for (const auto& ex : dev) {
      preds.push_back(predict(model, ex.x).label);
      golds.push_back(ex.label);
    }
    return metrics::classification_report(
               metrics::confusion(preds, golds, model.num_classes()))
        .macro_f1;
  }
  std::vector<std::vector<std::uint8_t>> preds, golds;
  for (const auto& ex : dev) {
    preds.push_back(predict(model, ex.x).labels);
    golds.push_back(ex.labels);
  }
  return metrics::multilabel_report(preds, golds).macro_f1;
}

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  std::optional<double> dev_macro_f1;
};

struct TrainResult {
  LinearModel model;
  std::vector<EpochLog> log;
  int best_epoch = 0;  // 0 = initial parameters
};

// Mini-batch gradient descent from W = 0, b = 0. The training order is
// reshuffled every epoch by an engine seeded with config.seed. With a
// non-empty dev set the parameters of the best dev macro-F1 epoch are
// returned.
inline TrainResult train(const std::vector<Example>& train_data,
                         const std::vector<Example>& dev_data, Mode mode,
                         const std::vector<std::string>& class_names, std::size_t dim,
                         const TrainConfig& config, const ClassWeights& weights) {
  config.check();
  TrainResult result{LinearModel(mode, class_names, dim, config.seed), {}, 0};
  if (config.epochs == 0) return result;
  if (train_data.empty()) throw ValidationError("training set is empty");

  LinearModel model = result.model;
  const LossOptions opts = LossOptions::from(config);
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(train_data.size());
  std::iota(order.begin(), order.end(), 0);

  double best_f1 = -1.0;
  int since_best = 0;
  std::vector<Example> batch;
  Gradient grad;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(train_data[order[i]]);
      const double loss = loss_and_gradient(model, batch, weights, opts, grad);
      if (!std::isfinite(loss)) {
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) +
                            ", batch " + std::to_string(batches) +
                            "; lower learning_rate (currently " +
                            std::to_string(config.learning_rate) + ")");
      }
      auto& w = model.weights();
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= config.learning_rate * grad.weights[i];
      auto& b = model.bias();
      for (std::size_t i = 0; i < b.size(); ++i) b[i] -= config.learning_rate * grad.bias[i];
      epoch_loss += loss;
      ++batches;
    }
    if (!model.finite()) {
      throw TrainingError("parameters diverged at epoch " + std::to_string(epoch));
    }
    EpochLog entry{epoch, epoch_loss / static_cast<double>(batches), std::nullopt};
    if (!dev_data.empty()) {
      const double f1 = dev_macro_f1(model, dev_data);
      entry.dev_macro_f1 = f1;
      if (f1 > best_f1) {
        best_f1 = f1;
        result.model = model;
        result.best_epoch = epoch;
        since_best = 0;
      } else if (config.early_stop_patience > 0 &&
                 ++since_best >= config.early_stop_patience) {
        result.log.push_back(entry);
        break;
      }
    }
    result.log.push_back(entry);
  }
  if (dev_data.empty()) {
    result.model = model;
    result.best_epoch = config.epochs;
  }
  return result;
}

inline json to_json(const LinearModel& m, const TrainConfig& config) {
  return {{"version", kModelVersion},
          {"mode", std::string(to_string(m.mode()))},
          {"class_names", m.class_names()},
          {"dim", m.dim()},
          {"seed", m.seed()},
          {"W", m.weights()},
          {"b", m.bias()},
          {"train_config", to_json(config)}};
}

struct LoadedModel {
  LinearModel model;
  TrainConfig config;
};

inline LoadedModel from_json(const json& j) {
  try {
    if (j.at("version").get<int>() != kModelVersion) {
      throw ParseError("unsupported model version " + j.at("version").dump());
    }
    LinearModel m(parse_mode(j.at("mode").get<std::string>()),
                  j.at("class_names").get<std::vector<std::string>>(),
                  j.at("dim").get<std::size_t>(), j.value("seed", std::uint64_t{0}));
    auto w = j.at("W").get<std::vector<double>>();
    auto b = j.at("b").get<std::vector<double>>();
    if (w.size() != m.weights().size() || b.size() != m.bias().size()) {
      throw ParseError("model parameter sizes do not match dimensions");
    }
    m.weights() = std::move(w);
    m.bias() = std::move(b);
    if (!m.finite()) throw ParseError("model parameters must be finite");
    return {std::move(m), train_config_from_json(j.value("train_config", json::object()))};
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad model file: ") + e.what());
  }
}

inline void save(const LinearModel& m, const TrainConfig& config, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << to_json(m, config).dump() << '\n';
}

inline LoadedModel load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed model JSON: ") + e.what());
  }
}

}  // namespace healthtext::linear
