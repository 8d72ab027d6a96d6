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

// Evaluation: confusion matrices, per-class / macro / micro P-R-F1,
// multi-label scoring, entity-level F1 (exact and overlap matching), and
// ROUGE-1 / ROUGE-L for evidence spans.
//
// Any zero denominator yields 0 for that precision, recall or F1.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "healthtext/corpus_types.hpp"
#include "healthtext/error.hpp"
#include "healthtext/textprep.hpp"

namespace healthtext::metrics {

struct ConfusionMatrix {
  std::size_t num_classes = 0;
  std::vector<std::size_t> counts;  // row = gold, column = predicted

  std::size_t at(std::size_t gold, std::size_t pred) const {
    return counts[gold * num_classes + pred];
  }
  std::size_t total() const {
    std::size_t t = 0;
    for (auto c : counts) t += c;
    return t;
  }
  std::size_t trace() const {
    std::size_t t = 0;
    for (std::size_t c = 0; c < num_classes; ++c) t += at(c, c);
    return t;
  }
};

inline ConfusionMatrix confusion(const std::vector<int>& preds, const std::vector<int>& golds,
                                 std::size_t num_classes) {
  if (preds.size() != golds.size()) {
    throw ValidationError("predictions (" + std::to_string(preds.size()) + ") and golds (" +
                          std::to_string(golds.size()) + ") differ in length");
  }
  ConfusionMatrix m{num_classes, std::vector<std::size_t>(num_classes * num_classes, 0)};
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int p = preds[i];
    const int g = golds[i];
    if (p < 0 || g < 0 || static_cast<std::size_t>(p) >= num_classes ||
        static_cast<std::size_t>(g) >= num_classes) {
      throw ValidationError("label out of range at item " + std::to_string(i));
    }
    ++m.counts[static_cast<std::size_t>(g) * num_classes + static_cast<std::size_t>(p)];
  }
  return m;
}

struct Score {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline double safe_div(double num, double den) { return den > 0.0 ? num / den : 0.0; }

inline double f1_of(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

inline Score score_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  Score s;
  s.precision = safe_div(static_cast<double>(tp), static_cast<double>(tp + fp));
  s.recall = safe_div(static_cast<double>(tp), static_cast<double>(tp + fn));
  s.f1 = f1_of(s.precision, s.recall);
  return s;
}

struct ClassScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t support = 0;  // gold count
  bool absent = false;      // never gold and never predicted
};

struct EvalReport {
  std::vector<ClassScore> per_class;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double micro_precision = 0.0;
  double micro_recall = 0.0;
  double micro_f1 = 0.0;
  double accuracy = 0.0;
  std::size_t total = 0;
};

namespace detail {

inline ClassScore make_class_score(std::size_t tp, std::size_t fp, std::size_t fn) {
  const Score s = score_counts(tp, fp, fn);
  ClassScore c;
  c.precision = s.precision;
  c.recall = s.recall;
  c.f1 = s.f1;
  c.tp = tp;
  c.fp = fp;
  c.fn = fn;
  c.support = tp + fn;
  c.absent = tp + fp + fn == 0;
  return c;
}

// Macro over every class, including absent ones; micro from pooled counts.
inline void aggregate(EvalReport& r) {
  std::size_t tp = 0, fp = 0, fn = 0;
  double sp = 0.0, sr = 0.0, sf = 0.0;
  for (const auto& c : r.per_class) {
    tp += c.tp;
    fp += c.fp;
    fn += c.fn;
    sp += c.precision;
    sr += c.recall;
    sf += c.f1;
  }
  const double n = static_cast<double>(r.per_class.size());
  r.macro_precision = safe_div(sp, n);
  r.macro_recall = safe_div(sr, n);
  r.macro_f1 = safe_div(sf, n);
  const Score micro = score_counts(tp, fp, fn);
  r.micro_precision = micro.precision;
  r.micro_recall = micro.recall;
  r.micro_f1 = micro.f1;
}

}  // namespace detail

inline EvalReport classification_report(const ConfusionMatrix& m) {
  EvalReport r;
  const std::size_t c_count = m.num_classes;
  for (std::size_t c = 0; c < c_count; ++c) {
    std::size_t row = 0, col = 0;
    for (std::size_t k = 0; k < c_count; ++k) {
      row += m.at(c, k);
      col += m.at(k, c);
    }
    const std::size_t tp = m.at(c, c);
    r.per_class.push_back(detail::make_class_score(tp, col - tp, row - tp));
  }
  detail::aggregate(r);
  r.total = m.total();
  r.accuracy = safe_div(static_cast<double>(m.trace()), static_cast<double>(r.total));
  return r;
}

// Each label is its own binary task (positive class scored). Accuracy is
// exact-match over whole label vectors.
inline EvalReport multilabel_report(const std::vector<std::vector<std::uint8_t>>& preds,
                                    const std::vector<std::vector<std::uint8_t>>& golds) {
  if (preds.size() != golds.size()) {
    throw ValidationError("prediction and gold matrices differ in row count");
  }
  const std::size_t width = golds.empty() ? 0 : golds.front().size();
  std::vector<std::size_t> tp(width, 0), fp(width, 0), fn(width, 0);
  std::size_t exact = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].size() != width || golds[i].size() != width) {
      throw ValidationError("label vectors differ in width at row " + std::to_string(i));
    }
    bool same = true;
    for (std::size_t k = 0; k < width; ++k) {
      const bool p = preds[i][k] != 0;
      const bool g = golds[i][k] != 0;
      if (p && g) ++tp[k];
      if (p && !g) ++fp[k];
      if (!p && g) ++fn[k];
      same = same && p == g;
    }
    exact += same ? 1 : 0;
  }
  EvalReport r;
  for (std::size_t k = 0; k < width; ++k) {
    r.per_class.push_back(detail::make_class_score(tp[k], fp[k], fn[k]));
  }
  detail::aggregate(r);
  r.total = preds.size();
  r.accuracy = safe_div(static_cast<double>(exact), static_cast<double>(r.total));
  return r;
}

// ---------------------------------------------------------------------------
// Entity-level scoring

enum class MatchMode { kExact, kOverlap };

struct EntityReport {
  std::array<ClassScore, kNumEntityTypes> per_type{};
  double avg_f1 = 0.0;         // unweighted mean over the six types
  double avg_precision = 0.0;
  double avg_recall = 0.0;
  Score micro;
};

namespace detail {

using GroupKey = std::tuple<std::string, std::size_t, int>;

inline GroupKey group_of(const EntityMention& m) {
  return {m.doc_id, m.sentence, static_cast<int>(m.type)};
}

inline std::size_t overlap(const EntityMention& a, const EntityMention& b) {
  const auto lo = std::max(a.start, b.start);
  const auto hi = std::min(a.end, b.end);
  return hi > lo ? hi - lo : 0;
}

// Greedy one-to-one matching by descending overlap; ties by gold index then
// prediction index. Returns the number of matched pairs.
inline std::size_t greedy_overlap_matches(const std::vector<const EntityMention*>& pred,
                                          const std::vector<const EntityMention*>& gold) {
  struct Pair {
    std::size_t overlap, g, p;
  };
  std::vector<Pair> pairs;
  for (std::size_t g = 0; g < gold.size(); ++g) {
    for (std::size_t p = 0; p < pred.size(); ++p) {
      const auto ov = overlap(*gold[g], *pred[p]);
      if (ov >= 1) pairs.push_back({ov, g, p});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.overlap != b.overlap) return a.overlap > b.overlap;
    if (a.g != b.g) return a.g < b.g;
    return a.p < b.p;
  });
  std::vector<bool> gold_used(gold.size(), false), pred_used(pred.size(), false);
  std::size_t matched = 0;
  for (const auto& pr : pairs) {
    if (gold_used[pr.g] || pred_used[pr.p]) continue;
    gold_used[pr.g] = pred_used[pr.p] = true;
    ++matched;
  }
  return matched;
}

}  // namespace detail

inline EntityReport entity_f1(const std::vector<EntityMention>& pred,
                              const std::vector<EntityMention>& gold, MatchMode mode) {
  std::array<std::size_t, kNumEntityTypes> tp{}, n_pred{}, n_gold{};
  for (const auto& m : pred) ++n_pred[static_cast<std::size_t>(m.type)];
  for (const auto& m : gold) ++n_gold[static_cast<std::size_t>(m.type)];

  std::map<detail::GroupKey, std::pair<std::vector<const EntityMention*>,
                                       std::vector<const EntityMention*>>>
      groups;
  for (const auto& m : pred) groups[detail::group_of(m)].first.push_back(&m);
  for (const auto& m : gold) groups[detail::group_of(m)].second.push_back(&m);

  for (const auto& [key, members] : groups) {
    const auto& [ps, gs] = members;
    const auto type = static_cast<std::size_t>(std::get<2>(key));
    if (mode == MatchMode::kExact) {
      std::map<std::pair<std::size_t, std::size_t>, std::size_t> remaining;
      for (const auto* g : gs) ++remaining[{g->start, g->end}];
      for (const auto* p : ps) {
        auto it = remaining.find({p->start, p->end});
        if (it != remaining.end() && it->second > 0) {
          --it->second;
          ++tp[type];
        }
      }
    } else {
      tp[type] += detail::greedy_overlap_matches(ps, gs);
    }
  }

  EntityReport r;
  std::size_t all_tp = 0, all_fp = 0, all_fn = 0;
  double sp = 0.0, sr = 0.0, sf = 0.0;
  for (std::size_t t = 0; t < kNumEntityTypes; ++t) {
    r.per_type[t] = detail::make_class_score(tp[t], n_pred[t] - tp[t], n_gold[t] - tp[t]);
    all_tp += tp[t];
    all_fp += n_pred[t] - tp[t];
    all_fn += n_gold[t] - tp[t];
    sp += r.per_type[t].precision;
    sr += r.per_type[t].recall;
    sf += r.per_type[t].f1;
  }
  const double n = static_cast<double>(kNumEntityTypes);
  r.avg_precision = sp / n;
  r.avg_recall = sr / n;
  r.avg_f1 = sf / n;
  r.micro = score_counts(all_tp, all_fp, all_fn);
  return r;
}

// ---------------------------------------------------------------------------
// ROUGE

inline std::vector<std::string> rouge_tokens(std::string_view text) {
  return textprep::token_texts(textprep::tokenize(textprep::normalize(text, {})));
}

inline Score rouge1_tokens(const std::vector<std::string>& pred,
                           const std::vector<std::string>& gold) {
  std::unordered_map<std::string, std::size_t> gold_counts;
  for (const auto& t : gold) ++gold_counts[t];
  std::size_t overlap = 0;
  for (const auto& t : pred) {
    auto it = gold_counts.find(t);
    if (it != gold_counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  Score s;
  s.precision = safe_div(static_cast<double>(overlap), static_cast<double>(pred.size()));
  s.recall = safe_div(static_cast<double>(overlap), static_cast<double>(gold.size()));
  s.f1 = f1_of(s.precision, s.recall);
  return s;
}

inline std::size_t lcs_length(const std::vector<std::string>& a,
                              const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline Score rougeL_tokens(const std::vector<std::string>& pred,
                           const std::vector<std::string>& gold) {
  const auto lcs = static_cast<double>(lcs_length(pred, gold));
  Score s;
  s.precision = safe_div(lcs, static_cast<double>(pred.size()));
  s.recall = safe_div(lcs, static_cast<double>(gold.size()));
  s.f1 = f1_of(s.precision, s.recall);
  return s;
}

inline Score rouge1(std::string_view pred, std::string_view gold) {
  return rouge1_tokens(rouge_tokens(pred), rouge_tokens(gold));
}

inline Score rougeL(std::string_view pred, std::string_view gold) {
  return rougeL_tokens(rouge_tokens(pred), rouge_tokens(gold));
}

struct EvidenceScore {
  std::size_t gold_spans = 0;
  std::size_t pred_spans = 0;
  Score rouge1;        // means over gold spans of the best match
  double rougeL_f1 = 0.0;
};

struct EvidenceReport {
  std::map<int, EvidenceScore> per_rule;
  EvidenceScore overall;
};

// Within each (document, rule) every gold span takes the prediction with the
// highest ROUGE-1 F1 (first on ties); ROUGE-L is read off that same pair.
// Gold spans without a candidate score 0.
inline EvidenceReport evidence_score(const std::vector<EvidenceSpan>& pred,
                                     const std::vector<EvidenceSpan>& gold) {
  using Key = std::pair<std::string, int>;
  std::map<Key, std::vector<std::vector<std::string>>> candidates;
  for (const auto& p : pred) candidates[{p.doc_id, p.rule_id}].push_back(rouge_tokens(p.text));

  struct Sums {
    double p = 0, r = 0, f = 0, l = 0;
  };
  std::map<int, Sums> rule_sums;
  Sums all;
  EvidenceReport report;
  for (const auto& p : pred) {
    ++report.per_rule[p.rule_id].pred_spans;
    ++report.overall.pred_spans;
  }
  for (const auto& g : gold) {
    const auto gold_tokens = rouge_tokens(g.text);
    Score best;
    double best_l = 0.0;
    bool found = false;
    auto it = candidates.find({g.doc_id, g.rule_id});
    if (it != candidates.end()) {
      for (const auto& cand : it->second) {
        const Score s = rouge1_tokens(cand, gold_tokens);
        if (!found || s.f1 > best.f1) {
          best = s;
          best_l = rougeL_tokens(cand, gold_tokens).f1;
          found = true;
        }
      }
    }
    auto& rs = rule_sums[g.rule_id];
    for (Sums* s : {&rs, &all}) {
      s->p += best.precision;
      s->r += best.recall;
      s->f += best.f1;
      s->l += best_l;
    }
    ++report.per_rule[g.rule_id].gold_spans;
    ++report.overall.gold_spans;
  }
  auto finish = [](EvidenceScore& e, const Sums& s) {
    const auto n = static_cast<double>(e.gold_spans);
    e.rouge1.precision = safe_div(s.p, n);
    e.rouge1.recall = safe_div(s.r, n);
    e.rouge1.f1 = safe_div(s.f, n);
    e.rougeL_f1 = safe_div(s.l, n);
  };
  for (auto& [rule, e] : report.per_rule) finish(e, rule_sums[rule]);
  finish(report.overall, all);
  return report;
}

}  // namespace healthtext::metrics
