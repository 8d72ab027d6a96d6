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

// Declarative keyword / regex extraction. An entity rule set maps each
// sentence x to E_type(x), the spans of x matched by any pattern of that
// type; an evidence rule set maps document hits to sentence-level evidence
// spans tagged with one of the five insomnia rule ids.
//
// Rule file:
//   {"mode": "entity" | "evidence",
//    "overlap_policy": "longest_match" | "first_match",
//    "patterns": [{"id": str, "type": "Org|Prdt|Cau|Dis|NumAffected|Loc"
//                  | "rule_id": 0-4, "kind": "keyword" | "regex",
//                  "pattern": str, "case_insensitive": bool, "window": int?}]}
//
// Matching runs on UTF-32 text so offsets are scalar-value indices. Keywords
// are literal and must start and end on token boundaries; regexes are
// ECMAScript and unanchored.

#include <algorithm>
#include <array>
#include <cstddef>
#include <fstream>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "healthtext/corpus_types.hpp"
#include "healthtext/error.hpp"
#include "healthtext/textprep.hpp"
#include "healthtext/unicode.hpp"

namespace healthtext::rulex {

using nlohmann::json;

enum class RuleMode { kEntity, kEvidence };
enum class OverlapPolicy { kLongestMatch, kFirstMatch };
enum class PatternKind { kKeyword, kRegex };

struct RulePattern {
  std::string id;
  std::optional<EntityType> entity_type;  // entity mode
  std::optional<int> rule_id;             // evidence mode
  PatternKind kind = PatternKind::kKeyword;
  std::string pattern;
  bool case_insensitive = true;
  std::optional<std::size_t> window;
};

class RuleError : public Error {
 public:
  RuleError(const std::string& rule_id, std::size_t position, const std::string& what)
      : Error("rule '" + rule_id + "' at position " + std::to_string(position) + ": " + what),
        rule_id_(rule_id),
        position_(position) {}
  const std::string& rule_id() const { return rule_id_; }
  std::size_t position() const { return position_; }

 private:
  std::string rule_id_;
  std::size_t position_;
};

namespace detail {

inline std::wstring escape_literal(std::u32string_view s) {
  static const std::u32string_view special = U"\\^$.|?*+()[]{}/";
  std::wstring out;
  for (char32_t c : s) {
    if (special.find(c) != std::u32string_view::npos) out.push_back(L'\\');
    out.push_back(static_cast<wchar_t>(c));
  }
  return out;
}

inline bool is_incomplete(std::regex_constants::error_type code) {
  using namespace std::regex_constants;
  return code == error_paren || code == error_brack || code == error_brace ||
         code == error_escape;
}

inline std::wregex build(const std::wstring& source, bool icase) {
  auto flags = std::regex_constants::ECMAScript;
  if (icase) flags |= std::regex_constants::icase;
  return std::wregex(source, flags);
}

// Offset of the first prefix that fails for a reason other than being
// unterminated; the pattern length when only the whole pattern is bad.
inline std::size_t error_position(const std::wstring& source, bool icase) {
  for (std::size_t len = 1; len < source.size(); ++len) {
    try {
      build(source.substr(0, len), icase);
    } catch (const std::regex_error& e) {
      if (!is_incomplete(e.code())) return len - 1;
    }
  }
  return source.size();
}

inline std::string regex_error_text(const std::regex_error& e) {
  using namespace std::regex_constants;
  switch (e.code()) {
    case error_paren: return "unbalanced parenthesis";
    case error_brack: return "unbalanced bracket";
    case error_brace: return "unbalanced brace";
    case error_escape: return "invalid escape";
    case error_range: return "invalid character range";
    case error_badrepeat: return "repeat without operand";
    case error_badbrace: return "invalid repeat count";
    case error_collate: return "invalid collating element";
    case error_ctype: return "invalid character class";
    case error_backref: return "invalid back reference";
    default: return e.what();
  }
}

}  // namespace detail

class RuleSet {
 public:
  RuleSet() = default;
  RuleSet(RuleMode mode, OverlapPolicy policy, std::vector<RulePattern> patterns)
      : mode_(mode), policy_(policy), patterns_(std::move(patterns)) {
    std::set<std::string> ids;
    for (const auto& p : patterns_) {
      if (!ids.insert(p.id).second) throw RuleError(p.id, 0, "duplicate pattern id");
      if (mode_ == RuleMode::kEntity && !p.entity_type) {
        throw RuleError(p.id, 0, "entity rules need a 'type'");
      }
      if (mode_ == RuleMode::kEvidence &&
          (!p.rule_id || *p.rule_id < 0 || *p.rule_id >= static_cast<int>(kNumRules))) {
        throw RuleError(p.id, 0, "evidence rules need a 'rule_id' in [0,4]");
      }
      if (p.pattern.empty()) throw RuleError(p.id, 0, "pattern must be non-empty");
      const auto cps = unicode::decode(p.pattern);
      const std::wstring source = p.kind == PatternKind::kKeyword
                                      ? detail::escape_literal(cps)
                                      : unicode::to_wide(cps);
      try {
        compiled_.push_back(detail::build(source, p.case_insensitive));
      } catch (const std::regex_error& e) {
        throw RuleError(p.id, detail::error_position(source, p.case_insensitive),
                        detail::regex_error_text(e));
      }
    }
  }

  RuleMode mode() const { return mode_; }
  OverlapPolicy overlap_policy() const { return policy_; }
  const std::vector<RulePattern>& patterns() const { return patterns_; }
  const std::wregex& compiled(std::size_t i) const { return compiled_[i]; }
  bool empty() const { return patterns_.empty(); }

  std::array<std::string, kNumRules> rule_names = {"rule_0", "rule_1", "rule_2", "rule_3",
                                                   "rule_4"};

 private:
  RuleMode mode_ = RuleMode::kEntity;
  OverlapPolicy policy_ = OverlapPolicy::kLongestMatch;
  std::vector<RulePattern> patterns_;
  std::vector<std::wregex> compiled_;
};

inline RuleSet compile_rules(const json& j) {
  try {
    const std::string mode = j.value("mode", "entity");
    RuleMode rm;
    if (mode == "entity") {
      rm = RuleMode::kEntity;
    } else if (mode == "evidence") {
      rm = RuleMode::kEvidence;
    } else {
      throw ParseError("unknown rule mode '" + mode + "'");
    }
    const std::string policy = j.value("overlap_policy", "longest_match");
    OverlapPolicy op;
    if (policy == "longest_match") {
      op = OverlapPolicy::kLongestMatch;
    } else if (policy == "first_match") {
      op = OverlapPolicy::kFirstMatch;
    } else {
      throw ParseError("unknown overlap policy '" + policy + "'");
    }
    std::vector<RulePattern> patterns;
    for (const auto& pj : j.value("patterns", json::array())) {
      RulePattern p;
      p.id = pj.at("id").get<std::string>();
      if (pj.contains("type")) p.entity_type = parse_entity_type(pj["type"].get<std::string>());
      if (pj.contains("rule_id")) p.rule_id = pj["rule_id"].get<int>();
      const std::string kind = pj.value("kind", "keyword");
      if (kind == "keyword") {
        p.kind = PatternKind::kKeyword;
      } else if (kind == "regex") {
        p.kind = PatternKind::kRegex;
      } else {
        throw RuleError(p.id, 0, "unknown kind '" + kind + "'");
      }
      p.pattern = pj.at("pattern").get<std::string>();
      p.case_insensitive = pj.value("case_insensitive", true);
      if (pj.contains("window") && !pj["window"].is_null()) {
        p.window = pj["window"].get<std::size_t>();
      }
      patterns.push_back(std::move(p));
    }
    RuleSet rs(rm, op, std::move(patterns));
    if (j.contains("rule_names")) {
      const auto names = j["rule_names"].get<std::vector<std::string>>();
      for (std::size_t i = 0; i < std::min(names.size(), kNumRules); ++i) {
        rs.rule_names[i] = names[i];
      }
    }
    return rs;
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad rule file: ") + e.what());
  }
}

inline RuleSet compile_rules(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open rule file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed rule file: ") + e.what());
  }
  return compile_rules(j);
}

struct Hit {
  std::size_t start = 0;
  std::size_t end = 0;
  std::size_t pattern = 0;
};

// Every match of pattern `i` in `text`. A rejected keyword hit (not on token
// boundaries) restarts the search one character later.
inline std::vector<Hit> find_all(const RuleSet& rules, std::size_t i, const std::wstring& text) {
  std::vector<Hit> out;
  const auto& re = rules.compiled(i);
  const bool keyword = rules.patterns()[i].kind == PatternKind::kKeyword;
  std::size_t pos = 0;
  std::wsmatch m;
  while (pos <= text.size()) {
    auto flags = std::regex_constants::match_default;
    if (pos > 0) flags |= std::regex_constants::match_prev_avail;
    if (!std::regex_search(text.cbegin() + static_cast<std::ptrdiff_t>(pos), text.cend(), m, re,
                           flags)) {
      break;
    }
    const std::size_t start = pos + static_cast<std::size_t>(m.position(0));
    const std::size_t end = start + static_cast<std::size_t>(m.length(0));
    if (end == start) {
      pos = start + 1;
      continue;
    }
    if (keyword) {
      const bool left_ok = start == 0 || !unicode::is_alnum(text[start - 1]) ||
                           !unicode::is_alnum(text[start]);
      const bool right_ok = end == text.size() || !unicode::is_alnum(text[end]) ||
                            !unicode::is_alnum(text[end - 1]);
      if (!left_ok || !right_ok) {
        pos = start + 1;
        continue;
      }
    }
    out.push_back({start, end, i});
    pos = end;
  }
  return out;
}

namespace detail {

inline bool overlaps(const Hit& a, const Hit& b) { return a.start < b.end && b.start < a.end; }

inline std::vector<Hit> resolve(std::vector<Hit> hits, OverlapPolicy policy) {
  if (policy == OverlapPolicy::kLongestMatch) {
    std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
      const auto la = a.end - a.start, lb = b.end - b.start;
      return std::tie(lb, a.start, a.pattern) < std::tie(la, b.start, b.pattern);
    });
  } else {
    std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
      const auto la = a.end - a.start, lb = b.end - b.start;
      return std::tie(a.start, a.pattern, lb) < std::tie(b.start, b.pattern, la);
    });
  }
  std::vector<Hit> kept;
  for (const auto& h : hits) {
    if (std::none_of(kept.begin(), kept.end(), [&](const Hit& k) { return overlaps(h, k); })) {
      kept.push_back(h);
    }
  }
  return kept;
}

}  // namespace detail

// Mentions in `text` (a sentence). Offsets are relative to `text`; doc_id and
// sentence index are left for the caller unless a Sentence is passed.
inline std::vector<EntityMention> extract_entities(const RuleSet& rules, std::string_view text) {
  if (rules.mode() != RuleMode::kEntity) throw ValidationError("not an entity rule set");
  const auto cps = unicode::decode(text);
  const auto wide = unicode::to_wide(cps);
  std::array<std::vector<Hit>, kNumEntityTypes> by_type;
  for (std::size_t i = 0; i < rules.patterns().size(); ++i) {
    const auto t = static_cast<std::size_t>(*rules.patterns()[i].entity_type);
    auto hits = find_all(rules, i, wide);
    by_type[t].insert(by_type[t].end(), hits.begin(), hits.end());
  }
  std::vector<EntityMention> out;
  for (std::size_t t = 0; t < kNumEntityTypes; ++t) {
    for (const auto& h : detail::resolve(std::move(by_type[t]), rules.overlap_policy())) {
      EntityMention m;
      m.type = static_cast<EntityType>(t);
      m.start = h.start;
      m.end = h.end;
      m.text = unicode::encode(std::u32string_view(cps).substr(h.start, h.end - h.start));
      out.push_back(std::move(m));
    }
  }
  std::sort(out.begin(), out.end(), [](const EntityMention& a, const EntityMention& b) {
    return std::tie(a.start, a.end, a.type) < std::tie(b.start, b.end, b.type);
  });
  return out;
}

inline std::vector<EntityMention> extract_entities(const RuleSet& rules, const Sentence& sentence) {
  auto out = extract_entities(rules, std::string_view(sentence.text));
  for (auto& m : out) {
    m.doc_id = sentence.doc_id;
    m.sentence = sentence.index;
  }
  return out;
}

// Each hit grows to the sentences it touches, then is trimmed to `window`
// characters of context on each side when the pattern sets one. Identical
// (rule_id, start, end) spans are reported once.
inline std::vector<EvidenceSpan> extract_evidence(const RuleSet& rules, const std::string& doc_id,
                                                  std::string_view text,
                                                  const std::vector<Sentence>& sentences) {
  if (rules.mode() != RuleMode::kEvidence) throw ValidationError("not an evidence rule set");
  const auto cps = unicode::decode(text);
  const auto wide = unicode::to_wide(cps);
  std::set<std::tuple<std::size_t, std::size_t, int>> seen;
  for (std::size_t i = 0; i < rules.patterns().size(); ++i) {
    const auto& p = rules.patterns()[i];
    for (const auto& h : find_all(rules, i, wide)) {
      std::size_t start = h.start, end = h.end;
      bool touched = false;
      for (const auto& s : sentences) {
        if (s.start < h.end && h.start < s.end) {
          start = touched ? std::min(start, s.start) : s.start;
          end = touched ? std::max(end, s.end) : s.end;
          touched = true;
        }
      }
      if (touched) {
        start = std::min(start, h.start);
        end = std::max(end, h.end);
      }
      if (p.window) {
        start = std::max(start, h.start >= *p.window ? h.start - *p.window : 0);
        end = std::min(end, h.end + *p.window);
      }
      seen.emplace(start, end, *p.rule_id);
    }
  }
  std::vector<EvidenceSpan> out;
  for (const auto& [start, end, rule] : seen) {
    out.push_back({doc_id, rule, start, end,
                   unicode::encode(std::u32string_view(cps).substr(start, end - start))});
  }
  return out;
}

inline std::vector<EvidenceSpan> extract_evidence(const RuleSet& rules, const Document& doc) {
  return extract_evidence(rules, doc.id, doc.text, doc.sentences);
}

struct RuleDecision {
  bool insomnia = false;
  std::array<bool, kNumRules> rule_tags{};
};

// Tag r is set iff some evidence span carries rule r; insomnia is their OR.
inline RuleDecision decide_from_evidence(const std::vector<EvidenceSpan>& spans) {
  RuleDecision d;
  for (const auto& s : spans) {
    if (s.rule_id >= 0 && s.rule_id < static_cast<int>(kNumRules)) {
      d.rule_tags[static_cast<std::size_t>(s.rule_id)] = true;
    }
  }
  d.insomnia = std::any_of(d.rule_tags.begin(), d.rule_tags.end(), [](bool b) { return b; });
  return d;
}

inline RuleDecision classify_by_rules(const RuleSet& rules, const Document& doc) {
  return decide_from_evidence(extract_evidence(rules, doc));
}

// True when `text` as a whole is matched by some pattern of `type`.
inline bool matches_type(const RuleSet& rules, EntityType type, std::string_view text) {
  const auto wide = unicode::to_wide(unicode::decode(text));
  for (std::size_t i = 0; i < rules.patterns().size(); ++i) {
    if (rules.patterns()[i].entity_type == type && std::regex_match(wide, rules.compiled(i))) {
      return true;
    }
  }
  return false;
}

}  // namespace healthtext::rulex
