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

// JSONL ingestion, persistence and validation of corpora for both tasks.
//
// Document lines: {"id","text","source","split"} plus optional "sentences"
// ([{"start","end"}]) and an inline "annotations" object. Annotations may
// also come from a separate JSONL file keyed by "doc_id". Unknown keys are
// carried in `extra` and written back unchanged.

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"

#include "healthtext/corpus_types.hpp"
#include "healthtext/error.hpp"
#include "healthtext/textprep.hpp"
#include "healthtext/unicode.hpp"

namespace healthtext::corpus {

using nlohmann::json;

enum class Schema { kTask4, kTask5 };

struct Violation {
  std::string doc_id;
  std::string field;
  std::string rule;

  friend bool operator==(const Violation&, const Violation&) = default;
};

using ValidationReport = std::vector<Violation>;

inline std::string describe(const Violation& v) {
  return v.doc_id + " " + v.field + ": " + v.rule;
}

namespace detail {

inline const std::set<std::string>& document_keys() {
  static const std::set<std::string> keys = {"id",        "text",
                                             "source",    "split",
                                             "sentences", "annotations"};
  return keys;
}

inline const std::set<std::string>& annotation_keys() {
  static const std::set<std::string> keys = {
      "doc_id",          "insomnia",       "rule_tags", "sentence_labels",
      "evidence_spans",  "entities"};
  return keys;
}

inline std::size_t get_offset(const json& j, const char* key) {
  if (!j.contains(key)) {
    throw ParseError(std::string("missing key '") + key + "'");
  }
  const auto& v = j.at(key);
  if (!v.is_number_unsigned()) {
    throw ParseError(std::string("'") + key + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

inline std::string get_string(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_string()) {
    throw ParseError(std::string("missing or non-string key '") + key + "'");
  }
  return j.at(key).get<std::string>();
}

// Slice or empty when the offsets do not fit; validation reports the latter.
inline std::string safe_slice(const std::u32string& cps, std::size_t start,
                              std::size_t end) {
  if (start > end || end > cps.size()) return {};
  return unicode::encode(std::u32string_view(cps).substr(start, end - start));
}

inline AnnotationSet parse_annotations(const json& j, const Document* doc) {
  if (!j.is_object()) throw ParseError("annotations must be an object");
  AnnotationSet a;
  if (j.contains("doc_id")) {
    a.doc_id = get_string(j, "doc_id");
  } else if (doc != nullptr) {
    a.doc_id = doc->id;
  } else {
    throw ParseError("missing key 'doc_id'");
  }
  if (j.contains("insomnia")) {
    if (!j["insomnia"].is_boolean()) throw ParseError("'insomnia' must be a bool");
    a.insomnia = j["insomnia"].get<bool>();
  }
  if (j.contains("rule_tags")) {
    const auto& t = j["rule_tags"];
    if (!t.is_array() || t.size() != kNumRules) {
      throw ParseError("'rule_tags' must be an array of 5 bools");
    }
    std::array<bool, kNumRules> tags{};
    for (std::size_t i = 0; i < kNumRules; ++i) {
      if (!t[i].is_boolean()) throw ParseError("'rule_tags' must hold bools");
      tags[i] = t[i].get<bool>();
    }
    a.rule_tags = tags;
  }
  if (j.contains("sentence_labels")) {
    const auto& labels = j["sentence_labels"];
    if (!labels.is_object()) throw ParseError("'sentence_labels' must be an object");
    for (const auto& [key, value] : labels.items()) {
      if (key.empty() ||
          !std::all_of(key.begin(), key.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        throw ParseError("sentence label key '" + key + "' is not an index");
      }
      if (!value.is_string()) throw ParseError("sentence label must be a string");
      a.sentence_labels[std::stoul(key)] =
          parse_sentence_label(value.get<std::string>());
    }
  }

  std::u32string doc_cps;
  if (doc != nullptr) doc_cps = unicode::decode(doc->text);

  if (j.contains("evidence_spans")) {
    const auto& spans = j["evidence_spans"];
    if (!spans.is_array()) throw ParseError("'evidence_spans' must be an array");
    for (const auto& s : spans) {
      EvidenceSpan span;
      span.doc_id = a.doc_id;
      if (!s.contains("rule_id") || !s["rule_id"].is_number_integer()) {
        throw ParseError("evidence span needs an integer 'rule_id'");
      }
      span.rule_id = s["rule_id"].get<int>();
      span.start = get_offset(s, "start");
      span.end = get_offset(s, "end");
      span.text = s.contains("text") ? get_string(s, "text")
                                     : safe_slice(doc_cps, span.start, span.end);
      a.evidence_spans.push_back(std::move(span));
    }
  }
  if (j.contains("entities")) {
    const auto& ents = j["entities"];
    if (!ents.is_array()) throw ParseError("'entities' must be an array");
    for (const auto& e : ents) {
      EntityMention m;
      m.doc_id = a.doc_id;
      m.sentence = get_offset(e, "sentence");
      m.type = parse_entity_type(get_string(e, "type"));
      m.start = get_offset(e, "start");
      m.end = get_offset(e, "end");
      if (e.contains("text")) {
        m.text = get_string(e, "text");
      } else if (doc != nullptr && m.sentence < doc->sentences.size()) {
        m.text = safe_slice(unicode::decode(doc->sentences[m.sentence].text),
                            m.start, m.end);
      }
      a.entities.push_back(std::move(m));
    }
  }
  for (const auto& [key, value] : j.items()) {
    if (annotation_keys().count(key) == 0) a.extra[key] = value;
  }
  return a;
}

inline Document parse_document(const json& j) {
  if (!j.is_object()) throw ParseError("line is not a JSON object");
  Document d;
  d.id = get_string(j, "id");
  d.text = get_string(j, "text");
  d.source = j.contains("source") ? parse_source(get_string(j, "source"))
                                  : Source::kNewsArticle;
  d.split = parse_split(get_string(j, "split"));
  if (j.contains("sentences")) {
    const auto& ss = j["sentences"];
    if (!ss.is_array()) throw ParseError("'sentences' must be an array");
    const auto cps = unicode::decode(d.text);
    for (std::size_t i = 0; i < ss.size(); ++i) {
      Sentence s;
      s.doc_id = d.id;
      s.index = ss[i].contains("index") ? get_offset(ss[i], "index") : i;
      s.start = get_offset(ss[i], "start");
      s.end = get_offset(ss[i], "end");
      s.text = safe_slice(cps, s.start, s.end);
      d.sentences.push_back(std::move(s));
    }
  } else {
    d.sentences = textprep::split_sentences(d.text, textprep::PrepConfig{});
    for (auto& s : d.sentences) s.doc_id = d.id;
  }
  for (const auto& [key, value] : j.items()) {
    if (document_keys().count(key) == 0) d.extra[key] = value;
  }
  return d;
}

template <typename Fn>
void for_each_line(const std::string& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), lineno);
    }
    try {
      fn(j);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), lineno);
    }
  }
}

inline void sort_annotations(Corpus& c) {
  std::unordered_map<std::string, std::size_t> order;
  for (std::size_t i = 0; i < c.documents.size(); ++i) order[c.documents[i].id] = i;
  std::stable_sort(c.annotations.begin(), c.annotations.end(),
                   [&](const AnnotationSet& x, const AnnotationSet& y) {
                     auto ox = order.count(x.doc_id) ? order[x.doc_id] : order.size();
                     auto oy = order.count(y.doc_id) ? order[y.doc_id] : order.size();
                     return ox < oy;
                   });
}

}  // namespace detail

// Every type invariant, plus schema membership when `schema` is given.
inline ValidationReport validate(const Corpus& corpus,
                                 std::optional<Schema> schema = std::nullopt) {
  ValidationReport report;
  auto add = [&](const std::string& id, std::string field, std::string rule) {
    report.push_back({id, std::move(field), std::move(rule)});
  };

  std::unordered_map<std::string, const Document*> by_id;
  for (const auto& d : corpus.documents) {
    if (d.id.empty()) add(d.id, "id", "id must be non-empty");
    if (!by_id.emplace(d.id, &d).second) add(d.id, "id", "duplicate id");
    if (d.text.empty()) add(d.id, "text", "text must be non-empty");
    const auto cps = unicode::decode(d.text);
    std::size_t prev_end = 0;
    for (std::size_t i = 0; i < d.sentences.size(); ++i) {
      const auto& s = d.sentences[i];
      const std::string field = "sentences[" + std::to_string(i) + "]";
      if (s.index != i) add(d.id, field, "sentence index must equal its position");
      if (s.doc_id != d.id) add(d.id, field, "sentence doc_id mismatch");
      if (s.start >= s.end || s.end > cps.size()) {
        add(d.id, field, "offset out of range");
        continue;
      }
      if (i > 0 && s.start < prev_end) add(d.id, field, "sentence overlap");
      prev_end = std::max(prev_end, s.end);
      if (s.text != detail::safe_slice(cps, s.start, s.end)) {
        add(d.id, field, "text must equal document slice");
      }
    }
  }

  std::unordered_set<std::string> annotated;
  for (const auto& a : corpus.annotations) {
    const auto it = by_id.find(a.doc_id);
    if (it == by_id.end()) {
      add(a.doc_id, "doc_id", "annotations refer to unknown document");
      continue;
    }
    if (!annotated.insert(a.doc_id).second) {
      add(a.doc_id, "annotations", "duplicate annotation set");
    }
    const Document& d = *it->second;
    const auto cps = unicode::decode(d.text);

    if (schema == Schema::kTask4 &&
        (!a.sentence_labels.empty() || !a.entities.empty())) {
      add(a.doc_id, "annotations", "sentence_labels/entities not allowed in task4 schema");
    }
    if (schema == Schema::kTask5 &&
        (a.insomnia || a.rule_tags || !a.evidence_spans.empty())) {
      add(a.doc_id, "annotations",
          "insomnia/rule_tags/evidence_spans not allowed in task5 schema");
    }

    if (a.insomnia.has_value() != a.rule_tags.has_value()) {
      add(a.doc_id, "rule_tags", "rule_tags present iff insomnia present");
    }
    if (a.insomnia == false && a.rule_tags &&
        std::any_of(a.rule_tags->begin(), a.rule_tags->end(), [](bool b) { return b; })) {
      add(a.doc_id, "rule_tags", "rule_tags must be all false");
    }
    for (const auto& [index, label] : a.sentence_labels) {
      if (index >= d.sentences.size()) {
        add(a.doc_id, "sentence_labels[" + std::to_string(index) + "]",
            "sentence index out of range");
      }
    }
    for (std::size_t i = 0; i < a.evidence_spans.size(); ++i) {
      const auto& s = a.evidence_spans[i];
      const std::string field = "evidence_spans[" + std::to_string(i) + "]";
      if (s.rule_id < 0 || s.rule_id >= static_cast<int>(kNumRules)) {
        add(a.doc_id, field, "rule_id must be in [0,4]");
      }
      if (s.doc_id != a.doc_id) add(a.doc_id, field, "span doc_id mismatch");
      if (s.start >= s.end || s.end > cps.size()) {
        add(a.doc_id, field, "offset out of range");
      } else if (s.text != detail::safe_slice(cps, s.start, s.end)) {
        add(a.doc_id, field, "text must equal document slice");
      }
    }
    for (std::size_t i = 0; i < a.entities.size(); ++i) {
      const auto& m = a.entities[i];
      const std::string field = "entities[" + std::to_string(i) + "]";
      if (m.doc_id != a.doc_id) add(a.doc_id, field, "mention doc_id mismatch");
      if (m.sentence >= d.sentences.size()) {
        add(a.doc_id, field, "sentence index out of range");
        continue;
      }
      const auto sent = unicode::decode(d.sentences[m.sentence].text);
      if (m.start >= m.end || m.end > sent.size()) {
        add(a.doc_id, field, "offset out of range");
      } else if (m.text != detail::safe_slice(sent, m.start, m.end)) {
        add(a.doc_id, field, "text must equal sentence slice");
      }
    }
  }
  return report;
}

inline void throw_if_invalid(const ValidationReport& report) {
  if (report.empty()) return;
  std::ostringstream msg;
  msg << "validation failed for document " << report.front().doc_id << ": "
      << describe(report.front());
  if (report.size() > 1) msg << " (+" << report.size() - 1 << " more)";
  throw ValidationError(msg.str());
}

// Separate annotation file, one {"doc_id", ...} object per line.
inline std::vector<AnnotationSet> load_annotations(const std::string& path,
                                                   const Corpus& corpus) {
  std::vector<AnnotationSet> out;
  detail::for_each_line(path, [&](const json& j) {
    const auto* doc = j.contains("doc_id") && j["doc_id"].is_string()
                          ? corpus.find(j["doc_id"].get<std::string>())
                          : nullptr;
    out.push_back(detail::parse_annotations(j, doc));
  });
  return out;
}

inline Corpus load_corpus(const std::string& path, Schema schema,
                          const std::optional<std::string>& annotations_path = std::nullopt) {
  Corpus c;
  detail::for_each_line(path, [&](const json& j) {
    Document d = detail::parse_document(j);
    if (j.contains("annotations")) {
      c.annotations.push_back(detail::parse_annotations(j["annotations"], &d));
    }
    c.documents.push_back(std::move(d));
  });
  if (annotations_path) {
    auto more = load_annotations(*annotations_path, c);
    c.annotations.insert(c.annotations.end(), more.begin(), more.end());
  }
  detail::sort_annotations(c);
  throw_if_invalid(validate(c, schema));
  return c;
}

inline json to_json(const AnnotationSet& a, bool inline_form) {
  json j = a.extra.is_object() ? a.extra : json::object();
  if (!inline_form) j["doc_id"] = a.doc_id;
  if (a.insomnia) j["insomnia"] = *a.insomnia;
  if (a.rule_tags) {
    j["rule_tags"] = json::array();
    for (bool b : *a.rule_tags) j["rule_tags"].push_back(b);
  }
  if (!a.sentence_labels.empty()) {
    json labels = json::object();
    for (const auto& [i, l] : a.sentence_labels) labels[std::to_string(i)] = to_string(l);
    j["sentence_labels"] = labels;
  }
  if (!a.evidence_spans.empty()) {
    j["evidence_spans"] = json::array();
    for (const auto& s : a.evidence_spans) {
      j["evidence_spans"].push_back(
          {{"rule_id", s.rule_id}, {"start", s.start}, {"end", s.end}, {"text", s.text}});
    }
  }
  if (!a.entities.empty()) {
    j["entities"] = json::array();
    for (const auto& m : a.entities) {
      j["entities"].push_back({{"sentence", m.sentence},
                               {"type", std::string(to_string(m.type))},
                               {"start", m.start},
                               {"end", m.end},
                               {"text", m.text}});
    }
  }
  return j;
}

inline json to_json(const Document& d, const AnnotationSet* a) {
  json j = d.extra.is_object() ? d.extra : json::object();
  j["id"] = d.id;
  j["text"] = d.text;
  j["source"] = std::string(to_string(d.source));
  j["split"] = std::string(to_string(d.split));
  j["sentences"] = json::array();
  for (const auto& s : d.sentences) {
    j["sentences"].push_back({{"start", s.start}, {"end", s.end}});
  }
  if (a != nullptr) j["annotations"] = to_json(*a, true);
  return j;
}

// One document per line with its annotations inline. Keys are emitted in
// sorted order so output is deterministic.
inline void save_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  for (const auto& d : corpus.documents) {
    out << to_json(d, corpus.annotations_for(d.id)).dump() << '\n';
  }
  if (!out) throw IoError("write failed for " + path);
}

// Documents in `split`, preserving corpus order.
inline std::vector<const Document*> documents_in(const Corpus& corpus, Split split) {
  std::vector<const Document*> out;
  for (const auto& d : corpus.documents) {
    if (d.split == split) out.push_back(&d);
  }
  return out;
}

}  // namespace healthtext::corpus
