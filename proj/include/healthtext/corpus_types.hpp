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

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "healthtext/error.hpp"

namespace healthtext {

enum class Source { kClinicalNote, kNewsArticle, kPressRelease, kSynthetic };
enum class Split { kTrain, kDev, kTest };
enum class SentenceLabel { kRecall, kOutbreak, kNeither };
enum class EntityType { kOrg, kPrdt, kCau, kDis, kNumAffected, kLoc };

inline constexpr std::size_t kNumRules = 5;
inline constexpr std::size_t kNumEntityTypes = 6;
inline constexpr std::size_t kNumSentenceLabels = 3;

inline constexpr std::array<EntityType, kNumEntityTypes> kAllEntityTypes = {
    EntityType::kOrg, EntityType::kPrdt,        EntityType::kCau,
    EntityType::kDis, EntityType::kNumAffected, EntityType::kLoc};

namespace detail {

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view s, const std::array<std::string_view, N>& names,
                std::string_view what) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == s) return static_cast<Enum>(i);
  }
  throw ParseError("unknown " + std::string(what) + " '" + std::string(s) + "'");
}

inline constexpr std::array<std::string_view, 4> kSourceNames = {
    "clinical_note", "news_article", "press_release", "synthetic"};
inline constexpr std::array<std::string_view, 3> kSplitNames = {"train", "dev",
                                                                "test"};
inline constexpr std::array<std::string_view, 3> kLabelNames = {
    "Recall", "Outbreak", "Neither"};
inline constexpr std::array<std::string_view, 6> kEntityNames = {
    "Org", "Prdt", "Cau", "Dis", "NumAffected", "Loc"};
// Column heads used in rendered tables.
inline constexpr std::array<std::string_view, 6> kEntityColumns = {
    "Org", "Prdt", "Cau", "Dis", "#Aff", "Loc"};

}  // namespace detail

inline std::string_view to_string(Source v) {
  return detail::kSourceNames[static_cast<std::size_t>(v)];
}
inline std::string_view to_string(Split v) {
  return detail::kSplitNames[static_cast<std::size_t>(v)];
}
inline std::string_view to_string(SentenceLabel v) {
  return detail::kLabelNames[static_cast<std::size_t>(v)];
}
inline std::string_view to_string(EntityType v) {
  return detail::kEntityNames[static_cast<std::size_t>(v)];
}
inline std::string_view column_name(EntityType v) {
  return detail::kEntityColumns[static_cast<std::size_t>(v)];
}

inline Source parse_source(std::string_view s) {
  return detail::parse_enum<Source>(s, detail::kSourceNames, "source");
}
inline Split parse_split(std::string_view s) {
  return detail::parse_enum<Split>(s, detail::kSplitNames, "split");
}
inline SentenceLabel parse_sentence_label(std::string_view s) {
  return detail::parse_enum<SentenceLabel>(s, detail::kLabelNames,
                                           "sentence label");
}
inline EntityType parse_entity_type(std::string_view s) {
  return detail::parse_enum<EntityType>(s, detail::kEntityNames, "entity type");
}

// A sentence of a document. Offsets are scalar-value indices into the
// document text; `text` is the slice [start, end).
struct Sentence {
  std::string doc_id;
  std::size_t index = 0;
  std::size_t start = 0;
  std::size_t end = 0;
  std::string text;

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

struct EvidenceSpan {
  std::string doc_id;
  int rule_id = 0;
  std::size_t start = 0;  // document offsets
  std::size_t end = 0;
  std::string text;

  friend bool operator==(const EvidenceSpan&, const EvidenceSpan&) = default;
};

struct EntityMention {
  std::string doc_id;
  std::size_t sentence = 0;
  EntityType type = EntityType::kOrg;
  std::size_t start = 0;  // sentence-relative offsets
  std::size_t end = 0;
  std::string text;

  friend bool operator==(const EntityMention&, const EntityMention&) = default;
};

struct Document {
  std::string id;
  std::string text;
  Source source = Source::kNewsArticle;
  Split split = Split::kTrain;
  std::vector<Sentence> sentences;
  // Keys this library does not interpret; written back verbatim on save.
  nlohmann::json extra = nlohmann::json::object();

  friend bool operator==(const Document&, const Document&) = default;
};

struct AnnotationSet {
  std::string doc_id;
  std::optional<bool> insomnia;
  std::optional<std::array<bool, kNumRules>> rule_tags;
  std::map<std::size_t, SentenceLabel> sentence_labels;
  std::vector<EvidenceSpan> evidence_spans;
  std::vector<EntityMention> entities;
  nlohmann::json extra = nlohmann::json::object();

  friend bool operator==(const AnnotationSet&, const AnnotationSet&) = default;
};

struct Corpus {
  std::vector<Document> documents;
  std::vector<AnnotationSet> annotations;

  const Document* find(std::string_view id) const {
    for (const auto& d : documents) {
      if (d.id == id) return &d;
    }
    return nullptr;
  }
  const AnnotationSet* annotations_for(std::string_view id) const {
    for (const auto& a : annotations) {
      if (a.doc_id == id) return &a;
    }
    return nullptr;
  }

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

}  // namespace healthtext
