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

#include <regex>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "healthtext/corpus.hpp"
#include "healthtext/metrics.hpp"
#include "healthtext/rulex.hpp"
#include "healthtext/textprep.hpp"
#include "support.hpp"

namespace healthtext::rulex {
namespace {

RuleSet dis_rules() { return compile_rules(testing::data_path("rules/dis_infection.json")); }

Document note(const std::string& id, const std::string& text) {
  Document d;
  d.id = id;
  d.text = text;
  d.sentences = textprep::split_sentences(text, {});
  for (auto& s : d.sentences) s.doc_id = id;
  return d;
}

TEST(CompileRules, InfectionPatternIsOneDisRule) {
  const auto rs = dis_rules();
  ASSERT_EQ(rs.patterns().size(), 1u);
  EXPECT_EQ(*rs.patterns()[0].entity_type, EntityType::kDis);
  EXPECT_EQ(rs.mode(), RuleMode::kEntity);
}

TEST(CompileRules, EmptyPatternListIsValid) {
  const auto rs = compile_rules(testing::data_path("rules/empty.json"));
  EXPECT_TRUE(rs.empty());
  EXPECT_TRUE(extract_entities(rs, "Listeria was detected.").empty());
}

TEST(CompileRules, BadRegexNamesRule) {
  const nlohmann::json j = {
      {"mode", "entity"},
      {"patterns", {{{"id", "broken-one"}, {"type", "Dis"}, {"kind", "regex"}, {"pattern", "(["}}}}};
  try {
    compile_rules(j);
    FAIL() << "expected RuleError";
  } catch (const RuleError& e) {
    EXPECT_EQ(e.rule_id(), "broken-one");
    EXPECT_NE(std::string(e.what()).find("broken-one"), std::string::npos);
    EXPECT_LE(e.position(), 2u);
  }
}

TEST(CompileRules, StructuralErrors) {
  EXPECT_THROW(compile_rules(nlohmann::json{{"mode", "entity"},
                                            {"patterns", {{{"id", "x"}, {"pattern", "a"}}}}}),
               RuleError);
  EXPECT_THROW(compile_rules(nlohmann::json{
                   {"mode", "evidence"},
                   {"patterns", {{{"id", "x"}, {"rule_id", 7}, {"pattern", "a"}}}}}),
               RuleError);
  EXPECT_THROW(compile_rules(nlohmann::json{{"mode", "sideways"}}), ParseError);
}

TEST(ExtractEntities, ListeriaSentence) {
  const auto ms = extract_entities(dis_rules(), "Listeria was detected in cheese.");
  ASSERT_EQ(ms.size(), 1u);
  EXPECT_EQ(ms[0].type, EntityType::kDis);
  EXPECT_EQ(ms[0].text, "Listeria");
  EXPECT_EQ(ms[0].start, 0u);
  EXPECT_EQ(ms[0].end, 8u);
}

TEST(ExtractEntities, NoMatch) {
  EXPECT_TRUE(extract_entities(dis_rules(), "The label omitted an allergen.").empty());
}

TEST(ExtractEntities, TwoMentionsAgreeWithRegexScan) {
  const std::string s = "Salmonella and Listeria found";
  const auto ms = extract_entities(dis_rules(), s);
  const std::regex oracle("Listeria|Salmonella|E.coli", std::regex::icase);
  std::vector<std::pair<std::size_t, std::size_t>> want;
  for (auto it = std::sregex_iterator(s.begin(), s.end(), oracle); it != std::sregex_iterator();
       ++it) {
    want.emplace_back(it->position(), it->position() + it->length());
  }
  ASSERT_EQ(ms.size(), want.size());
  ASSERT_EQ(ms.size(), 2u);
  for (std::size_t i = 0; i < ms.size(); ++i) {
    EXPECT_EQ(ms[i].start, want[i].first);
    EXPECT_EQ(ms[i].end, want[i].second);
  }
  EXPECT_EQ(ms[0].text, "Salmonella");
  EXPECT_EQ(ms[1].text, "Listeria");
}

TEST(ExtractEntities, OffsetsAreScalarIndices) {
  const auto ms = extract_entities(dis_rules(), "Café Listeria");
  ASSERT_EQ(ms.size(), 1u);
  EXPECT_EQ(ms[0].start, 5u);
  EXPECT_EQ(ms[0].end, 13u);
}

TEST(ExtractEntities, LongestMatchWinsWithinType) {
  const nlohmann::json j = {
      {"mode", "entity"},
      {"patterns",
       {{{"id", "short"}, {"type", "Prdt"}, {"pattern", "cheese"}},
        {{"id", "long"}, {"type", "Prdt"}, {"pattern", "soft cheese"}}}}};
  const auto ms = extract_entities(compile_rules(j), "We sold soft cheese today.");
  ASSERT_EQ(ms.size(), 1u);
  EXPECT_EQ(ms[0].text, "soft cheese");
}

TEST(ExtractEntities, KeywordsRespectTokenBoundaries) {
  const nlohmann::json j = {{"mode", "entity"},
                            {"patterns", {{{"id", "k"}, {"type", "Prdt"}, {"pattern", "egg"}}}}};
  const auto rs = compile_rules(j);
  EXPECT_TRUE(extract_entities(rs, "eggplant and veggies").empty());
  EXPECT_EQ(extract_entities(rs, "one egg, two eggs").size(), 1u);
}

TEST(ExtractEntities, ForceFixtureIsSelfConsistent) {
  const auto rules = compile_rules(testing::data_path("rules/force_entities.json"));
  const auto corpus = corpus::load_corpus(testing::fixture_path("force_entities.jsonl"),
                                          corpus::Schema::kTask5);
  std::vector<EntityMention> pred, gold;
  std::size_t sentences = 0;
  for (const auto& d : corpus.documents) {
    for (const auto& s : d.sentences) {
      auto ms = extract_entities(rules, s);
      pred.insert(pred.end(), ms.begin(), ms.end());
      ++sentences;
    }
    const auto* a = corpus.annotations_for(d.id);
    ASSERT_NE(a, nullptr);
    gold.insert(gold.end(), a->entities.begin(), a->entities.end());
  }
  EXPECT_EQ(sentences, 50u);
  const auto r = metrics::entity_f1(pred, gold, metrics::MatchMode::kExact);
  for (std::size_t t = 0; t < kNumEntityTypes; ++t) {
    EXPECT_EQ(r.per_type[t].f1, 1.0) << to_string(kAllEntityTypes[t]);
  }
}

RuleSet evidence_rules() { return compile_rules(testing::data_path("rules/insomnia_evidence.json")); }

TEST(ExtractEvidence, DirectHitCoversSentence) {
  const auto d = note("n1", "Patient reports difficulty falling asleep.");
  const auto spans = extract_evidence(evidence_rules(), d);
  ASSERT_EQ(spans.size(), 1u);
  EXPECT_EQ(spans[0].rule_id, 0);
  EXPECT_EQ(spans[0].start, 0u);
  EXPECT_EQ(spans[0].end, d.text.size());
  EXPECT_EQ(spans[0].doc_id, "n1");
}

TEST(ExtractEvidence, NoSleepTerms) {
  EXPECT_TRUE(extract_evidence(evidence_rules(), note("n2", "Knee pain improved. Follow up.")).empty());
}

TEST(ExtractEvidence, RepeatedKeywordDeduplicated) {
  const auto d = note("n3", "Reports insomnia, chronic insomnia for years. Otherwise well.");
  const auto spans = extract_evidence(evidence_rules(), d);
  ASSERT_EQ(spans.size(), 1u);
  EXPECT_EQ(spans[0].rule_id, 3);
  EXPECT_EQ(spans[0].text, "Reports insomnia, chronic insomnia for years.");
}

TEST(ExtractEvidence, ModeMismatchThrows) {
  EXPECT_THROW(extract_evidence(dis_rules(), note("n", "x")), ValidationError);
  EXPECT_THROW(extract_entities(evidence_rules(), "x"), ValidationError);
}

TEST(Decide, ComposesTags) {
  const auto d = decide_from_evidence({{"n", 0, 0, 1, "a"}, {"n", 2, 0, 1, "b"}});
  EXPECT_TRUE(d.insomnia);
  EXPECT_EQ(d.rule_tags, (std::array<bool, kNumRules>{true, false, true, false, false}));
  const auto none = decide_from_evidence({});
  EXPECT_FALSE(none.insomnia);
  EXPECT_EQ(none.rule_tags, (std::array<bool, kNumRules>{}));
  std::vector<EvidenceSpan> all;
  for (int r = 0; r < 5; ++r) all.push_back({"n", r, 0, 1, "x"});
  EXPECT_EQ(decide_from_evidence(all).rule_tags,
            (std::array<bool, kNumRules>{true, true, true, true, true}));
}

TEST(Decide, ClassifyByRulesOnNote) {
  const auto d = note("n4",
                      "Has difficulty falling asleep most nights. Started zolpidem last month.");
  const auto dec = classify_by_rules(evidence_rules(), d);
  EXPECT_TRUE(dec.insomnia);
  EXPECT_EQ(dec.rule_tags, (std::array<bool, kNumRules>{true, false, true, false, false}));
}

}  // namespace
}  // namespace healthtext::rulex
