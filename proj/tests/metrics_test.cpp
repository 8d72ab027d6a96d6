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

#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "healthtext/metrics.hpp"
#include "support.hpp"

namespace healthtext::metrics {
namespace {

TEST(Confusion, Enumeration) {
  const auto m = confusion({0, 0, 1}, {0, 1, 1}, 2);
  EXPECT_EQ(m.at(0, 0), 1u);
  EXPECT_EQ(m.at(1, 0), 1u);
  EXPECT_EQ(m.at(1, 1), 1u);
  EXPECT_EQ(m.at(0, 1), 0u);
  EXPECT_EQ(m.total(), 3u);
}

TEST(Confusion, PerfectIsDiagonalAndEmptyIsZero) {
  const auto m = confusion({0, 1, 2, 2}, {0, 1, 2, 2}, 3);
  EXPECT_EQ(m.trace(), m.total());
  const auto z = confusion({}, {}, 3);
  EXPECT_EQ(z.total(), 0u);
  EXPECT_THROW(confusion({0}, {0, 1}, 2), ValidationError);
}

TEST(ClassificationReport, HandCountedExample) {
  const auto r = classification_report(confusion({0, 0, 1}, {0, 1, 1}, 2));
  EXPECT_NEAR(r.per_class[0].f1, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.per_class[1].f1, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.macro_f1, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.accuracy, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.per_class[0].precision, 0.5, 1e-12);
  EXPECT_NEAR(r.per_class[1].recall, 0.5, 1e-12);
}

TEST(ClassificationReport, PerfectPredictions) {
  const auto r = classification_report(confusion({0, 1, 2}, {0, 1, 2}, 3));
  EXPECT_EQ(r.macro_f1, 1.0);
  EXPECT_EQ(r.accuracy, 1.0);
  EXPECT_EQ(r.micro_f1, 1.0);
}

TEST(ClassificationReport, AbsentClassIsFlagged) {
  const auto r = classification_report(confusion({0, 1}, {0, 1}, 3));
  EXPECT_TRUE(r.per_class[2].absent);
  EXPECT_EQ(r.per_class[2].f1, 0.0);
  EXPECT_FALSE(r.per_class[0].absent);
  EXPECT_NEAR(r.macro_f1, 2.0 / 3.0, 1e-12);
}

TEST(MultilabelReport, HandCountedExample) {
  const auto r = multilabel_report({{1, 0}, {1, 1}}, {{1, 1}, {0, 1}});
  EXPECT_NEAR(r.per_class[0].precision, 0.5, 1e-12);
  EXPECT_NEAR(r.per_class[0].recall, 1.0, 1e-12);
  EXPECT_NEAR(r.per_class[0].f1, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.per_class[1].precision, 1.0, 1e-12);
  EXPECT_NEAR(r.per_class[1].recall, 0.5, 1e-12);
  EXPECT_NEAR(r.macro_f1, 2.0 / 3.0, 1e-12);
  EXPECT_EQ(r.accuracy, 0.0);
}

TEST(MultilabelReport, IdenticalAndAllFalse) {
  EXPECT_EQ(multilabel_report({{1, 0}, {0, 1}}, {{1, 0}, {0, 1}}).macro_f1, 1.0);
  const auto r = multilabel_report({{0, 0}, {0, 0}}, {{1, 0}, {0, 1}});
  EXPECT_EQ(r.per_class[0].recall, 0.0);
  EXPECT_EQ(r.per_class[1].recall, 0.0);
  EXPECT_THROW(multilabel_report({{0}}, {{0, 1}}), ValidationError);
}

EntityMention mention(EntityType t, std::size_t s, std::size_t e, std::string doc = "d",
                      std::size_t sent = 0) {
  return {std::move(doc), sent, t, s, e, ""};
}

TEST(EntityF1, ExactVersusOverlap) {
  const std::vector<EntityMention> pred = {mention(EntityType::kPrdt, 0, 8)};
  const std::vector<EntityMention> gold = {mention(EntityType::kPrdt, 0, 12)};
  const auto exact = entity_f1(pred, gold, MatchMode::kExact);
  const auto& pe = exact.per_type[static_cast<std::size_t>(EntityType::kPrdt)];
  EXPECT_EQ(pe.tp, 0u);
  EXPECT_EQ(pe.fp, 1u);
  EXPECT_EQ(pe.fn, 1u);
  const auto ov = entity_f1(pred, gold, MatchMode::kOverlap);
  EXPECT_EQ(ov.per_type[static_cast<std::size_t>(EntityType::kPrdt)].tp, 1u);
  EXPECT_EQ(ov.per_type[static_cast<std::size_t>(EntityType::kPrdt)].f1, 1.0);
}

TEST(EntityF1, SameSetAndNoPredictions) {
  std::vector<EntityMention> gold;
  for (auto t : kAllEntityTypes) gold.push_back(mention(t, 1, 4));
  const auto r = entity_f1(gold, gold, MatchMode::kExact);
  for (const auto& s : r.per_type) EXPECT_EQ(s.f1, 1.0);
  EXPECT_EQ(r.avg_f1, 1.0);
  const auto none = entity_f1({}, gold, MatchMode::kOverlap);
  for (const auto& s : none.per_type) EXPECT_EQ(s.f1, 0.0);
}

TEST(EntityF1, DifferentSentenceOrTypeNeverMatches) {
  const auto r = entity_f1({mention(EntityType::kLoc, 0, 5, "d", 1),
                            mention(EntityType::kOrg, 0, 5, "d", 0)},
                           {mention(EntityType::kLoc, 0, 5, "d", 0)}, MatchMode::kOverlap);
  EXPECT_EQ(r.micro.f1, 0.0);
}

TEST(EntityF1, OverlapIsOneToOne) {
  // Two predictions inside one gold span: only one can match.
  const auto r = entity_f1({mention(EntityType::kDis, 0, 3), mention(EntityType::kDis, 4, 8)},
                           {mention(EntityType::kDis, 0, 8)}, MatchMode::kOverlap);
  const auto& s = r.per_type[static_cast<std::size_t>(EntityType::kDis)];
  EXPECT_EQ(s.tp, 1u);
  EXPECT_EQ(s.fp, 1u);
  EXPECT_EQ(s.fn, 0u);
}

TEST(EntityF1, RandomAgreesWithOracleAndExactNeverExceedsOverlap) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    auto draw = [&](std::size_t n) {
      std::vector<EntityMention> out;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t s = rng() % 20;
        out.push_back(mention(kAllEntityTypes[rng() % 6], s, s + 1 + rng() % 6,
                              "d" + std::to_string(rng() % 2), rng() % 2));
      }
      return out;
    };
    const auto pred = draw(rng() % 15), gold = draw(rng() % 15);
    const auto ex = entity_f1(pred, gold, MatchMode::kExact);
    const auto ov = entity_f1(pred, gold, MatchMode::kOverlap);
    const auto oe = testing::oracle_entity_tp(pred, gold, false);
    const auto oo = testing::oracle_entity_tp(pred, gold, true);
    for (std::size_t t = 0; t < kNumEntityTypes; ++t) {
      EXPECT_EQ(ex.per_type[t].tp, oe[t]);
      EXPECT_EQ(ov.per_type[t].tp, oo[t]);
      EXPECT_LE(ex.per_type[t].tp, ov.per_type[t].tp);
    }
  }
}

TEST(Rouge, UnigramExample) {
  const auto s = rouge1("the product recall", "product recall announced today");
  EXPECT_NEAR(s.precision, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(s.recall, 0.5, 1e-12);
  EXPECT_NEAR(s.f1, 4.0 / 7.0, 1e-12);
  EXPECT_NEAR(s.f1, 0.5714, 5e-5);
}

TEST(Rouge, IdenticalDisjointEmpty) {
  const auto same = rouge1("listeria found in cheese", "listeria found in cheese");
  EXPECT_EQ(same.f1, 1.0);
  EXPECT_EQ(rougeL("listeria found", "listeria found").f1, 1.0);
  EXPECT_EQ(rouge1("alpha beta", "gamma delta").f1, 0.0);
  EXPECT_EQ(rougeL("alpha beta", "gamma delta").f1, 0.0);
  EXPECT_EQ(rouge1("", "gamma").f1, 0.0);
  EXPECT_EQ(rougeL("gamma", "").f1, 0.0);
}

TEST(Rouge, LcsExamples) {
  const auto s = rougeL("a c", "a b c");
  EXPECT_NEAR(s.precision, 1.0, 1e-12);
  EXPECT_NEAR(s.recall, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(s.f1, 0.8, 1e-12);
  EXPECT_EQ(lcs_length({"c", "a"}, {"a", "c"}), 1u);
  EXPECT_EQ(lcs_length({"a", "c"}, {"a", "b", "c"}), 2u);
}

TEST(Rouge, RandomSequencesMatchOracles) {
  std::mt19937_64 rng(17);
  const std::vector<std::string> vocab = {"a", "b", "c", "d", "e"};
  for (int i = 0; i < 200; ++i) {
    std::vector<std::string> x(rng() % 12), y(rng() % 12);
    for (auto& t : x) t = vocab[rng() % vocab.size()];
    for (auto& t : y) t = vocab[rng() % vocab.size()];
    const double ov = static_cast<double>(testing::oracle_multiset_overlap(x, y));
    const double lcs = static_cast<double>(testing::oracle_lcs(x, y));
    EXPECT_EQ(lcs_length(x, y), testing::oracle_lcs(x, y));
    const auto r1 = rouge1_tokens(x, y);
    EXPECT_DOUBLE_EQ(r1.precision, testing::ratio(ov, x.size()));
    EXPECT_DOUBLE_EQ(r1.recall, testing::ratio(ov, y.size()));
    const auto rl = rougeL_tokens(x, y);
    EXPECT_DOUBLE_EQ(rl.f1, testing::oracle_f1(testing::ratio(lcs, x.size()),
                                               testing::ratio(lcs, y.size())));
  }
}

EvidenceSpan span(std::string doc, int rule, std::string text) {
  return {std::move(doc), rule, 0, text.size(), std::move(text)};
}

TEST(Evidence, BestCandidateWins) {
  // Candidate F1s against the gold span: 0.4 and 0.8.
  const std::vector<EvidenceSpan> gold = {span("n1", 0, "a b c d e")};
  const std::vector<EvidenceSpan> pred = {span("n1", 0, "a b z y x"), span("n1", 0, "a b c d")};
  const double f_low = rouge1("a b z y x", "a b c d e").f1;
  const double f_high = rouge1("a b c d", "a b c d e").f1;
  ASSERT_NEAR(f_low, 0.4, 1e-12);
  ASSERT_NEAR(f_high, 8.0 / 9.0, 1e-12);
  const auto r = evidence_score(pred, gold);
  EXPECT_NEAR(r.overall.rouge1.f1, f_high, 1e-12);
  EXPECT_NEAR(r.per_rule.at(0).rouge1.f1, f_high, 1e-12);
  EXPECT_EQ(r.per_rule.at(0).pred_spans, 2u);
}

TEST(Evidence, IdenticalAndEmpty) {
  const std::vector<EvidenceSpan> gold = {span("n1", 0, "cannot sleep at night"),
                                          span("n2", 3, "diagnosed with insomnia")};
  const auto r = evidence_score(gold, gold);
  EXPECT_EQ(r.overall.rouge1.f1, 1.0);
  EXPECT_EQ(r.overall.rougeL_f1, 1.0);
  EXPECT_EQ(evidence_score({}, gold).overall.rouge1.f1, 0.0);
  // Wrong rule or wrong document never matches.
  EXPECT_EQ(evidence_score({span("n1", 1, "cannot sleep at night")}, {gold[0]}).overall.rouge1.f1,
            0.0);
  EXPECT_EQ(evidence_score({span("n2", 0, "cannot sleep at night")}, {gold[0]}).overall.rouge1.f1,
            0.0);
}

}  // namespace
}  // namespace healthtext::metrics
