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

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "healthtext/features.hpp"
#include "support.hpp"

namespace healthtext::features {
namespace {

VectorizerConfig unigram() { return VectorizerConfig{}; }

TEST(Fit, SmoothedIdf) {
  const auto m = fit({"a b", "a c"}, unigram());
  EXPECT_EQ(m.terms(), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_DOUBLE_EQ(m.idf_of("a"), 1.0);
  EXPECT_NEAR(m.idf_of("b"), 1.4055, 1e-4);
  EXPECT_DOUBLE_EQ(m.idf_of("b"), std::log(3.0 / 2.0) + 1.0);
  EXPECT_DOUBLE_EQ(m.idf_of("c"), m.idf_of("b"));
  EXPECT_EQ(m.n_docs_fitted(), 2u);
}

TEST(Fit, DocumentFrequencyThresholds) {
  auto cfg = unigram();
  cfg.min_df = 2;
  EXPECT_EQ(fit({"a b", "a c"}, cfg).terms(), (std::vector<std::string>{"a"}));
  cfg.min_df = 1;
  cfg.max_df_ratio = 0.5;
  EXPECT_EQ(fit({"a b", "a c"}, cfg).terms(), (std::vector<std::string>{"b", "c"}));
}

TEST(Fit, TermInEveryDocumentHasIdfOne) {
  const auto m = fit({"x y", "x", "z x x"}, unigram());
  EXPECT_EQ(m.idf_of("x"), 1.0);
}

TEST(Fit, EmptyTrainingSetThrows) {
  EXPECT_THROW(fit({}, unigram()), ValidationError);
}

TEST(Fit, OrderIndependentVocabulary) {
  std::vector<std::string> docs = {"the item was pulled", "listeria in cheese", "cheese the end",
                                   "E.coli found in beef", "beef and cheese"};
  const auto a = fit(docs, unigram());
  std::mt19937_64 rng(3);
  for (int i = 0; i < 5; ++i) {
    std::shuffle(docs.begin(), docs.end(), rng);
    const auto b = fit(docs, unigram());
    EXPECT_EQ(a.terms(), b.terms());
    EXPECT_EQ(a.idf(), b.idf());
  }
}

TEST(Fit, Bigrams) {
  auto cfg = unigram();
  cfg.prep.ngram_max = 2;
  const auto m = fit({"food recall now"}, cfg);
  EXPECT_TRUE(m.column("food recall").has_value());
  EXPECT_TRUE(m.column("recall now").has_value());
  EXPECT_EQ(m.dim(), 5u);
}

TEST(Transform, SingleTermNormalizesToOne) {
  const auto m = fit({"a"}, unigram());
  const auto v = m.transform("a");
  ASSERT_EQ(v.nnz(), 1u);
  EXPECT_DOUBLE_EQ(v.values[0], 1.0);
}

TEST(Transform, OutOfVocabularyGivesZeroVector) {
  const auto m = fit({"a b"}, unigram());
  const auto v = m.transform("zzz qqq");
  EXPECT_EQ(v.nnz(), 0u);
  EXPECT_EQ(v.dim, 2u);
  EXPECT_EQ(v.norm(), 0.0);
}

TEST(Transform, WorkedExample) {
  const auto m = fit({"a b", "a c"}, unigram());
  const auto v = m.transform("a a b");
  // Recomputed independently: (2 * 1.0, 1 * (ln 1.5 + 1)) / norm.
  const double b = std::log(1.5) + 1.0;
  const double n = std::sqrt(4.0 + b * b);
  ASSERT_EQ(v.indices, (std::vector<std::uint32_t>{0, 1}));
  EXPECT_NEAR(v.values[0], 2.0 / n, 1e-12);
  EXPECT_NEAR(v.values[1], b / n, 1e-12);
  // The commonly quoted rounding (0.8183, 0.5751) is off in the fourth
  // decimal; the exact values are (0.81818, 0.57496).
  EXPECT_NEAR(v.values[0], 0.8183, 5e-4);
  EXPECT_NEAR(v.values[1], 0.5751, 5e-4);
}

TEST(Transform, UnitNormAndSortedIndices) {
  std::vector<std::string> docs;
  std::mt19937_64 rng(5);
  const std::vector<std::string> words = {"salmonella", "recall", "lot", "cheese", "the",
                                          "of", "fda", "sleep", "night", "e.coli"};
  for (int i = 0; i < 50; ++i) {
    std::string d;
    for (int k = 0; k < 8; ++k) d += words[rng() % words.size()] + " ";
    docs.push_back(d);
  }
  const auto m = fit(docs, unigram());
  for (const auto& d : docs) {
    const auto v = m.transform(d);
    EXPECT_NEAR(v.norm(), 1.0, 1e-9);
    EXPECT_TRUE(std::is_sorted(v.indices.begin(), v.indices.end()));
    EXPECT_EQ(std::adjacent_find(v.indices.begin(), v.indices.end()), v.indices.end());
    for (auto i : v.indices) EXPECT_LT(i, v.dim);
  }
  const auto batch = m.transform_all(docs);
  for (std::size_t i = 0; i < docs.size(); ++i) EXPECT_EQ(batch[i].values, m.transform(docs[i]).values);
}

TEST(SparseVector, DenseRoundTrip) {
  const std::vector<double> x = {0.0, 1.5, 0.0, -2.0};
  const auto s = SparseVector::from_dense(x);
  EXPECT_EQ(s.indices, (std::vector<std::uint32_t>{1, 3}));
  EXPECT_EQ(s.dense(), x);
}

TEST(Persistence, ExactRoundTrip) {
  auto cfg = unigram();
  cfg.prep.ngram_max = 2;
  cfg.min_df = 1;
  const auto m = fit({"one two three", "two three four", "salt \xC3\xA9t\xC3\xA9"}, cfg);
  testing::ScratchDir dir("features");
  save(m, dir.file("v.json"));
  const auto back = load(dir.file("v.json"));
  EXPECT_EQ(back.terms(), m.terms());
  EXPECT_EQ(back.idf(), m.idf());  // bitwise
  EXPECT_EQ(back.n_docs_fitted(), m.n_docs_fitted());
  EXPECT_EQ(back.config().prep.ngram_max, 2);
  EXPECT_EQ(back.transform("two three").values, m.transform("two three").values);
}

TEST(Persistence, RejectsInconsistentFiles) {
  json j = to_json(fit({"a b"}, unigram()));
  j["idf"].push_back(1.0);
  EXPECT_THROW(from_json(j), Error);
  j = to_json(fit({"a b"}, unigram()));
  j["version"] = 99;
  EXPECT_THROW(from_json(j), Error);
}

}  // namespace
}  // namespace healthtext::features
