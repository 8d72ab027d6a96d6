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

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "healthtext/pipeline.hpp"
#include "healthtext/stub_server.hpp"
#include "support.hpp"

namespace healthtext::pipeline {
namespace {

using nlohmann::json;

std::string repo_root() { return std::filesystem::path(HEALTHTEXT_DATA_DIR).parent_path().string(); }

// A shipped config with input paths made absolute and outputs sent to `dir`.
json shipped_config(const std::string& name, const testing::ScratchDir& dir) {
  std::ifstream in(repo_root() + "/configs/" + name);
  json j = json::parse(in);
  for (auto& [key, value] : j["paths"].items()) {
    const std::string rel = value.get<std::string>();
    if (rel.rfind("out/", 0) == 0) {
      value = dir.file(std::filesystem::path(rel).filename().string());
    } else {
      value = repo_root() + "/" + rel;
    }
  }
  return j;
}

json toy_config(const testing::ScratchDir& dir) {
  return {{"task", "task5_st1"},
          {"paths",
           {{"corpus", testing::fixture_path("toy_text.jsonl")},
            {"model_dir", dir.file("model")},
            {"predictions", dir.file("pred.jsonl")},
            {"report", dir.file("report.json")},
            {"table", dir.file("report.txt")}}},
          {"splits", {{"train", "train"}, {"dev", "dev"}, {"predict", "train"}, {"evaluate", "train"}}},
          {"class_weights", "balanced"},
          {"train", {{"learning_rate", 0.5}, {"epochs", 100}, {"batch_size", 4}, {"seed", 1}}},
          {"seeds", {1}}};
}

std::vector<json> lines_without_provenance(const std::string& path) {
  auto lines = read_jsonl(path);
  for (auto& l : lines) {
    l.erase("config_hash");
    l.erase("tool_version");
  }
  return lines;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(HEALTHTEXT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Overrides, DottedPathsAndTypes) {
  json j = {{"train", {{"epochs", 5}}}};
  apply_override(j, "train.epochs=0");
  apply_override(j, "train.learning_rate=0.25");
  apply_override(j, "paths.corpus=some/file.jsonl");
  apply_override(j, "seeds=[3,4]");
  EXPECT_EQ(j["train"]["epochs"], 0);
  EXPECT_EQ(j["train"]["learning_rate"], 0.25);
  EXPECT_EQ(j["paths"]["corpus"], "some/file.jsonl");
  EXPECT_EQ(j["seeds"], json::array({3, 4}));
  EXPECT_THROW(apply_override(j, "novalue"), ConfigError);
  EXPECT_THROW(apply_override(j, "a..b=1"), ConfigError);
}

TEST(Train, FiveSeedsGiveFiveMembers) {
  testing::ScratchDir dir("pipe");
  json j = shipped_config("task5_st1.json", dir);
  j["paths"]["model_dir"] = dir.file("model");
  j["train"]["epochs"] = 5;
  const auto summary = cmd_train(RunConfig::from_json(j));
  EXPECT_EQ(summary.members, 5u);
  const auto manifest = ensemble::load_manifest(dir.file("model"));
  EXPECT_EQ(manifest["member_files"].size(), 5u);
  EXPECT_EQ(manifest["seeds"], json::array({1, 2, 3, 4, 5}));
  EXPECT_TRUE(manifest.contains("provenance"));
  EXPECT_EQ(ensemble::load(dir.file("model")).size(), 5u);
}

TEST(Train, ZeroEpochsPersistsZeroModel) {
  testing::ScratchDir dir("pipe");
  json j = toy_config(dir);
  j["train"]["epochs"] = 0;
  cmd_train(RunConfig::from_json(j));
  const auto ens = ensemble::load(dir.file("model"));
  for (double w : ens.front().weights()) EXPECT_EQ(w, 0.0);
  for (double b : ens.front().bias()) EXPECT_EQ(b, 0.0);
}

TEST(Train, SmoteAndUnitWeightsRun) {
  testing::ScratchDir dir("pipe");
  json j = toy_config(dir);
  j["smote"] = {{"enabled", true}, {"k_neighbors", 2}, {"seed", 3}};
  j["class_weights"] = "none";
  const auto s = cmd_train(RunConfig::from_json(j));
  EXPECT_EQ(s.train_examples, 12u);
}

TEST(Cli, UsageErrorsExitTwo) {
  testing::ScratchDir dir("pipe");
  json j = toy_config(dir);
  j["paths"]["corpus"] = dir.file("missing.jsonl");
  testing::write_file(dir.file("cfg.json"), j.dump());
  EXPECT_EQ(run_cli("train --config " + dir.file("cfg.json")), 2);
  EXPECT_EQ(run_cli("train --config " + dir.file("nope.json")), 2);
  EXPECT_EQ(run_cli("train"), 2);
  json st2 = shipped_config("task5_st2.json", dir);
  testing::write_file(dir.file("st2.json"), st2.dump());
  EXPECT_EQ(run_cli("train --config " + dir.file("st2.json")), 2);
}

TEST(Cli, ToyRunEndToEnd) {
  testing::ScratchDir dir("pipe");
  testing::write_file(dir.file("cfg.json"), toy_config(dir).dump());
  ASSERT_EQ(run_cli("train --config " + dir.file("cfg.json")), 0);
  ASSERT_EQ(run_cli("predict --config " + dir.file("cfg.json")), 0);
  ASSERT_EQ(run_cli("evaluate --config " + dir.file("cfg.json")), 0);
  const auto report = json::parse(testing::read_file(dir.file("report.json")));
  EXPECT_EQ(report["accuracy"], 1.0);
}

TEST(Predict, SeparableToyIsFullyCorrect) {
  testing::ScratchDir dir("pipe");
  const auto cfg = RunConfig::from_json(toy_config(dir));
  cmd_train(cfg);
  EXPECT_EQ(cmd_predict(cfg), 12u);
  const auto corpus = corpus::load_corpus(testing::fixture_path("toy_text.jsonl"),
                                          corpus::Schema::kTask5);
  const auto units = units_for(Task::kTask5St1, corpus, Split::kTrain);
  const auto names = class_names(Task::kTask5St1, cfg);
  const auto preds = read_jsonl(dir.file("pred.jsonl"));
  ASSERT_EQ(preds.size(), units.size());
  for (std::size_t i = 0; i < units.size(); ++i) {
    EXPECT_EQ(preds[i]["id"], units[i].id);
    EXPECT_EQ(preds[i]["pred"], names[static_cast<std::size_t>(units[i].label)]) << units[i].id;
    EXPECT_TRUE(preds[i].contains("config_hash"));
  }
}

TEST(Predict, EmptySplitGivesEmptyFile) {
  testing::ScratchDir dir("pipe");
  json j = toy_config(dir);
  cmd_train(RunConfig::from_json(j));
  j["splits"]["predict"] = "test";
  EXPECT_EQ(cmd_predict(RunConfig::from_json(j)), 0u);
  EXPECT_EQ(testing::read_file(dir.file("pred.jsonl")), "");
}

TEST(Predict, SingleMemberEnsembleMatchesMember) {
  testing::ScratchDir dir("pipe");
  json j = shipped_config("task5_st1.json", dir);
  j["train"]["epochs"] = 15;
  j["paths"]["model_dir"] = dir.file("ens");
  cmd_train(RunConfig::from_json(j));
  // Keep only member 2 (seed 3) of the five.
  auto manifest = ensemble::load_manifest(dir.file("ens"));
  manifest["member_files"] = json::array({"member_2.json"});
  manifest["seeds"] = json::array({3});
  write_json(dir.file("ens") + "/manifest.json", manifest);
  j["paths"]["predictions"] = dir.file("from_member.jsonl");
  cmd_predict(RunConfig::from_json(j));

  json solo = j;
  solo["seeds"] = json::array({3});
  solo["paths"]["model_dir"] = dir.file("solo");
  solo["paths"]["predictions"] = dir.file("from_solo.jsonl");
  cmd_train(RunConfig::from_json(solo));
  cmd_predict(RunConfig::from_json(solo));
  const auto a = lines_without_provenance(dir.file("from_member.jsonl"));
  ASSERT_FALSE(a.empty());
  EXPECT_EQ(a, lines_without_provenance(dir.file("from_solo.jsonl")));
}

TEST(Predict, DimensionMismatchNamesVersions) {
  testing::ScratchDir dir("pipe");
  const auto cfg = RunConfig::from_json(toy_config(dir));
  cmd_train(cfg);
  auto v = json::parse(testing::read_file(dir.file("model/vectorizer.json")));
  v["terms"].push_back("zzzz-extra");
  v["idf"].push_back(1.0);
  write_json(dir.file("model/vectorizer.json"), v);
  try {
    cmd_predict(cfg);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("vectorizer (version 1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("model (version 1"), std::string::npos) << msg;
  }
}

TEST(Evaluate, PerfectPredictionsTable) {
  testing::ScratchDir dir("pipe");
  const auto cfg = RunConfig::from_json(toy_config(dir));
  cmd_train(cfg);
  cmd_predict(cfg);
  const auto out = cmd_evaluate(cfg);
  EXPECT_EQ(out.report["macro"]["f1"], 1.0);
  EXPECT_NE(out.table.find("Class"), std::string::npos);
  EXPECT_NE(out.table.find("1.000"), std::string::npos);
  EXPECT_EQ(testing::read_file(dir.file("report.txt")), out.table);
}

TEST(Evaluate, IdMismatchListsIds) {
  testing::ScratchDir dir("pipe");
  const auto cfg = RunConfig::from_json(toy_config(dir));
  cmd_train(cfg);
  cmd_predict(cfg);
  auto lines = testing::read_file(dir.file("pred.jsonl"));
  lines = lines.substr(lines.find('\n') + 1);  // drop the first prediction
  testing::write_file(dir.file("pred.jsonl"), lines);
  try {
    cmd_evaluate(cfg);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("toy-00:0"), std::string::npos) << e.what();
  }
}

TEST(Extract, ForceEntitiesScoreAndColumnOrder) {
  testing::ScratchDir dir("pipe");
  const auto cfg = RunConfig::from_json(shipped_config("task5_st2.json", dir));
  EXPECT_GT(cmd_extract(cfg), 0u);
  const auto out = cmd_evaluate(cfg);
  const std::string header = out.table.substr(0, out.table.find('\n'));
  std::size_t pos = 0;
  for (const char* col : {"Avg.", "Org", "Prdt", "Cau", "Dis", "#Aff", "Loc"}) {
    const auto at = header.find(col, pos);
    ASSERT_NE(at, std::string::npos) << col << " in " << header;
    pos = at + 1;
  }
  EXPECT_NE(out.table.find("1.000"), std::string::npos);
}

TEST(Extract, ListeriaSentenceGivesOneLine) {
  testing::ScratchDir dir("pipe");
  json j = shipped_config("task5_st2.json", dir);
  j["paths"]["corpus"] = testing::fixture_path("listeria_sentence.jsonl");
  j["paths"]["rules"] = testing::data_path("rules/dis_infection.json");
  EXPECT_EQ(cmd_extract(RunConfig::from_json(j)), 1u);
  const auto lines = read_jsonl(dir.file("mentions.jsonl"));
  ASSERT_EQ(lines.size(), 1u);
  EXPECT_EQ(lines[0]["text"], "Listeria");
  EXPECT_EQ(lines[0]["type"], "Dis");
}

TEST(Extract, EmptyRulesGiveEmptyOutput) {
  testing::ScratchDir dir("pipe");
  json j = shipped_config("task5_st2.json", dir);
  j["paths"]["rules"] = testing::data_path("rules/empty.json");
  EXPECT_EQ(cmd_extract(RunConfig::from_json(j)), 0u);
  EXPECT_EQ(testing::read_file(dir.file("mentions.jsonl")), "");
}

TEST(Extract, RerunIsByteIdentical) {
  testing::ScratchDir dir("pipe");
  const auto cfg = RunConfig::from_json(shipped_config("task4_st2b.json", dir));
  cmd_extract(cfg);
  const auto first = testing::read_file(dir.file("evidence.jsonl"));
  cmd_extract(cfg);
  EXPECT_EQ(first, testing::read_file(dir.file("evidence.jsonl")));
  EXPECT_FALSE(first.empty());
  const auto out = cmd_evaluate(cfg);
  EXPECT_TRUE(out.report.contains("overall"));
  EXPECT_NE(out.table.find("ROUGE-L"), std::string::npos);
}

class AugmentRun : public ::testing::Test {
 protected:
  void SetUp() override { ::setenv("HEALTHTEXT_TEST_AUG_KEY", "k", 1); }
  void TearDown() override { ::unsetenv("HEALTHTEXT_TEST_AUG_KEY"); }

  json config(const testing::ScratchDir& dir, const std::string& url) {
    json j = shipped_config("augment_stub.json", dir);
    j["augment"]["client"]["endpoint_url"] = url;
    j["augment"]["client"]["auth_env_var"] = "HEALTHTEXT_TEST_AUG_KEY";
    j["augment"]["client"]["backoff_initial_ms"] = 1;
    j["augment"]["client"]["max_retries"] = 1;
    j["augment"]["in_flight"] = 1;
    return j;
  }
};

TEST_F(AugmentRun, NovelTextsAreMixedIn) {
  testing::ScratchDir dir("pipe");
  augment::StubGenerationServer server(
      augment::load_stub_fixture(testing::fixture_path("stub/novel3.json")));
  server.start();
  const auto j = config(dir, server.url());
  const auto summary = cmd_augment(RunConfig::from_json(j));
  EXPECT_EQ(summary.accepted, 3u);
  const auto before = corpus::load_corpus(j["paths"]["corpus"], corpus::Schema::kTask5);
  const auto after = corpus::load_corpus(dir.file("augmented.jsonl"), corpus::Schema::kTask5);
  ASSERT_EQ(after.documents.size(), before.documents.size() + 3);
  for (std::size_t i = before.documents.size(); i < after.documents.size(); ++i) {
    EXPECT_EQ(after.documents[i].split, Split::kTrain);
  }
  EXPECT_TRUE(std::filesystem::exists(dir.file("augmented.jsonl.provenance.json")));
}

TEST_F(AugmentRun, DuplicatesAreAudited) {
  testing::ScratchDir dir("pipe");
  augment::StubGenerationServer server(
      augment::load_stub_fixture(testing::fixture_path("stub/duplicates.json")));
  server.start();
  const auto summary = cmd_augment(RunConfig::from_json(config(dir, server.url())));
  EXPECT_EQ(summary.accepted, 0u);
  const auto audit = read_jsonl(dir.file("audit.jsonl"));
  ASSERT_EQ(audit.size(), 3u);
  for (const auto& a : audit) EXPECT_EQ(a["rejection_reason"], "duplicate");
}

TEST_F(AugmentRun, MissingAuthFailsBeforeNetwork) {
  testing::ScratchDir dir("pipe");
  augment::StubGenerationServer server(
      augment::load_stub_fixture(testing::fixture_path("stub/novel3.json")));
  server.start();
  const auto cfg = RunConfig::from_json(config(dir, server.url()));
  ::unsetenv("HEALTHTEXT_TEST_AUG_KEY");
  EXPECT_THROW(cmd_augment(cfg), ConfigError);
  EXPECT_EQ(server.request_count(), 0u);
}

TEST_F(AugmentRun, UnavailableEndpointKeepsPartialAudit) {
  testing::ScratchDir dir("pipe");
  augment::StubGenerationServer server(
      augment::load_stub_fixture(testing::fixture_path("stub/unavailable.json")));
  server.start();
  EXPECT_THROW(cmd_augment(RunConfig::from_json(config(dir, server.url()))), Error);
  EXPECT_TRUE(std::filesystem::exists(dir.file("audit.jsonl")));
  EXPECT_TRUE(std::filesystem::exists(dir.file("augmented.jsonl")));
}

}  // namespace
}  // namespace healthtext::pipeline
