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

// healthtext: train | predict | evaluate | extract | augment
//
//   healthtext <subcommand> --config run.json [--set key=value]... [--seed N]
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or config error.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "healthtext/pipeline.hpp"

namespace {

using healthtext::pipeline::RunConfig;

int run(const std::string& command, const RunConfig& cfg) {
  namespace pl = healthtext::pipeline;
  if (command == "train") {
    const auto s = pl::cmd_train(cfg);
    std::cerr << "trained " << s.members << " member(s) on " << s.train_examples
              << " examples (+" << s.synthetic_examples << " synthetic), dim " << s.dim << "\n";
  } else if (command == "predict") {
    std::cerr << "wrote " << pl::cmd_predict(cfg) << " prediction(s)\n";
  } else if (command == "evaluate") {
    std::cout << pl::cmd_evaluate(cfg).table;
  } else if (command == "extract") {
    std::cerr << "wrote " << pl::cmd_extract(cfg) << " extraction line(s)\n";
  } else if (command == "augment") {
    const auto s = pl::cmd_augment(cfg);
    std::cerr << "accepted " << s.accepted << " of " << s.candidates << " candidate(s)";
    for (const auto& [reason, n] : s.rejected) std::cerr << ", " << reason << "=" << n;
    std::cerr << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Health text classification and extraction toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(healthtext::kToolVersion));

  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  const std::pair<const char*, const char*> commands[] = {
      {"train", "Fit the vectorizer and train the model ensemble"},
      {"predict", "Write per-unit predictions from a trained model directory"},
      {"evaluate", "Score predictions or extractions against gold annotations"},
      {"extract", "Run rule-based entity or evidence extraction"},
      {"augment", "Generate, filter and mix synthetic training documents"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON run config")->required();
    sub->add_option("--set", overrides, "Override a config value (dotted.key=value)");
    sub->add_option("--seed", seed, "Seed for training, SMOTE and the ensemble");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return run(command, RunConfig::load(config_path, overrides, seed));
  } catch (const healthtext::ConfigError& e) {
    std::cerr << "healthtext " << command << ": config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "healthtext " << command << ": " << e.what() << "\n";
    return 1;
  }
}
