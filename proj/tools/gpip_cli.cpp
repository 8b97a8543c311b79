// SPDX-License-Identifier: Apache-2.0
//
// Copyright (C) 2026 The gpip authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

// gpip: configuration-driven precoding experiments.
//
//   gpip --config run.json [--output DIR] [--seed S] [--trials T] [--algorithms a,b]

#include "gpip/experiment.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <iostream>
#include <optional>

int main(int argc, char** argv) {
  CLI::App app{"GPIP precoding experiments"};
  std::string config_path;
  std::optional<std::string> output;
  std::optional<std::uint64_t> seed;
  std::optional<long long> trials;
  std::vector<std::string> filter;
  app.add_option("-c,--config", config_path, "JSON experiment config or manifest")->required()->check(CLI::ExistingFile);
  app.add_option("-o,--output", output, "output directory");
  app.add_option("-s,--seed", seed, "master seed override");
  app.add_option("-t,--trials", trials, "trials (link) or drops (system) override")->check(CLI::PositiveNumber);
  app.add_option("-a,--algorithms", filter, "keep only these algorithms")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  try {
    gpip::ExperimentConfig cfg = gpip::load_config(config_path);
    if (output) cfg.output_dir = *output;
    if (seed) cfg.seed = *seed;
    if (trials) {
      if (cfg.scenario == gpip::Scenario::link) cfg.n_trials = *trials;
      else cfg.n_drops = *trials;
    }
    if (!filter.empty()) {
      for (const auto& a : filter) {
        if (std::find(cfg.algorithms.begin(), cfg.algorithms.end(), a) == cfg.algorithms.end()) {
          throw gpip::ConfigInvalid("--algorithms: '" + a + "' is not in the config");
        }
      }
      std::erase_if(cfg.algorithms, [&](const std::string& a) {
        return std::find(filter.begin(), filter.end(), a) == filter.end();
      });
    }
    gpip::validate(cfg);
    gpip::run_experiment(cfg);
    std::cout << "wrote " << cfg.output_dir << '\n';
  } catch (const gpip::ConfigInvalid& e) {
    std::cerr << "invalid config: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
