/*
 * Copyright 2026 The fedprog Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Batch runner for the simulation, C-MAPSS and cost experiments.
//
//   fedprog simulate --config sim.cfg --set pipeline.frsvd.q=1
//   fedprog cmapss --set cmapss.train=train_FD001.txt ...
//   fedprog costbench --set costbench.user_counts=100,200
//   fedprog show-config

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fedprog/errors.hpp"
#include "fedprog/experiments.hpp"

namespace {

struct Options {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string output_dir;
};

void add_common(CLI::App* cmd, Options& opts) {
  cmd->add_option("--config", opts.config_path, "Flat key = value config file");
  cmd->add_option("--set", opts.overrides, "Override one key, as key=value")
      ->take_all();
  cmd->add_option("--output-dir", opts.output_dir, "Directory for outputs");
}

fedprog::ExperimentConfig build_config(const std::string& experiment,
                                       const Options& opts) {
  fedprog::ExperimentConfig cfg = fedprog::default_experiment_config();
  if (!opts.config_path.empty()) fedprog::apply_config_file(cfg, opts.config_path);
  for (const auto& kv : opts.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw fedprog::ConfigError("--set expects key=value, got '" + kv + "'");
    }
    fedprog::apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!experiment.empty()) cfg.experiment = experiment;
  if (!opts.output_dir.empty()) cfg.output_dir = opts.output_dir;
  return cfg;
}

void print_summary(const fedprog::ExperimentReport& report) {
  for (const auto& [key, s] : report.benchmark.summaries) {
    if (key.rfind("individual:", 0) == 0) continue;
    std::cout << key << ": median " << s.overall.median << " IQR "
              << s.overall.iqr << " (n=" << s.overall.count << ")\n";
  }
  if (auto best = fedprog::best_individual(report.benchmark)) {
    const auto& s = report.benchmark.summaries.at(*best);
    std::cout << "best " << *best << ": median " << s.overall.median << " IQR "
              << s.overall.iqr << "\n";
  }
  for (const auto& row : report.cost_rows) {
    std::cout << row.kind << " users=" << row.users << " L=" << row.l
              << " metered=" << row.metered_total << " exact=" << row.exact_total
              << " frsvd/user=" << row.frsvd_formula_per_user
              << " fsvd=" << row.fsvd_formula << " seconds=" << row.wall_seconds
              << "\n";
  }
  for (const auto& f : report.files) std::cout << "wrote " << f << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated prognostics experiments"};
  app.require_subcommand(1);
  Options opts;
  std::vector<std::pair<CLI::App*, std::string>> runs;
  for (const char* name : {"simulate", "cmapss", "costbench"}) {
    CLI::App* cmd = app.add_subcommand(name, std::string("Run the ") + name +
                                                 " experiment");
    add_common(cmd, opts);
    runs.emplace_back(cmd, name);
  }
  CLI::App* show = app.add_subcommand("show-config", "Print every config key");
  add_common(show, opts);
  CLI11_PARSE(app, argc, argv);

  try {
    if (show->parsed()) {
      for (const auto& [k, v] : fedprog::describe_config(build_config("", opts))) {
        std::cout << k << " = " << v << "\n";
      }
      return 0;
    }
    for (const auto& [cmd, name] : runs) {
      if (!cmd->parsed()) continue;
      const auto cfg = build_config(name, opts);
      print_summary(fedprog::run_experiment(cfg));
    }
  } catch (const fedprog::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
