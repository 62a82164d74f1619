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

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fedprog/datagen.hpp"
#include "fedprog/prognostics.hpp"

namespace fedprog {

struct CostbenchConfig {
  std::vector<int> user_counts = {100, 200, 300, 400, 500, 600, 700, 800};
  Index signal_length = 200;
  Index k = 10;
};

struct ExperimentConfig {
  std::string experiment = "simulate";
  std::uint64_t seed = 1;
  SimConfig sim;
  PipelineConfig pipeline;
  std::filesystem::path cmapss_train;
  std::filesystem::path cmapss_test;
  std::filesystem::path cmapss_rul;
  std::vector<int> group_sizes = {10, 30, 60};
  std::filesystem::path output_dir = "fedprog_out";
  std::vector<Method> methods = {Method::kProposed, Method::kNonfedRsvd,
                                 Method::kNonfedSvd, Method::kIndividual};
  CostbenchConfig costbench;
};

// ExperimentConfig with the stored-transfer cap used by the CLI.
ExperimentConfig default_experiment_config();

// Sets one dotted key, e.g. "pipeline.frsvd.q" = "2". Throws ConfigError on
// unknown keys or malformed values.
void apply_setting(ExperimentConfig& cfg, const std::string& key,
                   const std::string& value);
// Parses "key = value" lines; '#' starts a comment.
void apply_config_text(ExperimentConfig& cfg, const std::string& text);
void apply_config_file(ExperimentConfig& cfg, const std::filesystem::path& path);
// Every accepted key with its current value.
std::map<std::string, std::string> describe_config(const ExperimentConfig& cfg);

struct CostRow {
  std::string kind;  // "measured" or "analytic"
  int users = 0;
  std::int64_t samples = 0;
  Index l = 0;
  Index k = 0;
  Index r = 0;
  int q = 0;
  double wall_seconds = 0.0;
  std::int64_t metered_upload = 0;
  std::int64_t metered_download = 0;
  std::int64_t metered_total = 0;
  std::int64_t exact_total = 0;
  double frsvd_formula_per_user = 0.0;
  double fsvd_formula = 0.0;
};

struct ExperimentReport {
  BenchmarkResult benchmark;
  std::vector<CostRow> cost_rows;
  std::vector<std::string> files;
};

BenchmarkResult run_simulate(const ExperimentConfig& cfg);
BenchmarkResult run_cmapss(const ExperimentConfig& cfg);
std::vector<CostRow> run_costbench(const ExperimentConfig& cfg);

// Runs the configured experiment and writes its artifacts under
// cfg.output_dir. Nothing is written unless the experiment succeeds.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

void write_summary_json(std::ostream& out, const ExperimentConfig& cfg,
                        const BenchmarkResult& result);
void write_cost_csv(std::ostream& out, const std::vector<CostRow>& rows);

}  // namespace fedprog
