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

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "fedprog/errors.hpp"
#include "fedprog/experiments.hpp"

namespace fedprog {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fedprog_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

ExperimentConfig small_config(const fs::path& out) {
  ExperimentConfig cfg = default_experiment_config();
  apply_config_text(cfg,
                    "# small run\n"
                    "sim.n_users = 5\n"
                    "sim.n_test = 10\n"
                    "pipeline.gd.max_iters = 2000\n"
                    "seed = 3\n");
  cfg.output_dir = out;
  return cfg;
}

std::vector<std::map<std::string, std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  std::vector<std::string> header;
  std::stringstream hs(line);
  for (std::string f; std::getline(hs, f, ',');) header.push_back(f);
  std::vector<std::map<std::string, std::string>> rows;
  while (std::getline(in, line)) {
    std::stringstream ls(line);
    std::map<std::string, std::string> row;
    std::size_t i = 0;
    for (std::string f; std::getline(ls, f, ',');) row[header.at(i++)] = f;
    rows.push_back(row);
  }
  return rows;
}

TEST(ConfigTest, DefaultsMatchDocumentedValues) {
  const auto d = describe_config(default_experiment_config());
  EXPECT_EQ(d.at("experiment"), "simulate");
  EXPECT_EQ(d.at("sim.n_users"), "100");
  EXPECT_EQ(d.at("sim.n_test"), "50");
  EXPECT_EQ(d.at("pipeline.frsvd.q"), "2");
  EXPECT_EQ(d.at("pipeline.frsvd.r"), "10");
  EXPECT_EQ(d.at("pipeline.fve_threshold"), "0.94999999999999996");
  EXPECT_EQ(d.at("pipeline.dist"), "normal");
  EXPECT_EQ(d.at("group_sizes"), "10,30,60");
  EXPECT_EQ(d.at("methods"), "proposed,nonfed_rsvd,nonfed_svd,individual");
}

TEST(ConfigTest, SettingsAndErrors) {
  ExperimentConfig cfg = default_experiment_config();
  apply_setting(cfg, " pipeline.frsvd.q ", " 1 ");
  apply_setting(cfg, "methods", "proposed, nonfed_rsvd");
  apply_setting(cfg, "pipeline.dist", "weibull");
  apply_setting(cfg, "group_sizes", "100");
  EXPECT_EQ(cfg.pipeline.frsvd.q, 1);
  EXPECT_EQ(cfg.methods.size(), 2u);
  EXPECT_EQ(cfg.pipeline.dist, Distribution::kSev);
  EXPECT_EQ(cfg.group_sizes, std::vector<int>{100});
  EXPECT_THROW(apply_setting(cfg, "nope", "1"), ConfigError);
  EXPECT_THROW(apply_setting(cfg, "seed", "abc"), ConfigError);
  EXPECT_THROW(apply_setting(cfg, "experiment", "plot"), ConfigError);
  EXPECT_THROW(apply_config_text(cfg, "seed 3\n"), ConfigError);
  EXPECT_THROW(apply_config_file(cfg, "/nonexistent/fedprog.cfg"), ConfigError);
}

TEST(ConfigTest, DescribeRoundTrips) {
  ExperimentConfig cfg = default_experiment_config();
  apply_setting(cfg, "sim.dt", "0.002");
  apply_setting(cfg, "pipeline.gd.alpha", "1e-5");
  ExperimentConfig copy = default_experiment_config();
  for (const auto& [k, v] : describe_config(cfg)) {
    if (!v.empty()) apply_setting(copy, k, v);
  }
  EXPECT_EQ(describe_config(copy), describe_config(cfg));
}

TEST(RunExperimentTest, SimulateWritesArtifacts) {
  const fs::path out = scratch("sim") / "nested";
  const ExperimentConfig cfg = small_config(out);
  const ExperimentReport report = run_experiment(cfg);
  ASSERT_TRUE(fs::exists(out / "records.csv"));
  ASSERT_TRUE(fs::exists(out / "summary.json"));
  ASSERT_TRUE(fs::exists(out / "transcript.jsonl"));
  const auto rows = read_csv(out / "records.csv");
  EXPECT_EQ(rows.size(), 10u * (3 + 5));

  const auto summary = nlohmann::json::parse(slurp(out / "summary.json"));
  ASSERT_TRUE(summary.contains("methods"));
  ASSERT_TRUE(summary.contains("individual"));
  EXPECT_EQ(summary["individual"].size(), 5u);
  EXPECT_TRUE(summary.contains("best_individual"));
  EXPECT_GT(summary["cost"]["total"].get<std::int64_t>(), 0);

  // Medians in summary.json recompute from records.csv.
  std::map<std::string, std::vector<double>> errs;
  for (const auto& r : rows) {
    const std::string key =
        r.at("method") == "individual" ? "individual:" + r.at("user_id") : r.at("method");
    errs[key].push_back(std::stod(r.at("rel_err")));
    EXPECT_DOUBLE_EQ(std::stod(r.at("rel_err")),
                     std::abs(std::stod(r.at("y_pred")) - std::stod(r.at("y_true"))) /
                         std::stod(r.at("y_true")));
  }
  for (const auto& m : {"proposed", "nonfed_rsvd", "nonfed_svd"}) {
    EXPECT_DOUBLE_EQ(summary["methods"][m]["median"].get<double>(),
                     error_stats(errs[m]).median);
  }
  EXPECT_DOUBLE_EQ(summary["individual"]["2"]["median"].get<double>(),
                   error_stats(errs["individual:2"]).median);
  EXPECT_NEAR(summary["methods"]["proposed"]["median"].get<double>(),
              summary["methods"]["nonfed_rsvd"]["median"].get<double>(), 1e-9);
  EXPECT_NEAR(summary["methods"]["proposed"]["iqr"].get<double>(),
              summary["methods"]["nonfed_rsvd"]["iqr"].get<double>(), 1e-9);

  std::ifstream transcript(out / "transcript.jsonl");
  std::string first;
  ASSERT_TRUE(std::getline(transcript, first));
  const auto line = nlohmann::json::parse(first);
  for (const char* key : {"test_id", "round", "direction", "from", "to", "label",
                          "float_count"}) {
    EXPECT_TRUE(line.contains(key)) << key;
  }
  fs::remove_all(out.parent_path());
}

TEST(RunExperimentTest, ByteIdenticalRecords) {
  const fs::path a = scratch("det_a");
  const fs::path b = scratch("det_b");
  ExperimentConfig cfg = small_config(a);
  apply_setting(cfg, "methods", "proposed,nonfed_svd");
  run_experiment(cfg);
  cfg.output_dir = b;
  apply_setting(cfg, "pipeline.threads", "2");
  run_experiment(cfg);
  EXPECT_EQ(slurp(a / "records.csv"), slurp(b / "records.csv"));
  EXPECT_EQ(slurp(a / "transcript.jsonl"), slurp(b / "transcript.jsonl"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(RunExperimentTest, UnwritableOutputFails) {
  const fs::path blocker = scratch("blocker");
  std::ofstream(blocker) << "file";
  ExperimentConfig cfg = small_config(blocker / "out");
  apply_setting(cfg, "methods", "nonfed_svd");
  EXPECT_THROW(run_experiment(cfg), Error);
  fs::remove(blocker);
}

TEST(RunExperimentTest, CmapssMissingFilesNamed) {
  ExperimentConfig cfg = small_config(scratch("cm"));
  apply_setting(cfg, "experiment", "cmapss");
  apply_setting(cfg, "cmapss.train", "/nonexistent/train_FD001.txt");
  try {
    run_experiment(cfg);
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/train_FD001.txt"),
              std::string::npos);
  }
}

std::string fd_rows(int unit, int cycles, double drift) {
  std::ostringstream out;
  std::mt19937 gen(static_cast<unsigned>(unit * 31 + cycles));
  std::normal_distribution<double> noise(0.0, 0.05);
  for (int c = 1; c <= cycles; ++c) {
    out << unit << ' ' << c << " 0 0 100";
    for (int s = 1; s <= 21; ++s) {
      out << ' ' << 10.0 * s + drift * c * s * 0.01 + noise(gen);
    }
    out << '\n';
  }
  return out.str();
}

TEST(RunExperimentTest, CmapssFixtureAndCorruptRul) {
  const fs::path dir = scratch("fd");
  fs::create_directories(dir);
  {
    std::ofstream train(dir / "train.txt");
    for (int u = 1; u <= 12; ++u) train << fd_rows(u, 20 + 3 * u, 1.0 + 0.1 * u);
    std::ofstream test(dir / "test.txt");
    for (int u = 1; u <= 4; ++u) test << fd_rows(u, 10 + 2 * u, 1.0 + 0.1 * u);
    std::ofstream rul(dir / "rul.txt");
    rul << "20\n25\n30\n35\n";
  }
  ExperimentConfig cfg = small_config(dir / "out");
  apply_config_text(cfg,
                    "experiment = cmapss\n"
                    "group_sizes = 2,4,6\n"
                    "pipeline.gd.alpha = 1e-9\n"
                    "methods = proposed,nonfed_rsvd,individual\n");
  cfg.cmapss_train = dir / "train.txt";
  cfg.cmapss_test = dir / "test.txt";
  cfg.cmapss_rul = dir / "rul.txt";
  const ExperimentReport report = run_experiment(cfg);
  const auto& s = report.benchmark.summaries;
  EXPECT_EQ(s.at("proposed").overall.count, 4u);
  EXPECT_TRUE(s.count("individual:0") && s.count("individual:2"));
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(report.benchmark.records[i].y_pred,
                report.benchmark.records[4 + i].y_pred,
                1e-9 * report.benchmark.records[i].y_pred);
  }
  std::ofstream(dir / "rul.txt") << "20\nbad\n30\n35\n";
  EXPECT_THROW(run_experiment(cfg), ParseError);
  fs::remove_all(dir);
}

TEST(RunExperimentTest, CostbenchTable) {
  const fs::path out = scratch("cost");
  ExperimentConfig cfg = small_config(out);
  apply_config_text(cfg,
                    "experiment = costbench\n"
                    "costbench.user_counts = 20\n"
                    "costbench.signal_length = 50\n"
                    "costbench.k = 3\n");
  const ExperimentReport report = run_experiment(cfg);
  const auto rows = read_csv(out / "cost.csv");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].at("kind"), "measured");
  EXPECT_EQ(rows[0].at("metered_total"), rows[0].at("exact_total"));
  EXPECT_EQ(rows[1].at("kind"), "analytic");
  EXPECT_DOUBLE_EQ(std::stod(rows[1].at("frsvd_formula_per_user")), 6.8e7);
  EXPECT_DOUBLE_EQ(std::stod(rows[1].at("fsvd_formula")), 2.01e10);
  fs::remove_all(out);
}

}  // namespace
}  // namespace fedprog
