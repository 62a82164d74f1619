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
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "fedprog/cmapss.hpp"
#include "fedprog/datagen.hpp"
#include "fedprog/fedcore.hpp"
#include "fedprog/frsvd.hpp"
#include "fedprog/linalg.hpp"
#include "fedprog/llsreg.hpp"

namespace fedprog {

enum class Method { kProposed, kNonfedRsvd, kNonfedSvd, kIndividual };

const char* to_string(Method m);
Method parse_method(const std::string& name);

struct PipelineConfig {
  FrsvdConfig frsvd{.k = 10, .r = 10, .q = 2, .k_cap = 10};
  double fve_threshold = 0.95;
  Distribution dist = Distribution::kNormal;
  GdConfig gd;
  int threads = 1;
  // Transfers stored per test case; the cost meter is always exact.
  std::size_t transcript_retention = 0;

  void validate() const;
};

// One training asset: P channels of equal length and its failure time.
struct TrainingSample {
  int id = 0;
  std::vector<Vector> channels;
  double ttf = 0.0;

  Index length() const { return channels.empty() ? 0 : channels.front().size(); }
};

struct TrainingUser {
  int user_id = 0;
  std::vector<TrainingSample> samples;
};

struct TestCase {
  int test_id = 0;
  double fraction = 0.0;
  std::vector<Vector> channels;
  double y_true = 0.0;
  double elapsed = 0.0;  // current observed duration, in the ttf time unit

  Index length() const { return channels.empty() ? 0 : channels.front().size(); }
};

enum class Fallback { kNone, kSingleSample, kEmpty };
const char* to_string(Fallback f);

struct PredictionRecord {
  int test_id = 0;
  double truncation_fraction = 0.0;
  Method method = Method::kProposed;
  int user_id = -1;  // set for the individual method
  double y_true = 0.0;
  double y_pred = 0.0;
  double rel_err = 0.0;
  Fallback fallback_used = Fallback::kNone;
  Index k_selected = 0;
  Index n_retained = 0;
  std::int64_t gd_iterations = 0;
  bool gd_converged = false;
};

struct FilterResult {
  std::vector<std::size_t> retained;
  std::vector<std::size_t> dropped;
};

// Keeps signals at least test_len long; the caller truncates them.
FilterResult adaptive_filter_truncate(std::span<const Index> lengths,
                                      Index test_len);
// Retained samples of one user, each truncated to test_len.
std::vector<TrainingSample> adaptive_filter_truncate(
    const std::vector<TrainingSample>& samples, Index test_len);

// Channel blocks in order, each of length test_len.
Vector concatenate_sensors(std::span<const Vector> channels, Index test_len);

struct Seeds {
  std::uint64_t sketch = 0;
  std::uint64_t mask = 0;
  std::uint64_t theta_init = 0;
};

// Seeds for test case `test_id` under experiment seed `seed`; shared by all
// methods so they see identical random draws.
Seeds seeds_for_test(std::uint64_t seed, int test_id);

// Runs one method on one test case. For kIndividual, `individual_user` names
// the user whose data is used. Federated transfers go to `transcript` when
// non-null.
PredictionRecord predict_single(const TestCase& test,
                                const std::vector<TrainingUser>& users,
                                const PipelineConfig& cfg, Method method,
                                const Seeds& seeds, int individual_user = -1,
                                Transcript* transcript = nullptr);

struct ErrorStats {
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double iqr = 0.0;
  std::size_t count = 0;
};

struct Summary {
  ErrorStats overall;
  std::map<double, ErrorStats> per_fraction;
};

// Quartiles by linear interpolation between order statistics.
ErrorStats error_stats(std::vector<double> values);
Summary evaluate(std::span<const PredictionRecord> records);

struct BenchmarkResult {
  std::vector<PredictionRecord> records;
  // Keys: method names, and "individual:<user_id>" per user.
  std::map<std::string, Summary> summaries;
  CostMeter proposed_cost;
  // Retained transfers of the proposed method, tagged with the test id.
  std::vector<std::pair<int, Transfer>> transcript;
  double wall_seconds = 0.0;
};

BenchmarkResult run_benchmark(const std::vector<TrainingUser>& users,
                              const std::vector<TestCase>& tests,
                              std::span<const Method> methods,
                              const PipelineConfig& cfg, std::uint64_t seed);

// Key of the best (lowest median) individual summary, if any.
std::optional<std::string> best_individual(const BenchmarkResult& result);

// Simulation population and test set in pipeline form.
std::vector<TrainingUser> users_from_population(const Population& population);
std::vector<TestCase> tests_from_assets(const std::vector<Asset>& assets,
                                        double dt);

// C-MAPSS: training engines grouped into users (run-to-failure, TTF in
// cycles) and test engines with their true TTF.
std::vector<TrainingUser> users_from_engines(
    const std::vector<std::vector<EngineRecord>>& groups);
std::vector<TestCase> tests_from_dataset(const Fd001Dataset& ds);

// CSV header and rows: test_id,truncation_fraction,method,user_id,y_true,
// y_pred,rel_err,fallback_used.
void write_records_csv(std::ostream& out,
                       std::span<const PredictionRecord> records);

}  // namespace fedprog
