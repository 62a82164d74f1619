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

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "fedprog/datagen.hpp"
#include "fedprog/errors.hpp"
#include "fedprog/prognostics.hpp"

namespace fedprog {
namespace {

TrainingSample sample_of_length(int id, Index len, double ttf, int channels = 1) {
  TrainingSample s{id, {}, ttf};
  for (int c = 0; c < channels; ++c) {
    s.channels.push_back(Vector::LinSpaced(len, 1.0 + c, len + c));
  }
  return s;
}

TestCase test_of_length(int id, Index len, double elapsed, double y_true = 200.0) {
  return {id, 0.5, {Vector::LinSpaced(len, 1.0, static_cast<double>(len))},
          y_true, elapsed};
}

PipelineConfig fast_config() {
  PipelineConfig cfg;
  cfg.gd.max_iters = 3000;
  return cfg;
}

struct SmallProblem {
  std::vector<TrainingUser> users;
  std::vector<TestCase> tests;
};

SmallProblem small_problem(std::uint64_t seed, int n_users = 6, int n_test = 10) {
  SimConfig sim;
  sim.n_users = n_users;
  sim.n_test = n_test;
  return {users_from_population(generate_population(sim, seed)),
          tests_from_assets(generate_test_set(sim, seed + 1), sim.dt)};
}

TEST(AdaptiveFilterTest, Examples) {
  const Index a[] = {5, 3, 8};
  const FilterResult r = adaptive_filter_truncate(a, 4);
  EXPECT_EQ(r.retained, (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(r.dropped, (std::vector<std::size_t>{1}));
  const Index b[] = {4};
  EXPECT_EQ(adaptive_filter_truncate(b, 4).retained.size(), 1u);
  const Index c[] = {2, 3};
  EXPECT_TRUE(adaptive_filter_truncate(c, 4).retained.empty());
  EXPECT_THROW(adaptive_filter_truncate(c, 0), InputError);
}

TEST(AdaptiveFilterTest, TruncatesSamples) {
  const std::vector<TrainingSample> samples = {
      sample_of_length(0, 5, 1.0, 2), sample_of_length(1, 3, 1.0, 2),
      sample_of_length(2, 8, 1.0, 2)};
  const auto kept = adaptive_filter_truncate(samples, 4);
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0].id, 0);
  EXPECT_EQ(kept[1].id, 2);
  for (const auto& s : kept) {
    for (const auto& c : s.channels) EXPECT_EQ(c.size(), 4);
  }
  EXPECT_EQ(kept[1].channels[1], samples[2].channels[1].head(4));
}

TEST(AdaptiveFilterTest, ShrinkingTestLengthNeverLosesSamples) {
  std::vector<Index> lengths;
  for (int i = 0; i < 50; ++i) lengths.push_back((i * 37) % 41 + 1);
  std::size_t previous = 0;
  for (Index len = 45; len >= 1; --len) {
    const std::size_t kept = adaptive_filter_truncate(lengths, len).retained.size();
    EXPECT_GE(kept, previous);
    previous = kept;
  }
}

TEST(ConcatenateSensorsTest, Examples) {
  const std::vector<Vector> two = {(Vector(3) << 1, 2, 3).finished(),
                                   (Vector(3) << 4, 5, 6).finished()};
  EXPECT_EQ(concatenate_sensors(two, 3),
            (Vector(6) << 1, 2, 3, 4, 5, 6).finished());
  const std::vector<Vector> one = {two[0]};
  EXPECT_EQ(concatenate_sensors(one, 3), two[0]);
  const std::vector<Vector> bad = {two[0], Vector::Ones(2)};
  EXPECT_THROW(concatenate_sensors(bad, 3), ConsistencyError);
}

TEST(PredictSingleTest, SingleSampleFallback) {
  const std::vector<TrainingUser> users = {
      {1, {sample_of_length(0, 140, 120.0), sample_of_length(1, 20, 30.0)}}};
  const PredictionRecord r =
      predict_single(test_of_length(3, 130, 130.0), users, fast_config(),
                     Method::kProposed, seeds_for_test(1, 3));
  EXPECT_EQ(r.fallback_used, Fallback::kSingleSample);
  EXPECT_EQ(r.y_pred, 130.0);
  EXPECT_EQ(r.n_retained, 1);
  const PredictionRecord longer =
      predict_single(test_of_length(3, 130, 100.0), users, fast_config(),
                     Method::kProposed, seeds_for_test(1, 3));
  EXPECT_EQ(longer.y_pred, 120.0);
}

TEST(PredictSingleTest, EmptyFallback) {
  const std::vector<TrainingUser> users = {{1, {sample_of_length(0, 10, 20.0)}},
                                           {2, {}}};
  for (Method m : {Method::kProposed, Method::kNonfedRsvd, Method::kNonfedSvd}) {
    const PredictionRecord r = predict_single(test_of_length(4, 87, 87.0), users,
                                              fast_config(), m, seeds_for_test(1, 4));
    EXPECT_EQ(r.fallback_used, Fallback::kEmpty);
    EXPECT_EQ(r.y_pred, 87.0);
    EXPECT_DOUBLE_EQ(r.rel_err, std::abs(87.0 - 200.0) / 200.0);
  }
}

TEST(PredictSingleTest, ProposedMatchesNonfedRsvd) {
  const SmallProblem p = small_problem(3);
  const PipelineConfig cfg = fast_config();
  for (const TestCase& t : p.tests) {
    const Seeds s = seeds_for_test(3, t.test_id);
    const PredictionRecord a = predict_single(t, p.users, cfg, Method::kProposed, s);
    const PredictionRecord b = predict_single(t, p.users, cfg, Method::kNonfedRsvd, s);
    EXPECT_EQ(a.fallback_used, b.fallback_used);
    EXPECT_EQ(a.k_selected, b.k_selected);
    EXPECT_LE(std::abs(a.y_pred - b.y_pred), 1e-9 * std::max(1.0, b.y_pred))
        << "test " << t.test_id;
  }
}

TEST(PredictSingleTest, TranscriptPassesAudit) {
  const SmallProblem p = small_problem(4, 5, 10);
  const TestCase& t = p.tests[9];
  PipelineConfig cfg = fast_config();
  cfg.gd.max_iters = 20;
  Transcript transcript;
  const PredictionRecord r = predict_single(t, p.users, cfg, Method::kProposed,
                                            seeds_for_test(4, t.test_id), -1,
                                            &transcript);
  ASSERT_EQ(r.fallback_used, Fallback::kNone);
  bool saw_grad = false, saw_b = false;
  for (const Transfer& tr : transcript.transfers()) {
    saw_grad |= tr.label == "grad_i";
    saw_b |= tr.label == "B~_i";
    EXPECT_NE(tr.label, "S_i");
  }
  EXPECT_TRUE(saw_grad);
  EXPECT_TRUE(saw_b);
}

TEST(PredictSingleTest, ErrorsCarryTestId) {
  const std::vector<TrainingUser> users = {
      {1, {sample_of_length(0, 10, 2.0), sample_of_length(1, 10, 3.0)}}};
  PipelineConfig cfg = fast_config();
  cfg.gd.alpha = 1e6;
  try {
    predict_single(test_of_length(42, 5, 5.0), users, cfg, Method::kNonfedSvd,
                   seeds_for_test(1, 42));
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("test 42"), std::string::npos);
  }
  EXPECT_THROW(predict_single(test_of_length(1, 5, 5.0), users, fast_config(),
                              Method::kIndividual, seeds_for_test(1, 1), 99),
               Error);
}

TEST(PredictSingleTest, ShortSignalUsesIdentityBasis) {
  const std::vector<TrainingUser> users = {
      {1, {sample_of_length(0, 10, 2.0), sample_of_length(1, 10, 3.0),
           sample_of_length(2, 10, 4.0)}}};
  const PredictionRecord r =
      predict_single(test_of_length(1, 1, 0.5), users, fast_config(),
                     Method::kProposed, seeds_for_test(1, 1));
  EXPECT_EQ(r.fallback_used, Fallback::kNone);
  EXPECT_EQ(r.k_selected, 1);
  EXPECT_TRUE(std::isfinite(r.y_pred));
}

TEST(SeedsTest, PerTestAndDeterministic) {
  const Seeds a = seeds_for_test(1, 0);
  const Seeds b = seeds_for_test(1, 0);
  const Seeds c = seeds_for_test(1, 1);
  EXPECT_EQ(a.sketch, b.sketch);
  EXPECT_NE(a.sketch, c.sketch);
  EXPECT_NE(a.sketch, a.mask);
  EXPECT_NE(a.mask, a.theta_init);
}

TEST(ErrorStatsTest, Examples) {
  const ErrorStats s = error_stats({0.1, 0.2, 0.3});
  EXPECT_DOUBLE_EQ(s.median, 0.2);
  EXPECT_NEAR(s.iqr, 0.1, 1e-15);
  const ErrorStats one = error_stats({0.7});
  EXPECT_EQ(one.median, 0.7);
  EXPECT_EQ(one.iqr, 0.0);
  const ErrorStats four = error_stats({4, 1, 3, 2});
  EXPECT_DOUBLE_EQ(four.median, 2.5);
  EXPECT_DOUBLE_EQ(four.q1, 1.75);
  EXPECT_DOUBLE_EQ(four.q3, 3.25);
  EXPECT_THROW(error_stats({}), InputError);
}

TEST(EvaluateTest, GroupsByFraction) {
  std::vector<PredictionRecord> recs(4);
  const double f[] = {0.1, 0.9, 0.1, 0.9};
  for (int i = 0; i < 4; ++i) {
    recs[i].truncation_fraction = f[i];
    recs[i].rel_err = 0.1 * (i + 1);
  }
  const Summary s = evaluate(recs);
  ASSERT_EQ(s.per_fraction.size(), 2u);
  EXPECT_DOUBLE_EQ(s.per_fraction.at(0.1).median, 0.2);
  EXPECT_DOUBLE_EQ(s.per_fraction.at(0.9).median, 0.3);
  EXPECT_EQ(s.overall.count, 4u);
  EXPECT_THROW(evaluate(std::vector<PredictionRecord>{}), InputError);
}

TEST(RunBenchmarkTest, SingleMethod) {
  const SmallProblem p = small_problem(5, 4, 10);
  const Method only[] = {Method::kProposed};
  const BenchmarkResult r = run_benchmark(p.users, p.tests, only, fast_config(), 5);
  EXPECT_EQ(r.summaries.size(), 1u);
  EXPECT_EQ(r.records.size(), p.tests.size());
  EXPECT_GT(r.proposed_cost.total(), 0);
  for (const auto& rec : r.records) {
    EXPECT_GE(rec.rel_err, 0.0);
    EXPECT_EQ(rec.rel_err, std::abs(rec.y_pred - rec.y_true) / std::abs(rec.y_true));
  }
}

TEST(RunBenchmarkTest, IndividualDegenerateUserUsesFallbacks) {
  SmallProblem p = small_problem(6, 3, 10);
  TrainingUser lonely{77, {p.users[0].samples[0]}};
  p.users.push_back(lonely);
  const Method only[] = {Method::kIndividual};
  const BenchmarkResult r = run_benchmark(p.users, p.tests, only, fast_config(), 6);
  EXPECT_EQ(r.summaries.size(), p.users.size());
  ASSERT_TRUE(r.summaries.count("individual:77"));
  EXPECT_EQ(r.records.size(), p.tests.size() * p.users.size());
  for (const auto& rec : r.records) {
    if (rec.user_id == 77) EXPECT_NE(rec.fallback_used, Fallback::kNone);
  }
  ASSERT_TRUE(best_individual(r).has_value());
}

TEST(RunBenchmarkTest, ThreadsDoNotChangeResults) {
  const SmallProblem p = small_problem(7, 4, 10);
  const Method methods[] = {Method::kProposed, Method::kNonfedSvd};
  PipelineConfig serial = fast_config();
  PipelineConfig threaded = fast_config();
  threaded.threads = 3;
  const BenchmarkResult a = run_benchmark(p.users, p.tests, methods, serial, 7);
  const BenchmarkResult b = run_benchmark(p.users, p.tests, methods, threaded, 7);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].y_pred, b.records[i].y_pred);
  }
  EXPECT_EQ(a.proposed_cost.total(), b.proposed_cost.total());
}

TEST(RecordsCsvTest, HeaderAndRows) {
  PredictionRecord r;
  r.test_id = 2;
  r.truncation_fraction = 0.3;
  r.y_true = 0.5;
  r.y_pred = 0.25;
  r.rel_err = 0.5;
  std::ostringstream out;
  write_records_csv(out, std::vector<PredictionRecord>{r});
  EXPECT_EQ(out.str(),
            "test_id,truncation_fraction,method,user_id,y_true,y_pred,rel_err,"
            "fallback_used\n2,0.29999999999999999,proposed,-1,0.5,0.25,0.5,none\n");
}

TEST(ConvertersTest, EnginesAndDataset) {
  EngineRecord e;
  e.unit_id = 5;
  e.n_cycles = 3;
  e.sensors = Matrix::Ones(3, 2);
  e.op_settings = Matrix::Zero(3, 3);
  e.sensor_ids = {2, 3};
  const auto users = users_from_engines({{e}, {e, e}});
  ASSERT_EQ(users.size(), 2u);
  EXPECT_EQ(users[1].samples.size(), 2u);
  EXPECT_EQ(users[0].samples[0].ttf, 3.0);
  EXPECT_EQ(users[0].samples[0].channels.size(), 2u);
  Fd001Dataset ds;
  ds.test = {e};
  ds.rul = {7};
  const auto tests = tests_from_dataset(ds);
  ASSERT_EQ(tests.size(), 1u);
  EXPECT_EQ(tests[0].y_true, 10.0);
  EXPECT_EQ(tests[0].elapsed, 3.0);
  EXPECT_DOUBLE_EQ(tests[0].fraction, 0.3);
}

TEST(MethodTest, Names) {
  for (Method m : {Method::kProposed, Method::kNonfedRsvd, Method::kNonfedSvd,
                   Method::kIndividual}) {
    EXPECT_EQ(parse_method(to_string(m)), m);
  }
  EXPECT_THROW(parse_method("oracle"), ConfigError);
}

}  // namespace
}  // namespace fedprog
