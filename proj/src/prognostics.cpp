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

#include "fedprog/prognostics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>

#include "fedprog/errors.hpp"
#include "fedprog/random.hpp"

namespace fedprog {
namespace {

struct LocalBlock {
  int user_id;
  Matrix s;
  Vector ttf;
};

struct Basis {
  Matrix v;
  Index k = 0;
};

Matrix stack_blocks(const std::vector<LocalBlock>& blocks) {
  std::vector<Matrix> parts;
  parts.reserve(blocks.size());
  for (const auto& b : blocks) parts.push_back(b.s);
  return stack_rows(parts);
}

Vector log_ttf(const Vector& ttf) { return ttf.array().log().matrix(); }

Basis decompose(const std::vector<LocalBlock>& blocks, Index n, Index l,
                const PipelineConfig& cfg, Method method, const Seeds& seeds,
                Transcript* transcript) {
  if (l < 2) return {Matrix::Identity(l, l), l};
  const Index k_eff = std::min({cfg.frsvd.k_cap, n - 1, l - 1});
  const Index width = std::min({cfg.frsvd.k_cap + cfg.frsvd.r, n - 1, l - 1});
  FrsvdConfig fc = cfg.frsvd;
  fc.k = k_eff;
  fc.r = width - k_eff;
  Vector sigma;
  Matrix v;
  switch (method) {
    case Method::kProposed: {
      std::vector<UserState> states;
      for (const auto& b : blocks) states.push_back({b.user_id, b.s, b.ttf});
      FrsvdOutput out =
          federated_rsvd(states, fc, seeds.sketch, seeds.mask, transcript);
      sigma = std::move(out.sigma);
      v = std::move(out.v);
      break;
    }
    case Method::kNonfedRsvd: {
      FrsvdOutput out =
          centralized_rsvd(stack_blocks(blocks), fc, seeds.sketch, seeds.mask);
      sigma = std::move(out.sigma);
      v = std::move(out.v);
      break;
    }
    case Method::kNonfedSvd:
    case Method::kIndividual: {
      MfpcaBasis exact = centralized_mfpca_svd(stack_blocks(blocks));
      sigma = exact.eigvals.head(k_eff).array().sqrt().matrix();
      v = exact.eigvecs.leftCols(k_eff);
      break;
    }
  }
  const Index k = select_k_fve(sigma.head(k_eff), cfg.fve_threshold);
  return {v.leftCols(k), k};
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

const char* to_string(Method m) {
  switch (m) {
    case Method::kProposed:
      return "proposed";
    case Method::kNonfedRsvd:
      return "nonfed_rsvd";
    case Method::kNonfedSvd:
      return "nonfed_svd";
    case Method::kIndividual:
      return "individual";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  if (name == "proposed") return Method::kProposed;
  if (name == "nonfed_rsvd") return Method::kNonfedRsvd;
  if (name == "nonfed_svd") return Method::kNonfedSvd;
  if (name == "individual") return Method::kIndividual;
  throw ConfigError("unknown method '" + name + "'");
}

const char* to_string(Fallback f) {
  switch (f) {
    case Fallback::kNone:
      return "none";
    case Fallback::kSingleSample:
      return "single_sample";
    case Fallback::kEmpty:
      return "empty";
  }
  return "unknown";
}

void PipelineConfig::validate() const {
  frsvd.validate();
  gd.validate();
  if (!(fve_threshold > 0 && fve_threshold <= 1)) {
    throw ConfigError("pipeline: fve_threshold must lie in (0, 1]");
  }
}

FilterResult adaptive_filter_truncate(std::span<const Index> lengths,
                                      Index test_len) {
  if (test_len < 1) throw InputError("test length must be >= 1");
  FilterResult out;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    (lengths[i] >= test_len ? out.retained : out.dropped).push_back(i);
  }
  return out;
}

std::vector<TrainingSample> adaptive_filter_truncate(
    const std::vector<TrainingSample>& samples, Index test_len) {
  std::vector<Index> lengths;
  for (const auto& s : samples) lengths.push_back(s.length());
  const FilterResult kept = adaptive_filter_truncate(lengths, test_len);
  std::vector<TrainingSample> out;
  for (std::size_t idx : kept.retained) {
    TrainingSample t;
    t.id = samples[idx].id;
    t.ttf = samples[idx].ttf;
    for (const auto& c : samples[idx].channels) t.channels.push_back(c.head(test_len));
    out.push_back(std::move(t));
  }
  return out;
}

Vector concatenate_sensors(std::span<const Vector> channels, Index test_len) {
  Vector out(static_cast<Index>(channels.size()) * test_len);
  for (std::size_t p = 0; p < channels.size(); ++p) {
    if (channels[p].size() != test_len) {
      throw ConsistencyError("sensor block " + std::to_string(p) + " has length " +
                             std::to_string(channels[p].size()) + ", expected " +
                             std::to_string(test_len));
    }
    out.segment(static_cast<Index>(p) * test_len, test_len) = channels[p];
  }
  return out;
}

Seeds seeds_for_test(std::uint64_t seed, int test_id) {
  const auto t = static_cast<std::uint64_t>(test_id);
  return {derive_seed(seed, Stream::kSketch, {t}),
          derive_seed(seed, Stream::kMask, {t}),
          derive_seed(seed, Stream::kThetaInit, {t})};
}

PredictionRecord predict_single(const TestCase& test,
                                const std::vector<TrainingUser>& users,
                                const PipelineConfig& cfg, Method method,
                                const Seeds& seeds, int individual_user,
                                Transcript* transcript) {
  cfg.validate();
  const Index test_len = test.length();
  if (test_len < 1) throw InputError("test case has an empty signal");
  PredictionRecord rec;
  rec.test_id = test.test_id;
  rec.truncation_fraction = test.fraction;
  rec.method = method;
  rec.user_id = method == Method::kIndividual ? individual_user : -1;
  rec.y_true = test.y_true;

  try {
    std::vector<LocalBlock> blocks;
    bool found = method != Method::kIndividual;
    for (const auto& u : users) {
      if (method == Method::kIndividual) {
        if (u.user_id != individual_user) continue;
        found = true;
      }
      const auto kept = adaptive_filter_truncate(u.samples, test_len);
      if (kept.empty()) continue;
      LocalBlock b{u.user_id, Matrix(kept.size(), 0), Vector(kept.size())};
      for (std::size_t j = 0; j < kept.size(); ++j) {
        const Vector row = concatenate_sensors(kept[j].channels, test_len);
        if (j == 0) b.s.resize(static_cast<Index>(kept.size()), row.size());
        b.s.row(static_cast<Index>(j)) = row.transpose();
        b.ttf(static_cast<Index>(j)) = kept[j].ttf;
      }
      blocks.push_back(std::move(b));
    }
    if (!found) {
      throw InputError("unknown user " + std::to_string(individual_user));
    }
    std::sort(blocks.begin(), blocks.end(),
              [](const LocalBlock& a, const LocalBlock& b) {
                return a.user_id < b.user_id;
              });
    Index n = 0;
    for (const auto& b : blocks) n += b.s.rows();
    rec.n_retained = n;

    if (n == 0) {
      rec.fallback_used = Fallback::kEmpty;
      rec.y_pred = test.elapsed;
    } else if (n == 1) {
      rec.fallback_used = Fallback::kSingleSample;
      rec.y_pred = std::max(blocks.front().ttf(0), test.elapsed);
    } else {
      const Vector x_row = concatenate_sensors(test.channels, test_len);
      const Index l = x_row.size();
      const Basis basis = decompose(blocks, n, l, cfg, method, seeds, transcript);
      rec.k_selected = basis.k;
      GdConfig gd = cfg.gd;
      gd.init_seed = seeds.theta_init;
      FitResult fit;
      if (method == Method::kProposed) {
        std::vector<RegressionShard> shards;
        for (const auto& b : blocks) {
          shards.push_back({b.user_id, with_intercept(compute_scores(b.s, basis.v)),
                            log_ttf(b.ttf)});
        }
        fit = federated_fit(shards, gd, cfg.dist, transcript);
      } else {
        Vector ttf(n);
        Index at = 0;
        for (const auto& b : blocks) {
          ttf.segment(at, b.ttf.size()) = b.ttf;
          at += b.ttf.size();
        }
        const Matrix x = with_intercept(compute_scores(stack_blocks(blocks), basis.v));
        fit = centralized_fit(x, log_ttf(ttf), gd, cfg.dist);
      }
      rec.gd_iterations = fit.iterations;
      rec.gd_converged = fit.converged;
      Vector x_new(basis.k + 1);
      x_new(0) = 1.0;
      x_new.tail(basis.k) = basis.v.transpose() * x_row;
      rec.y_pred = predict_ttf(x_new, fit.theta_star, cfg.dist);
    }
  } catch (const Error& e) {
    throw Error("test " + std::to_string(test.test_id) + " (" +
                to_string(method) + "): " + e.what());
  }
  rec.rel_err = std::abs(rec.y_pred - rec.y_true) / std::abs(rec.y_true);
  return rec;
}

ErrorStats error_stats(std::vector<double> values) {
  if (values.empty()) throw InputError("error_stats: no values");
  std::sort(values.begin(), values.end());
  auto quantile = [&values](double p) {
    const double pos = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  ErrorStats s;
  s.count = values.size();
  s.median = quantile(0.5);
  s.q1 = quantile(0.25);
  s.q3 = quantile(0.75);
  s.iqr = s.q3 - s.q1;
  return s;
}

Summary evaluate(std::span<const PredictionRecord> records) {
  if (records.empty()) throw InputError("evaluate: no records");
  std::vector<double> all;
  std::map<double, std::vector<double>> groups;
  for (const auto& r : records) {
    all.push_back(r.rel_err);
    groups[r.truncation_fraction].push_back(r.rel_err);
  }
  Summary out;
  out.overall = error_stats(std::move(all));
  for (auto& [f, v] : groups) out.per_fraction[f] = error_stats(std::move(v));
  return out;
}

BenchmarkResult run_benchmark(const std::vector<TrainingUser>& users,
                              const std::vector<TestCase>& tests,
                              std::span<const Method> methods,
                              const PipelineConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  BenchmarkResult result;
  std::vector<Seeds> seeds;
  for (const auto& t : tests) seeds.push_back(seeds_for_test(seed, t.test_id));

  for (Method m : methods) {
    if (m == Method::kIndividual) {
      for (const auto& u : users) {
        std::vector<PredictionRecord> recs(tests.size());
        parallel_for(tests.size(), cfg.threads, [&](std::size_t t) {
          recs[t] = predict_single(tests[t], users, cfg, m, seeds[t], u.user_id);
        });
        result.summaries["individual:" + std::to_string(u.user_id)] =
            evaluate(recs);
        result.records.insert(result.records.end(), recs.begin(), recs.end());
      }
      continue;
    }
    std::vector<PredictionRecord> recs(tests.size());
    std::vector<Transcript> transcripts;
    transcripts.reserve(tests.size());
    for (std::size_t t = 0; t < tests.size(); ++t) {
      transcripts.emplace_back(cfg.transcript_retention);
    }
    parallel_for(tests.size(), cfg.threads, [&](std::size_t t) {
      recs[t] = predict_single(tests[t], users, cfg, m, seeds[t], -1,
                               m == Method::kProposed ? &transcripts[t] : nullptr);
    });
    if (m == Method::kProposed) {
      for (std::size_t t = 0; t < tests.size(); ++t) {
        result.proposed_cost.merge(transcripts[t].meter());
        for (const auto& tr : transcripts[t].transfers()) {
          result.transcript.emplace_back(tests[t].test_id, tr);
        }
      }
    }
    result.summaries[to_string(m)] = evaluate(recs);
    result.records.insert(result.records.end(), recs.begin(), recs.end());
  }
  result.wall_seconds = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - start)
                            .count();
  return result;
}

std::optional<std::string> best_individual(const BenchmarkResult& result) {
  std::optional<std::string> best;
  double best_median = 0.0;
  for (const auto& [key, s] : result.summaries) {
    if (key.rfind("individual:", 0) != 0) continue;
    if (!best || s.overall.median < best_median) {
      best = key;
      best_median = s.overall.median;
    }
  }
  return best;
}

std::vector<TrainingUser> users_from_population(const Population& population) {
  std::vector<TrainingUser> users;
  for (std::size_t i = 0; i < population.size(); ++i) {
    TrainingUser u{static_cast<int>(i), {}};
    for (std::size_t j = 0; j < population[i].size(); ++j) {
      const Asset& a = population[i][j];
      u.samples.push_back({static_cast<int>(j), {a.signal}, a.ttf});
    }
    users.push_back(std::move(u));
  }
  return users;
}

std::vector<TestCase> tests_from_assets(const std::vector<Asset>& assets,
                                        double dt) {
  std::vector<TestCase> tests;
  for (std::size_t t = 0; t < assets.size(); ++t) {
    const Asset& a = assets[t];
    tests.push_back({static_cast<int>(t), a.fraction, {a.signal}, a.ttf,
                     a.elapsed(dt)});
  }
  return tests;
}

namespace {

std::vector<Vector> engine_channels(const EngineRecord& e) {
  std::vector<Vector> channels;
  for (Index c = 0; c < e.sensors.cols(); ++c) channels.push_back(e.sensors.col(c));
  return channels;
}

}  // namespace

std::vector<TrainingUser> users_from_engines(
    const std::vector<std::vector<EngineRecord>>& groups) {
  std::vector<TrainingUser> users;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    TrainingUser u{static_cast<int>(g), {}};
    for (const auto& e : groups[g]) {
      u.samples.push_back(
          {e.unit_id, engine_channels(e), static_cast<double>(e.n_cycles)});
    }
    users.push_back(std::move(u));
  }
  return users;
}

std::vector<TestCase> tests_from_dataset(const Fd001Dataset& ds) {
  std::vector<TestCase> tests;
  for (std::size_t i = 0; i < ds.test.size(); ++i) {
    const EngineRecord& e = ds.test[i];
    const double ttf = ds.test_ttf(i);
    tests.push_back({e.unit_id, e.n_cycles / ttf, engine_channels(e), ttf,
                     static_cast<double>(e.n_cycles)});
  }
  return tests;
}

void write_records_csv(std::ostream& out,
                       std::span<const PredictionRecord> records) {
  out << "test_id,truncation_fraction,method,user_id,y_true,y_pred,rel_err,"
         "fallback_used\n";
  for (const auto& r : records) {
    out << r.test_id << ',' << fmt(r.truncation_fraction) << ','
        << to_string(r.method) << ',' << r.user_id << ',' << fmt(r.y_true) << ','
        << fmt(r.y_pred) << ',' << fmt(r.rel_err) << ','
        << to_string(r.fallback_used) << '\n';
  }
}

}  // namespace fedprog
