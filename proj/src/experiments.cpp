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

#include "fedprog/experiments.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "fedprog/cmapss.hpp"
#include "fedprog/errors.hpp"
#include "fedprog/frsvd.hpp"

namespace fedprog {
namespace {

using Json = nlohmann::ordered_json;

Json stats_json(const ErrorStats& s) {
  Json j;
  j["median"] = s.median;
  j["iqr"] = s.iqr;
  j["q1"] = s.q1;
  j["q3"] = s.q3;
  j["count"] = s.count;
  return j;
}

Json summary_json(const Summary& s) {
  Json j = stats_json(s.overall);
  Json per = Json::object();
  for (const auto& [f, st] : s.per_fraction) {
    char key[32];
    std::snprintf(key, sizeof(key), "%.6g", f);
    per[key] = stats_json(st);
  }
  j["per_fraction"] = per;
  return j;
}

void require_file(const std::filesystem::path& p, const char* what) {
  if (p.empty()) throw InputError(std::string("missing path for ") + what);
  if (!std::filesystem::is_regular_file(p)) {
    throw InputError(std::string(what) + " file not found: " + p.string());
  }
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw InputError("cannot write " + p.string());
  return out;
}

}  // namespace

BenchmarkResult run_simulate(const ExperimentConfig& cfg) {
  cfg.sim.validate();
  const Population population = generate_population(cfg.sim, cfg.seed);
  const std::vector<Asset> test_assets = generate_test_set(cfg.sim, cfg.seed);
  return run_benchmark(users_from_population(population),
                       tests_from_assets(test_assets, cfg.sim.dt), cfg.methods,
                       cfg.pipeline, cfg.seed);
}

BenchmarkResult run_cmapss(const ExperimentConfig& cfg) {
  require_file(cfg.cmapss_train, "cmapss.train");
  require_file(cfg.cmapss_test, "cmapss.test");
  require_file(cfg.cmapss_rul, "cmapss.rul");
  const Fd001Dataset ds = select_sensors(
      parse_cmapss(cfg.cmapss_train, cfg.cmapss_test, cfg.cmapss_rul));
  const auto groups = partition_users(ds.train, cfg.group_sizes, cfg.seed);
  return run_benchmark(users_from_engines(groups), tests_from_dataset(ds),
                       cfg.methods, cfg.pipeline, cfg.seed);
}

std::vector<CostRow> run_costbench(const ExperimentConfig& cfg) {
  std::vector<CostRow> rows;
  const Index l = cfg.costbench.signal_length;
  FrsvdConfig fc = cfg.pipeline.frsvd;
  fc.k = cfg.costbench.k;
  for (int n_users : cfg.costbench.user_counts) {
    SimConfig sim = cfg.sim;
    sim.n_users = n_users;
    const auto users = users_from_population(generate_population(sim, cfg.seed));
    std::vector<UserState> states;
    std::vector<Index> samples;
    for (const auto& u : users) {
      const auto kept = adaptive_filter_truncate(u.samples, l);
      if (kept.empty()) continue;
      UserState s{u.user_id, Matrix(kept.size(), l), Vector(kept.size())};
      for (std::size_t j = 0; j < kept.size(); ++j) {
        s.signals.row(static_cast<Index>(j)) =
            concatenate_sensors(kept[j].channels, l).transpose();
        s.ttfs(static_cast<Index>(j)) = kept[j].ttf;
      }
      samples.push_back(s.signals.rows());
      states.push_back(std::move(s));
    }
    Transcript transcript;
    const auto start = std::chrono::steady_clock::now();
    federated_rsvd(states, fc, derive_seed(cfg.seed, Stream::kSketch),
                   derive_seed(cfg.seed, Stream::kMask), &transcript);
    CostRow row;
    row.kind = "measured";
    row.wall_seconds = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - start)
                           .count();
    row.users = static_cast<int>(states.size());
    for (Index j : samples) row.samples += j;
    row.l = l;
    row.k = fc.k;
    row.r = fc.r;
    row.q = fc.q;
    row.metered_upload = transcript.meter().total_upload;
    row.metered_download = transcript.meter().total_download;
    row.metered_total = transcript.meter().total();
    row.exact_total = frsvd_exact_cost(fc, l, samples).total();
    row.frsvd_formula_per_user = comm_cost_formula(fc, static_cast<double>(l), true);
    row.fsvd_formula = fsvd_cost_formula(static_cast<double>(l),
                                         static_cast<double>(row.samples));
    rows.push_back(row);
  }
  // Worked example: 100 users with 5 samples each and 1e5-long signals.
  CostRow ex;
  ex.kind = "analytic";
  ex.users = 100;
  ex.samples = 500;
  ex.l = 100000;
  ex.k = 90;
  ex.r = 10;
  ex.q = 2;
  const FrsvdConfig worked{.k = 90, .r = 10, .q = 2, .k_cap = 90};
  const std::vector<Index> per_user(100, 5);
  ex.exact_total = frsvd_exact_cost(worked, ex.l, per_user).total();
  ex.frsvd_formula_per_user = comm_cost_formula(worked, 1e5, true);
  ex.fsvd_formula = fsvd_cost_formula(1e5, 500);
  rows.push_back(ex);
  return rows;
}

void write_summary_json(std::ostream& out, const ExperimentConfig& cfg,
                        const BenchmarkResult& result) {
  Json j;
  j["experiment"] = cfg.experiment;
  j["seed"] = cfg.seed;
  Json methods = Json::object();
  Json individual = Json::object();
  for (const auto& [key, s] : result.summaries) {
    if (key.rfind("individual:", 0) == 0) {
      individual[key.substr(11)] = summary_json(s);
    } else {
      methods[key] = summary_json(s);
    }
  }
  j["methods"] = methods;
  if (!individual.empty()) {
    j["individual"] = individual;
    if (auto best = best_individual(result)) j["best_individual"] = best->substr(11);
  }
  Json cost;
  cost["upload"] = result.proposed_cost.total_upload;
  cost["download"] = result.proposed_cost.total_download;
  cost["total"] = result.proposed_cost.total();
  cost["rounds"] = result.proposed_cost.rounds;
  cost["transfers"] = result.proposed_cost.transfers;
  cost["transfers_stored"] = result.transcript.size();
  j["cost"] = cost;
  j["wall_seconds"] = result.wall_seconds;
  out << j.dump(2) << '\n';
}

void write_cost_csv(std::ostream& out, const std::vector<CostRow>& rows) {
  out << "kind,users,samples,L,K,r,q,wall_seconds,metered_upload,"
         "metered_download,metered_total,exact_total,frsvd_formula_per_user,"
         "fsvd_formula\n";
  for (const auto& r : rows) {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "%s,%d,%lld,%lld,%lld,%lld,%d,%.6f,%lld,%lld,%lld,%lld,%.17g,%.17g\n",
                  r.kind.c_str(), r.users, static_cast<long long>(r.samples),
                  static_cast<long long>(r.l), static_cast<long long>(r.k),
                  static_cast<long long>(r.r), r.q, r.wall_seconds,
                  static_cast<long long>(r.metered_upload),
                  static_cast<long long>(r.metered_download),
                  static_cast<long long>(r.metered_total),
                  static_cast<long long>(r.exact_total),
                  r.frsvd_formula_per_user, r.fsvd_formula);
    out << buf;
  }
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  ExperimentReport report;
  if (cfg.experiment == "simulate") {
    report.benchmark = run_simulate(cfg);
  } else if (cfg.experiment == "cmapss") {
    report.benchmark = run_cmapss(cfg);
  } else if (cfg.experiment == "costbench") {
    report.cost_rows = run_costbench(cfg);
  } else {
    throw ConfigError("unknown experiment '" + cfg.experiment + "'");
  }

  std::error_code ec;
  std::filesystem::create_directories(cfg.output_dir, ec);
  if (ec) {
    throw InputError("cannot create output directory " + cfg.output_dir.string() +
                     ": " + ec.message());
  }
  auto path = [&](const char* name) {
    report.files.push_back((cfg.output_dir / name).string());
    return cfg.output_dir / name;
  };
  if (cfg.experiment == "costbench") {
    auto out = open_out(path("cost.csv"));
    write_cost_csv(out, report.cost_rows);
    return report;
  }
  {
    auto out = open_out(path("records.csv"));
    write_records_csv(out, report.benchmark.records);
  }
  {
    auto out = open_out(path("transcript.jsonl"));
    for (const auto& [test_id, t] : report.benchmark.transcript) {
      Json j;
      j["test_id"] = test_id;
      j["round"] = t.round;
      j["direction"] = to_string(t.direction);
      j["from"] = t.from;
      j["to"] = t.to;
      j["label"] = t.label;
      j["float_count"] = t.float_count;
      out << j.dump() << '\n';
    }
  }
  {
    auto out = open_out(path("summary.json"));
    write_summary_json(out, cfg, report.benchmark);
  }
  return report;
}

}  // namespace fedprog
