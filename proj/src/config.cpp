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

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "fedprog/errors.hpp"
#include "fedprog/experiments.hpp"

namespace fedprog {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  const std::string v = trim(text);
  T out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    throw ConfigError("bad value for " + key + ": '" + text + "'");
  }
  return out;
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
  std::vector<T> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (trim(item).empty()) continue;
    out.push_back(parse_number<T>(key, item));
  }
  if (out.empty()) throw ConfigError("empty list for " + key);
  return out;
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << v[i];
  return out.str();
}

template <typename T>
std::string show(const T& v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

struct Entry {
  std::string key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define FEDPROG_NUMBER(KEY, FIELD, TYPE)                                  \
  Entry {                                                                 \
    KEY,                                                                  \
        [](ExperimentConfig& c, const std::string& v) {                   \
          c.FIELD = parse_number<TYPE>(KEY, v);                           \
        },                                                                \
        [](const ExperimentConfig& c) { return show(c.FIELD); }           \
  }

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      {"experiment",
       [](ExperimentConfig& c, const std::string& v) {
         const std::string e = trim(v);
         if (e != "simulate" && e != "cmapss" && e != "costbench") {
           throw ConfigError("experiment must be simulate, cmapss or costbench");
         }
         c.experiment = e;
       },
       [](const ExperimentConfig& c) { return c.experiment; }},
      FEDPROG_NUMBER("seed", seed, std::uint64_t),
      {"output_dir",
       [](ExperimentConfig& c, const std::string& v) { c.output_dir = trim(v); },
       [](const ExperimentConfig& c) { return c.output_dir.string(); }},
      {"methods",
       [](ExperimentConfig& c, const std::string& v) {
         std::vector<Method> methods;
         std::stringstream in(v);
         std::string item;
         while (std::getline(in, item, ',')) {
           if (!trim(item).empty()) methods.push_back(parse_method(trim(item)));
         }
         if (methods.empty()) throw ConfigError("methods is empty");
         c.methods = methods;
       },
       [](const ExperimentConfig& c) {
         std::string out;
         for (std::size_t i = 0; i < c.methods.size(); ++i) {
           out += (i ? "," : "") + std::string(to_string(c.methods[i]));
         }
         return out;
       }},
      {"group_sizes",
       [](ExperimentConfig& c, const std::string& v) {
         c.group_sizes = parse_list<int>("group_sizes", v);
       },
       [](const ExperimentConfig& c) { return join(c.group_sizes); }},
      {"cmapss.train",
       [](ExperimentConfig& c, const std::string& v) { c.cmapss_train = trim(v); },
       [](const ExperimentConfig& c) { return c.cmapss_train.string(); }},
      {"cmapss.test",
       [](ExperimentConfig& c, const std::string& v) { c.cmapss_test = trim(v); },
       [](const ExperimentConfig& c) { return c.cmapss_test.string(); }},
      {"cmapss.rul",
       [](ExperimentConfig& c, const std::string& v) { c.cmapss_rul = trim(v); },
       [](const ExperimentConfig& c) { return c.cmapss_rul.string(); }},
      FEDPROG_NUMBER("sim.n_users", sim.n_users, int),
      FEDPROG_NUMBER("sim.samples_low", sim.samples_low, int),
      FEDPROG_NUMBER("sim.samples_high", sim.samples_high, int),
      FEDPROG_NUMBER("sim.c_mean", sim.c_mean, double),
      FEDPROG_NUMBER("sim.c_sd", sim.c_sd, double),
      FEDPROG_NUMBER("sim.threshold_d", sim.threshold_d, double),
      FEDPROG_NUMBER("sim.ttf_noise_sd", sim.ttf_noise_sd, double),
      FEDPROG_NUMBER("sim.obs_noise_sd", sim.obs_noise_sd, double),
      FEDPROG_NUMBER("sim.dt", sim.dt, double),
      FEDPROG_NUMBER("sim.trunc_alpha", sim.trunc_alpha, double),
      FEDPROG_NUMBER("sim.trunc_beta", sim.trunc_beta, double),
      FEDPROG_NUMBER("sim.n_test", sim.n_test, int),
      {"sim.test_fractions",
       [](ExperimentConfig& c, const std::string& v) {
         c.sim.test_fractions = parse_list<double>("sim.test_fractions", v);
       },
       [](const ExperimentConfig& c) { return join(c.sim.test_fractions); }},
      FEDPROG_NUMBER("pipeline.frsvd.r", pipeline.frsvd.r, Index),
      FEDPROG_NUMBER("pipeline.frsvd.q", pipeline.frsvd.q, int),
      FEDPROG_NUMBER("pipeline.frsvd.k_cap", pipeline.frsvd.k_cap, Index),
      FEDPROG_NUMBER("pipeline.fve_threshold", pipeline.fve_threshold, double),
      {"pipeline.dist",
       [](ExperimentConfig& c, const std::string& v) {
         c.pipeline.dist = parse_distribution(trim(v));
       },
       [](const ExperimentConfig& c) { return std::string(to_string(c.pipeline.dist)); }},
      FEDPROG_NUMBER("pipeline.gd.alpha", pipeline.gd.alpha, double),
      FEDPROG_NUMBER("pipeline.gd.delta", pipeline.gd.delta, double),
      FEDPROG_NUMBER("pipeline.gd.max_iters", pipeline.gd.max_iters, std::int64_t),
      FEDPROG_NUMBER("pipeline.gd.divergence_window", pipeline.gd.divergence_window,
                     int),
      FEDPROG_NUMBER("pipeline.threads", pipeline.threads, int),
      FEDPROG_NUMBER("output.transcript_retention", pipeline.transcript_retention,
                     std::size_t),
      {"costbench.user_counts",
       [](ExperimentConfig& c, const std::string& v) {
         c.costbench.user_counts = parse_list<int>("costbench.user_counts", v);
       },
       [](const ExperimentConfig& c) { return join(c.costbench.user_counts); }},
      FEDPROG_NUMBER("costbench.signal_length", costbench.signal_length, Index),
      FEDPROG_NUMBER("costbench.k", costbench.k, Index),
  };
  return table;
}

#undef FEDPROG_NUMBER

}  // namespace

ExperimentConfig default_experiment_config() {
  ExperimentConfig cfg;
  cfg.pipeline.transcript_retention = 2000;
  return cfg;
}

void apply_setting(ExperimentConfig& cfg, const std::string& key,
                   const std::string& value) {
  const std::string k = trim(key);
  for (const auto& e : entries()) {
    if (e.key == k) {
      e.set(cfg, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + k + "'");
}

void apply_config_text(ExperimentConfig& cfg, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected key = value");
    }
    apply_setting(cfg, line.substr(0, eq), line.substr(eq + 1));
  }
}

void apply_config_file(ExperimentConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  apply_config_text(cfg, buf.str());
}

std::map<std::string, std::string> describe_config(const ExperimentConfig& cfg) {
  std::map<std::string, std::string> out;
  for (const auto& e : entries()) out[e.key] = e.get(cfg);
  return out;
}

}  // namespace fedprog
