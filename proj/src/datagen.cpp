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

#include "fedprog/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <string>

#include <boost/random/beta_distribution.hpp>

#include "fedprog/errors.hpp"

namespace fedprog {
namespace {

constexpr double kLengthSlack = 1e-9;

struct Latent {
  double c;
  double ttf;
  int full;
};

Latent draw_latent(const SimConfig& cfg, Engine& engine) {
  std::normal_distribution<double> c_dist(cfg.c_mean, cfg.c_sd);
  std::normal_distribution<double> eps_dist(0.0, cfg.ttf_noise_sd);
  while (true) {
    const double c = c_dist(engine);
    const double ttf = ttf_from_latent(c, eps_dist(engine), cfg.threshold_d);
    if (c <= 0.0 || ttf >= 1.0) continue;
    const int full = full_length(ttf, cfg.dt);
    if (full < 2) continue;
    return {c, ttf, full};
  }
}

Asset observe(const SimConfig& cfg, Engine& engine, const Latent& latent,
              int trunc_len, double fraction) {
  std::normal_distribution<double> noise(0.0, cfg.obs_noise_sd);
  Asset a;
  a.c = latent.c;
  a.ttf = latent.ttf;
  a.full_len = latent.full;
  a.trunc_len = trunc_len;
  a.fraction = fraction;
  a.signal.resize(trunc_len);
  // Draw noise for the full path so the observed prefix does not depend on
  // where truncation happens.
  for (int k = 1; k <= latent.full; ++k) {
    const double value = noiseless_signal(latent.c, k * cfg.dt) + noise(engine);
    if (k <= trunc_len) a.signal(k - 1) = value;
  }
  return a;
}

}  // namespace

void SimConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("sim: " + m); };
  if (n_users < 1) fail("n_users must be >= 1");
  if (samples_low < 2) fail("samples_low must be >= 2");
  if (samples_high < samples_low) fail("samples_high < samples_low");
  if (!(c_sd > 0 && ttf_noise_sd > 0 && obs_noise_sd > 0)) {
    fail("standard deviations must be > 0");
  }
  if (!(dt > 0 && dt < 1)) fail("dt must lie in (0, 1)");
  if (!(threshold_d > 0)) fail("threshold_d must be > 0");
  if (!(trunc_alpha > 0 && trunc_beta > 0)) fail("beta shape must be > 0");
  if (test_fractions.empty()) fail("test_fractions is empty");
  for (double f : test_fractions) {
    if (!(f > 0 && f <= 1)) fail("test fractions must lie in (0, 1]");
  }
  if (n_test < 1) fail("n_test must be >= 1");
}

double ttf_from_latent(double c, double eps, double threshold_d) {
  return std::exp(-c / threshold_d + eps);
}

int full_length(double ttf, double dt) {
  return static_cast<int>(std::floor(ttf / dt + kLengthSlack));
}

int truncation_length(double z, int full) {
  const int len = static_cast<int>(std::ceil(z * full - kLengthSlack));
  return std::clamp(len, 1, full);
}

double noiseless_signal(double c, double tau) { return -c / std::log(tau); }

Asset sample_asset(const SimConfig& cfg, Engine& engine) {
  const Latent latent = draw_latent(cfg, engine);
  boost::random::beta_distribution<double> beta(cfg.trunc_alpha,
                                                cfg.trunc_beta);
  const double z = beta(engine);
  return observe(cfg, engine, latent, truncation_length(z, latent.full), 0.0);
}

Asset sample_asset(const SimConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Engine engine = make_engine(seed, Stream::kTrainingAsset);
  return sample_asset(cfg, engine);
}

Asset sample_asset_at(const SimConfig& cfg, Engine& engine, double fraction) {
  if (!(fraction > 0 && fraction <= 1)) {
    throw ConfigError("sample_asset_at: fraction must lie in (0, 1]");
  }
  const Latent latent = draw_latent(cfg, engine);
  return observe(cfg, engine, latent,
                 truncation_length(fraction, latent.full), fraction);
}

Population generate_population(const SimConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Population population(cfg.n_users);
  for (int i = 0; i < cfg.n_users; ++i) {
    Engine size_engine =
        make_engine(seed, Stream::kUserSize, {static_cast<std::uint64_t>(i)});
    std::uniform_int_distribution<int> count(cfg.samples_low,
                                             cfg.samples_high);
    const int j_i = count(size_engine);
    population[i].reserve(j_i);
    for (int j = 0; j < j_i; ++j) {
      Engine engine = make_engine(seed, Stream::kTrainingAsset,
                                  {static_cast<std::uint64_t>(i),
                                   static_cast<std::uint64_t>(j)});
      population[i].push_back(sample_asset(cfg, engine));
    }
  }
  return population;
}

std::vector<Asset> generate_test_set(const SimConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const int groups = static_cast<int>(cfg.test_fractions.size());
  if (cfg.n_test % groups != 0) {
    throw ConfigError("n_test (" + std::to_string(cfg.n_test) +
                      ") is not divisible by the number of test fractions (" +
                      std::to_string(groups) + ")");
  }
  const int per_group = cfg.n_test / groups;
  std::vector<Asset> out;
  out.reserve(cfg.n_test);
  for (int t = 0; t < cfg.n_test; ++t) {
    Engine engine =
        make_engine(seed, Stream::kTestAsset, {static_cast<std::uint64_t>(t)});
    out.push_back(sample_asset_at(cfg, engine, cfg.test_fractions[t / per_group]));
  }
  return out;
}

void export_population_csv(const Population& population, double dt,
                           const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < population.size(); ++i) {
    const std::string stem = "user_" + std::to_string(i);
    std::ofstream signals(dir / (stem + ".csv"));
    std::ofstream assets(dir / (stem + "_assets.csv"));
    if (!signals || !assets) {
      throw InputError("cannot write population files under " + dir.string());
    }
    signals.precision(17);
    assets.precision(17);
    signals << "asset_id,tau,value\n";
    assets << "asset_id,ttf,trunc_len\n";
    for (std::size_t j = 0; j < population[i].size(); ++j) {
      const Asset& a = population[i][j];
      assets << j << ',' << a.ttf << ',' << a.trunc_len << '\n';
      for (int k = 0; k < a.trunc_len; ++k) {
        signals << j << ',' << (k + 1) * dt << ',' << a.signal(k) << '\n';
      }
    }
  }
}

}  // namespace fedprog
