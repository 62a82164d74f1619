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
#include <vector>

#include "fedprog/linalg.hpp"
#include "fedprog/random.hpp"

namespace fedprog {

// Parameters of the synthetic single-sensor degradation population.
struct SimConfig {
  int n_users = 100;
  int samples_low = 2;
  int samples_high = 20;
  double c_mean = 1.0;
  double c_sd = 0.25;
  double threshold_d = 2.0;
  double ttf_noise_sd = 0.025;
  double obs_noise_sd = 0.05;
  double dt = 0.001;
  double trunc_alpha = 2.0;
  double trunc_beta = 3.0;
  int n_test = 50;
  std::vector<double> test_fractions = {0.1, 0.2, 0.3, 0.4, 0.5,
                                        0.6, 0.7, 0.8, 0.9, 0.95};

  // Throws ConfigError on any violated invariant.
  void validate() const;
};

struct Asset {
  double c = 0.0;
  double ttf = 0.0;
  Vector signal;      // observations at tau = dt, 2dt, ..., trunc_len * dt
  int full_len = 0;   // floor(ttf / dt)
  int trunc_len = 0;  // == signal.size()
  double fraction = 0.0;  // truncation fraction for test assets, 0 otherwise

  // Elapsed observation time of the retained signal.
  double elapsed(double dt) const { return trunc_len * dt; }
};

using Population = std::vector<std::vector<Asset>>;

double ttf_from_latent(double c, double eps, double threshold_d);
int full_length(double ttf, double dt);
// ceil(z * full), kept within [1, full].
int truncation_length(double z, int full);
double noiseless_signal(double c, double tau);

// A training asset truncated at a Beta-distributed fraction of its life.
Asset sample_asset(const SimConfig& cfg, std::uint64_t seed);
Asset sample_asset(const SimConfig& cfg, Engine& engine);
// An asset truncated at exactly ceil(fraction * full length) observations.
Asset sample_asset_at(const SimConfig& cfg, Engine& engine, double fraction);

Population generate_population(const SimConfig& cfg, std::uint64_t seed);
std::vector<Asset> generate_test_set(const SimConfig& cfg, std::uint64_t seed);

// One user_<i>.csv (asset_id,tau,value) and user_<i>_assets.csv
// (asset_id,ttf,trunc_len) per user.
void export_population_csv(const Population& population, double dt,
                           const std::filesystem::path& dir);

}  // namespace fedprog
