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
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "fedprog/datagen.hpp"
#include "fedprog/errors.hpp"

namespace fedprog {
namespace {

TEST(DatagenArithmeticTest, TtfFromLatent) {
  EXPECT_NEAR(ttf_from_latent(2.0, 0.0, 2.0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(ttf_from_latent(2.0, 0.0, 2.0), 0.367879, 1e-6);
  EXPECT_NEAR(ttf_from_latent(1.0, 0.0, 2.0), 0.606531, 1e-6);
}

TEST(DatagenArithmeticTest, Lengths) {
  const double ttf = ttf_from_latent(1.0, 0.0, 2.0);
  EXPECT_EQ(full_length(ttf, 0.001), 606);
  EXPECT_EQ(truncation_length(0.5, 606), 303);
  EXPECT_EQ(truncation_length(0.1, 606), 61);
  EXPECT_EQ(truncation_length(1.0, 606), 606);
  EXPECT_EQ(truncation_length(1e-9, 606), 1);
  EXPECT_EQ(full_length(0.3, 0.001), 300);
}

TEST(DatagenArithmeticTest, NoiselessSignal) {
  EXPECT_NEAR(noiseless_signal(1.0, 0.5), 1.442695, 1e-6);
}

TEST(SimConfigTest, Validation) {
  SimConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.samples_low = 1;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = SimConfig{};
  cfg.obs_noise_sd = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = SimConfig{};
  cfg.dt = 1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = SimConfig{};
  cfg.test_fractions = {0.0};
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(SampleAssetTest, InvariantsHold) {
  SimConfig cfg;
  Engine engine = make_engine(3, Stream::kTrainingAsset);
  for (int i = 0; i < 2000; ++i) {
    const Asset a = sample_asset(cfg, engine);
    ASSERT_GT(a.c, 0.0);
    ASSERT_GT(a.ttf, 0.0);
    ASSERT_LT(a.ttf, 1.0);
    ASSERT_EQ(a.full_len, full_length(a.ttf, cfg.dt));
    ASSERT_GE(a.full_len, 2);
    ASSERT_GE(a.trunc_len, 1);
    ASSERT_LE(a.trunc_len, a.full_len);
    ASSERT_EQ(a.signal.size(), a.trunc_len);
  }
}

TEST(SampleAssetTest, NoiselessSignalWhenNoiseTiny) {
  SimConfig cfg;
  cfg.obs_noise_sd = 1e-12;
  const Asset a = sample_asset(cfg, 5);
  for (int k = 0; k < a.trunc_len; ++k) {
    EXPECT_NEAR(a.signal(k), noiseless_signal(a.c, (k + 1) * cfg.dt), 1e-9);
  }
}

TEST(SampleAssetTest, PopulationMoments) {
  SimConfig cfg;
  Engine engine = make_engine(11, Stream::kTrainingAsset);
  constexpr int kDraws = 100000;
  double sum_c = 0, sum_c2 = 0, sum_log = 0, sum_ratio = 0;
  for (int i = 0; i < kDraws; ++i) {
    const Asset a = sample_asset(cfg, engine);
    sum_c += a.c;
    sum_c2 += a.c * a.c;
    sum_log += std::log(a.ttf);
    sum_ratio += static_cast<double>(a.trunc_len) / a.full_len;
  }
  const double mean_c = sum_c / kDraws;
  const double sd_c = std::sqrt((sum_c2 - kDraws * mean_c * mean_c) / (kDraws - 1));
  EXPECT_NEAR(mean_c, 1.0, 0.01);
  EXPECT_NEAR(sd_c, 0.25, 0.01);
  EXPECT_NEAR(sum_log / kDraws, -mean_c / 2.0, 0.01);
  EXPECT_NEAR(sum_ratio / kDraws, 0.4, 0.02);
}

TEST(GeneratePopulationTest, DefaultBounds) {
  SimConfig cfg;
  const Population pop = generate_population(cfg, 1);
  ASSERT_EQ(pop.size(), 100u);
  for (const auto& user : pop) {
    EXPECT_GE(user.size(), 2u);
    EXPECT_LE(user.size(), 20u);
  }
}

TEST(GeneratePopulationTest, DegenerateBounds) {
  SimConfig cfg;
  cfg.n_users = 1;
  cfg.samples_low = cfg.samples_high = 2;
  const Population pop = generate_population(cfg, 4);
  ASSERT_EQ(pop.size(), 1u);
  EXPECT_EQ(pop[0].size(), 2u);
}

TEST(GeneratePopulationTest, Deterministic) {
  SimConfig cfg;
  cfg.n_users = 10;
  const Population a = generate_population(cfg, 9);
  const Population b = generate_population(cfg, 9);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a[i].size(), b[i].size());
    for (std::size_t j = 0; j < a[i].size(); ++j) {
      EXPECT_EQ(a[i][j].ttf, b[i][j].ttf);
      EXPECT_EQ(a[i][j].signal, b[i][j].signal);
    }
  }
}

TEST(GeneratePopulationTest, StableUnderUserCountChange) {
  SimConfig small;
  small.n_users = 5;
  SimConfig large;
  large.n_users = 50;
  const Population a = generate_population(small, 2);
  const Population b = generate_population(large, 2);
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a[i].size(), b[i].size());
    for (std::size_t j = 0; j < a[i].size(); ++j) {
      EXPECT_EQ(a[i][j].signal, b[i][j].signal);
    }
  }
}

TEST(GenerateTestSetTest, FivePerFraction) {
  SimConfig cfg;
  const std::vector<Asset> tests = generate_test_set(cfg, 1);
  ASSERT_EQ(tests.size(), 50u);
  for (std::size_t t = 0; t < tests.size(); ++t) {
    const double f = cfg.test_fractions[t / 5];
    EXPECT_EQ(tests[t].fraction, f);
    EXPECT_EQ(tests[t].trunc_len, truncation_length(f, tests[t].full_len));
  }
}

TEST(GenerateTestSetTest, FullFractionKeepsWholePath) {
  SimConfig cfg;
  cfg.n_test = 3;
  cfg.test_fractions = {1.0};
  for (const Asset& a : generate_test_set(cfg, 8)) {
    EXPECT_EQ(a.trunc_len, a.full_len);
  }
}

TEST(GenerateTestSetTest, IndivisibleCountRejected) {
  SimConfig cfg;
  cfg.n_test = 49;
  EXPECT_THROW(generate_test_set(cfg, 1), ConfigError);
}

TEST(ExportPopulationTest, WritesCompanionFiles) {
  SimConfig cfg;
  cfg.n_users = 2;
  const Population pop = generate_population(cfg, 3);
  const auto dir = std::filesystem::temp_directory_path() / "fedprog_export_test";
  std::filesystem::remove_all(dir);
  export_population_csv(pop, cfg.dt, dir);
  std::ifstream assets(dir / "user_1_assets.csv");
  std::string header;
  std::getline(assets, header);
  EXPECT_EQ(header, "asset_id,ttf,trunc_len");
  int rows = 0;
  for (std::string line; std::getline(assets, line);) ++rows;
  EXPECT_EQ(rows, static_cast<int>(pop[1].size()));
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace fedprog
