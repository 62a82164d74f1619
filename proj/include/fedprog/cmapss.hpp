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
#include <istream>
#include <span>
#include <vector>

#include "fedprog/linalg.hpp"

namespace fedprog {

inline constexpr int kCmapssSensorCount = 21;
inline constexpr int kCmapssColumnCount = 26;

// 1-based sensor numbers kept for FD001; the other seven are flat.
inline constexpr int kFd001InformativeSensors[] = {2,  3,  4,  7,  8,  9, 11,
                                                   12, 13, 14, 15, 17, 20, 21};

struct EngineRecord {
  int unit_id = 0;
  int n_cycles = 0;
  Matrix sensors;      // n_cycles x (21, or fewer after selection)
  Matrix op_settings;  // n_cycles x 3
  std::vector<int> sensor_ids;  // 1-based ids of the sensors columns
};

struct Fd001Dataset {
  std::vector<EngineRecord> train;
  std::vector<EngineRecord> test;
  std::vector<int> rul;
  bool sensors_selected = false;

  // Observed cycles plus remaining cycles for test engine i.
  double test_ttf(std::size_t i) const;
};

// Parses one whitespace-separated file of 26 numeric columns into engines,
// grouped by unit id in order of first appearance.
std::vector<EngineRecord> parse_engine_file(std::istream& in);
std::vector<int> parse_rul_file(std::istream& in);

Fd001Dataset parse_cmapss(std::istream& train, std::istream& test,
                          std::istream& rul);
Fd001Dataset parse_cmapss(const std::filesystem::path& train_path,
                          const std::filesystem::path& test_path,
                          const std::filesystem::path& rul_path);

// Keeps the fixed informative sensor list. Throws ConsistencyError when the
// dataset has already been reduced.
Fd001Dataset select_sensors(const Fd001Dataset& ds);

// Alternative selection for other subsets: drops sensors whose variance over
// all training cycles is at most `tolerance`.
Fd001Dataset select_sensors_by_variance(const Fd001Dataset& ds,
                                        double tolerance = 1e-8);

// Seeded uniform shuffle of [0, n) split into consecutive groups of `sizes`.
std::vector<std::vector<int>> partition_indices(int n, std::span<const int> sizes,
                                                std::uint64_t seed);
std::vector<std::vector<EngineRecord>> partition_users(
    const std::vector<EngineRecord>& engines, std::span<const int> sizes,
    std::uint64_t seed);

}  // namespace fedprog
