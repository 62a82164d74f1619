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

#include "fedprog/cmapss.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>

#include "fedprog/errors.hpp"
#include "fedprog/random.hpp"

namespace fedprog {
namespace {

std::vector<double> split_numbers(const std::string& line, std::int64_t line_no) {
  std::vector<double> out;
  std::istringstream fields(line);
  std::string token;
  while (fields >> token) {
    double value = 0.0;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
      throw ParseError("line " + std::to_string(line_no) +
                           ": non-numeric field '" + token + "'",
                       line_no);
    }
    out.push_back(value);
  }
  return out;
}

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return in;
}

Fd001Dataset keep_columns(const Fd001Dataset& ds, const std::vector<int>& ids) {
  Fd001Dataset out = ds;
  auto reduce = [&ids](std::vector<EngineRecord>& engines) {
    for (auto& e : engines) {
      Matrix kept(e.n_cycles, static_cast<Index>(ids.size()));
      for (std::size_t c = 0; c < ids.size(); ++c) {
        auto it = std::find(e.sensor_ids.begin(), e.sensor_ids.end(), ids[c]);
        kept.col(static_cast<Index>(c)) =
            e.sensors.col(static_cast<Index>(it - e.sensor_ids.begin()));
      }
      e.sensors = std::move(kept);
      e.sensor_ids = ids;
    }
  };
  reduce(out.train);
  reduce(out.test);
  out.sensors_selected = true;
  return out;
}

}  // namespace

double Fd001Dataset::test_ttf(std::size_t i) const {
  return static_cast<double>(test.at(i).n_cycles + rul.at(i));
}

std::vector<EngineRecord> parse_engine_file(std::istream& in) {
  std::map<int, std::size_t> slot;
  std::vector<std::vector<std::vector<double>>> rows;
  std::vector<int> units;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    std::vector<double> v = split_numbers(line, line_no);
    if (v.size() != kCmapssColumnCount) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                           std::to_string(kCmapssColumnCount) +
                           " fields, found " + std::to_string(v.size()),
                       line_no);
    }
    const int unit = static_cast<int>(v[0]);
    const int cycle = static_cast<int>(v[1]);
    auto [it, inserted] = slot.try_emplace(unit, rows.size());
    if (inserted) {
      rows.emplace_back();
      units.push_back(unit);
    }
    auto& engine_rows = rows[it->second];
    if (cycle != static_cast<int>(engine_rows.size()) + 1) {
      throw ParseError("line " + std::to_string(line_no) + ": unit " +
                           std::to_string(unit) + " cycle " +
                           std::to_string(cycle) + " out of sequence",
                       line_no);
    }
    engine_rows.push_back(std::move(v));
  }
  std::vector<EngineRecord> out;
  out.reserve(rows.size());
  for (std::size_t e = 0; e < rows.size(); ++e) {
    EngineRecord rec;
    rec.unit_id = units[e];
    rec.n_cycles = static_cast<int>(rows[e].size());
    rec.op_settings.resize(rec.n_cycles, 3);
    rec.sensors.resize(rec.n_cycles, kCmapssSensorCount);
    for (int t = 0; t < rec.n_cycles; ++t) {
      for (int s = 0; s < 3; ++s) rec.op_settings(t, s) = rows[e][t][2 + s];
      for (int s = 0; s < kCmapssSensorCount; ++s) {
        rec.sensors(t, s) = rows[e][t][5 + s];
      }
    }
    rec.sensor_ids.resize(kCmapssSensorCount);
    std::iota(rec.sensor_ids.begin(), rec.sensor_ids.end(), 1);
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<int> parse_rul_file(std::istream& in) {
  std::vector<int> out;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    std::vector<double> v = split_numbers(line, line_no);
    if (v.size() != 1 || v[0] < 0 || v[0] != std::floor(v[0])) {
      throw ParseError("line " + std::to_string(line_no) +
                           ": expected one non-negative integer",
                       line_no);
    }
    out.push_back(static_cast<int>(v[0]));
  }
  return out;
}

Fd001Dataset parse_cmapss(std::istream& train, std::istream& test,
                          std::istream& rul) {
  Fd001Dataset ds;
  ds.train = parse_engine_file(train);
  ds.test = parse_engine_file(test);
  ds.rul = parse_rul_file(rul);
  if (ds.rul.size() != ds.test.size()) {
    throw ConsistencyError("RUL file has " + std::to_string(ds.rul.size()) +
                           " entries but the test file has " +
                           std::to_string(ds.test.size()) + " engines");
  }
  return ds;
}

Fd001Dataset parse_cmapss(const std::filesystem::path& train_path,
                          const std::filesystem::path& test_path,
                          const std::filesystem::path& rul_path) {
  std::ifstream train = open_or_throw(train_path);
  std::ifstream test = open_or_throw(test_path);
  std::ifstream rul = open_or_throw(rul_path);
  return parse_cmapss(train, test, rul);
}

Fd001Dataset select_sensors(const Fd001Dataset& ds) {
  if (ds.sensors_selected) {
    throw ConsistencyError("select_sensors: sensors already selected");
  }
  return keep_columns(ds, std::vector<int>(std::begin(kFd001InformativeSensors),
                                           std::end(kFd001InformativeSensors)));
}

Fd001Dataset select_sensors_by_variance(const Fd001Dataset& ds,
                                        double tolerance) {
  if (ds.sensors_selected) {
    throw ConsistencyError("select_sensors: sensors already selected");
  }
  if (ds.train.empty()) throw InputError("select_sensors: no training engines");
  const Index width = ds.train.front().sensors.cols();
  Vector sum = Vector::Zero(width);
  Vector sum_sq = Vector::Zero(width);
  double count = 0;
  for (const auto& e : ds.train) {
    sum += e.sensors.colwise().sum().transpose();
    sum_sq += e.sensors.array().square().colwise().sum().matrix().transpose();
    count += e.n_cycles;
  }
  std::vector<int> ids;
  for (Index s = 0; s < width; ++s) {
    const double mean = sum(s) / count;
    const double var = sum_sq(s) / count - mean * mean;
    if (var > tolerance) ids.push_back(ds.train.front().sensor_ids[s]);
  }
  return keep_columns(ds, ids);
}

std::vector<std::vector<int>> partition_indices(int n, std::span<const int> sizes,
                                                std::uint64_t seed) {
  long total = 0;
  for (int s : sizes) {
    if (s < 0) throw ConfigError("partition: negative group size");
    total += s;
  }
  if (total != n) {
    throw ConfigError("partition: group sizes sum to " + std::to_string(total) +
                      " but there are " + std::to_string(n) + " engines");
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Engine engine = make_engine(seed, Stream::kPartition);
  std::shuffle(order.begin(), order.end(), engine);
  std::vector<std::vector<int>> groups;
  auto it = order.begin();
  for (int s : sizes) {
    groups.emplace_back(it, it + s);
    it += s;
  }
  return groups;
}

std::vector<std::vector<EngineRecord>> partition_users(
    const std::vector<EngineRecord>& engines, std::span<const int> sizes,
    std::uint64_t seed) {
  const auto groups =
      partition_indices(static_cast<int>(engines.size()), sizes, seed);
  std::vector<std::vector<EngineRecord>> out;
  for (const auto& g : groups) {
    auto& users = out.emplace_back();
    for (int idx : g) users.push_back(engines[idx]);
  }
  return out;
}

}  // namespace fedprog
