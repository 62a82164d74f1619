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
#include <initializer_list>
#include <random>
#include <string_view>
#include <vector>

namespace fedprog {

using Engine = std::mt19937_64;

// Named substream tags. Every random draw in the toolkit comes from an engine
// seeded by (top-level seed, tag, indices...), so streams never overlap and
// adding users or test cases does not perturb existing ones.
enum class Stream : std::uint64_t {
  kGaussian = 1,
  kOrthogonal = 2,
  kUserSize = 3,
  kTrainingAsset = 4,
  kTestAsset = 5,
  kSketch = 6,
  kMask = 7,
  kThetaInit = 8,
  kPartition = 9,
};

// Engine for the substream identified by `seed`, `tag` and `path`.
inline Engine make_engine(std::uint64_t seed, Stream tag,
                          std::initializer_list<std::uint64_t> path = {}) {
  std::vector<std::uint32_t> words;
  words.reserve(4 + 2 * path.size());
  auto push = [&words](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(seed);
  push(static_cast<std::uint64_t>(tag));
  for (auto p : path) push(p);
  std::seed_seq seq(words.begin(), words.end());
  return Engine(seq);
}

// Derives a child seed; used where an API takes a plain integer seed.
inline std::uint64_t derive_seed(std::uint64_t seed, Stream tag,
                                 std::initializer_list<std::uint64_t> path = {}) {
  Engine e = make_engine(seed, tag, path);
  return e();
}

}  // namespace fedprog
