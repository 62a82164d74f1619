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
#include <stdexcept>
#include <string>

namespace fedprog {

// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// Raised when a matrix is numerically rank deficient. Carries the detected
// rank so callers can report it or adjust the sketch width.
class RankError : public Error {
 public:
  RankError(const std::string& what, std::int64_t detected_rank)
      : Error(what), detected_rank_(detected_rank) {}
  std::int64_t detected_rank() const { return detected_rank_; }

 private:
  std::int64_t detected_rank_;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ConsistencyError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class DegenerateSpectrumError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
};

// A protocol run or transcript violated the sanctioned upload set.
class AuditError : public Error {
 public:
  using Error::Error;
};

// Parse failure in an input file; line is 1-based, 0 when not applicable.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::int64_t line)
      : Error(what), line_(line) {}
  std::int64_t line() const { return line_; }

 private:
  std::int64_t line_;
};

// A user's local computation failed and the federated round was aborted.
class RoundAbortedError : public Error {
 public:
  RoundAbortedError(const std::string& what, int user_id)
      : Error(what), user_id_(user_id) {}
  int user_id() const { return user_id_; }

 private:
  int user_id_;
};

}  // namespace fedprog
