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
#include <functional>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "fedprog/linalg.hpp"

namespace fedprog {

inline constexpr const char* kServer = "server";
inline constexpr const char* kMaskingServer = "masking_server";

// Participant id of user `user_id` as it appears in transcripts.
std::string user_participant(int user_id);

// One user's private data. Neither field is ever placed in a transfer.
struct UserState {
  int user_id = 0;
  Matrix signals;  // J_i x L
  Vector ttfs;     // J_i
};

enum class Direction { kUpload, kDownload };

const char* to_string(Direction d);

struct Transfer {
  std::int64_t round = 0;
  Direction direction = Direction::kDownload;
  std::string from;
  std::string to;
  std::string label;
  std::int64_t float_count = 0;
  Index rows = 0;
  Index cols = 0;
  int user_id = -1;  // the user endpoint, or -1 for server-to-server traffic
};

struct CostMeter {
  std::int64_t total_upload = 0;
  std::int64_t total_download = 0;
  std::int64_t rounds = 0;
  std::int64_t transfers = 0;
  std::map<int, std::int64_t> user_upload;
  std::map<int, std::int64_t> user_download;

  std::int64_t total() const { return total_upload + total_download; }
  void add(const Transfer& t);
  // Adds counts[i] for user sorted_ids[i]; ids must be ascending.
  void add_batch(Direction d, const std::vector<int>& sorted_ids,
                 const std::vector<std::int64_t>& counts);
  void merge(const CostMeter& other);
};

// Ordered record of simulated transfers. The meter counts every transfer;
// `retention` bounds how many Transfer entries are stored (long gradient
// descent runs produce millions of them).
class Transcript {
 public:
  static constexpr std::size_t kKeepAll = std::numeric_limits<std::size_t>::max();

  explicit Transcript(std::size_t retention = kKeepAll) : retention_(retention) {}

  void record(Transfer t);
  // Records one transfer of a rows x cols payload in the current round.
  void record(Direction d, const std::string& from, const std::string& to,
              const std::string& label, Index rows, Index cols, int user_id);

  // Meter-only accounting for a batch of user transfers, used once nothing
  // more will be stored.
  void count_batch(Direction d, const std::vector<int>& sorted_ids,
                   const std::vector<std::int64_t>& counts);
  bool storing() const { return transfers_.size() < retention_; }

  std::int64_t round() const { return round_; }
  void next_round();

  const std::vector<Transfer>& transfers() const { return transfers_; }
  const CostMeter& meter() const { return meter_; }
  // True when some transfers were counted but not stored.
  bool truncated() const { return dropped_ > 0; }

  // JSON lines: {round, direction, from, to, label, float_count}.
  void write_jsonl(std::ostream& out) const;

 private:
  std::size_t retention_;
  std::size_t dropped_ = 0;
  std::int64_t round_ = 0;
  std::vector<Transfer> transfers_;
  CostMeter meter_;
};

// Synchronous rounds between a coordinator and registered users. Each user
// computation is wrapped so that a local failure aborts the round with the
// user identified; uploads are collected in ascending user-id order.
class Federation {
 public:
  // Writes the user's upload into `upload`, whose storage is reused across
  // rounds.
  using Compute = std::function<void(std::size_t index, const Matrix& broadcast,
                                     Matrix& upload)>;
  // Receives the uploads in ascending user-id order.
  using Aggregate = std::function<Matrix(const std::vector<const Matrix*>& uploads)>;

  // `user_ids` must be distinct; they are processed sorted ascending.
  Federation(std::vector<int> user_ids, Transcript* transcript, int threads = 1);

  std::size_t size() const { return order_.size(); }
  // User ids in processing order, and the caller's index for each.
  const std::vector<int>& user_ids() const { return sorted_ids_; }
  std::size_t index_of_rank(std::size_t rank) const { return order_[rank]; }

  // Download of a rows x cols payload from `from` to every user.
  void broadcast(const std::string& from, const std::string& label, Index rows,
                 Index cols);
  // Download to a single user (index into the constructor's id list).
  void send(std::size_t index, const std::string& from, const std::string& label,
            Index rows, Index cols);
  // Runs compute for every user (possibly in parallel) and records each
  // result as an upload to the server. Results are indexed like the
  // constructor's id list and stay valid until the next gather.
  const std::vector<Matrix>& gather(const std::string& label,
                                    const Matrix& broadcast,
                                    const Compute& compute);
  // Pointers to the last gathered uploads in ascending user-id order.
  std::vector<const Matrix*> ordered_uploads() const;
  // Broadcast, gather and aggregate as one round.
  Matrix run_round(const Matrix& broadcast, const std::string& down_label,
                   const std::string& up_label, const Compute& compute,
                   const Aggregate& aggregate);
  void end_round();

  Transcript* transcript() const { return transcript_; }

 private:
  std::vector<int> ids_;
  std::vector<std::string> names_;
  std::vector<int> sorted_ids_;
  std::vector<std::size_t> order_;
  Transcript* transcript_;
  int threads_;
  std::vector<Matrix> uploads_;
  std::vector<std::int64_t> counts_;
};

// Sum of matrices in the given order.
Matrix sum_in_order(const std::vector<Matrix>& parts);
Matrix sum_in_order(const std::vector<const Matrix*>& parts);

// Runs fn(i) for i in [0, n) on up to `threads` workers. The first exception
// (lowest i) is rethrown after all workers finish.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& fn);

// True iff g (m x k) has full row rank, i.e. S is determined by Z = S g.
bool is_uniquely_recoverable(const Matrix& g);

// A second preimage S' != S with S' g = S g for a g without full row rank.
// Throws RankError when g has full row rank.
Matrix alternative_preimage(const Matrix& s, const Matrix& g,
                            double scale = 1.0);

// Shapes the auditor accepts for uploads from users.
struct AuditSpec {
  Index signal_length = 0;  // L
  Index sketch_width = 0;   // K + r
  Index components = 0;     // K
  Index n_params = 0;       // K + 2 for regression runs, 0 when unused
  std::map<int, Index> samples;  // J_i per user id
  // Multiplier applied to S_i in sketch uploads (W), when known.
  std::vector<Matrix> multipliers;
};

struct AuditReport {
  bool passed = true;
  std::int64_t uploads_checked = 0;
  std::vector<std::string> violations;
};

// Checks every user upload against the sanctioned set {W_i: L x (K+r),
// Y_i: J_i x (K+r), B~_i: K x L, grad_i: (K+2) x 1}, that every multiplier
// fails is_uniquely_recoverable, and that the mask never reaches the server.
AuditReport audit_transcript(const Transcript& transcript, const AuditSpec& spec);
// Same, throwing AuditError listing the violations.
void require_audit(const Transcript& transcript, const AuditSpec& spec);

}  // namespace fedprog
