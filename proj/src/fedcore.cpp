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

#include "fedprog/fedcore.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <numeric>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

#include "fedprog/errors.hpp"

namespace fedprog {

std::string user_participant(int user_id) {
  return "user:" + std::to_string(user_id);
}

const char* to_string(Direction d) {
  return d == Direction::kUpload ? "upload" : "download";
}

void CostMeter::add(const Transfer& t) {
  ++transfers;
  if (t.direction == Direction::kUpload) {
    total_upload += t.float_count;
    if (t.user_id >= 0) user_upload[t.user_id] += t.float_count;
  } else {
    total_download += t.float_count;
    if (t.user_id >= 0) user_download[t.user_id] += t.float_count;
  }
}

void CostMeter::add_batch(Direction d, const std::vector<int>& sorted_ids,
                          const std::vector<std::int64_t>& counts) {
  auto& per_user = d == Direction::kUpload ? user_upload : user_download;
  std::int64_t& total = d == Direction::kUpload ? total_upload : total_download;
  auto hint = per_user.begin();
  for (std::size_t i = 0; i < sorted_ids.size(); ++i) {
    hint = per_user.try_emplace(hint, sorted_ids[i], 0);
    hint->second += counts[i];
    total += counts[i];
    ++hint;
  }
  transfers += static_cast<std::int64_t>(sorted_ids.size());
}

void CostMeter::merge(const CostMeter& other) {
  total_upload += other.total_upload;
  total_download += other.total_download;
  rounds += other.rounds;
  transfers += other.transfers;
  for (const auto& [id, n] : other.user_upload) user_upload[id] += n;
  for (const auto& [id, n] : other.user_download) user_download[id] += n;
}

void Transcript::record(Transfer t) {
  t.round = round_;
  meter_.add(t);
  if (transfers_.size() < retention_) {
    transfers_.push_back(std::move(t));
  } else {
    ++dropped_;
  }
}

void Transcript::record(Direction d, const std::string& from,
                        const std::string& to, const std::string& label,
                        Index rows, Index cols, int user_id) {
  const std::int64_t count = static_cast<std::int64_t>(rows) * cols;
  if (transfers_.size() >= retention_) {
    Transfer t;
    t.direction = d;
    t.float_count = count;
    t.user_id = user_id;
    meter_.add(t);
    ++dropped_;
    return;
  }
  Transfer t;
  t.direction = d;
  t.from = from;
  t.to = to;
  t.label = label;
  t.rows = rows;
  t.cols = cols;
  t.float_count = count;
  t.user_id = user_id;
  record(std::move(t));
}

void Transcript::count_batch(Direction d, const std::vector<int>& sorted_ids,
                             const std::vector<std::int64_t>& counts) {
  meter_.add_batch(d, sorted_ids, counts);
  dropped_ += sorted_ids.size();
}

void Transcript::next_round() {
  ++round_;
  ++meter_.rounds;
}

void Transcript::write_jsonl(std::ostream& out) const {
  for (const auto& t : transfers_) {
    nlohmann::ordered_json j;
    j["round"] = t.round;
    j["direction"] = to_string(t.direction);
    j["from"] = t.from;
    j["to"] = t.to;
    j["label"] = t.label;
    j["float_count"] = t.float_count;
    out << j.dump() << '\n';
  }
}

Federation::Federation(std::vector<int> user_ids, Transcript* transcript,
                       int threads)
    : ids_(std::move(user_ids)), transcript_(transcript), threads_(threads) {
  for (int id : ids_) names_.push_back(user_participant(id));
  order_.resize(ids_.size());
  std::iota(order_.begin(), order_.end(), 0);
  std::sort(order_.begin(), order_.end(),
            [this](std::size_t a, std::size_t b) { return ids_[a] < ids_[b]; });
  for (std::size_t r = 0; r < order_.size(); ++r) {
    sorted_ids_.push_back(ids_[order_[r]]);
    if (r > 0 && sorted_ids_[r] == sorted_ids_[r - 1]) {
      throw ConfigError("federation: duplicate user id " +
                        std::to_string(sorted_ids_[r]));
    }
  }
}

void Federation::broadcast(const std::string& from, const std::string& label,
                           Index rows, Index cols) {
  if (transcript_ == nullptr) return;
  if (!transcript_->storing()) {
    counts_.assign(order_.size(), static_cast<std::int64_t>(rows) * cols);
    transcript_->count_batch(Direction::kDownload, sorted_ids_, counts_);
    return;
  }
  for (std::size_t idx : order_) {
    transcript_->record(Direction::kDownload, from, names_[idx],
                        label, rows, cols, ids_[idx]);
  }
}

void Federation::send(std::size_t index, const std::string& from,
                      const std::string& label, Index rows, Index cols) {
  if (transcript_ == nullptr) return;
  transcript_->record(Direction::kDownload, from,
                      names_.at(index), label, rows, cols,
                      ids_[index]);
}

const std::vector<Matrix>& Federation::gather(const std::string& label,
                                              const Matrix& broadcast,
                                              const Compute& compute) {
  uploads_.resize(ids_.size());
  std::vector<std::exception_ptr> errors(ids_.size());
  parallel_for(ids_.size(), threads_, [&](std::size_t idx) {
    try {
      compute(idx, broadcast, uploads_[idx]);
    } catch (...) {
      errors[idx] = std::current_exception();
    }
  });
  for (std::size_t idx : order_) {
    if (!errors[idx]) continue;
    std::string what = "unknown error";
    try {
      std::rethrow_exception(errors[idx]);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    throw RoundAbortedError("round aborted by user " +
                                std::to_string(ids_[idx]) + ": " + what,
                            ids_[idx]);
  }
  if (transcript_ != nullptr && !transcript_->storing()) {
    counts_.resize(order_.size());
    for (std::size_t r = 0; r < order_.size(); ++r) {
      counts_[r] = static_cast<std::int64_t>(uploads_[order_[r]].size());
    }
    transcript_->count_batch(Direction::kUpload, sorted_ids_, counts_);
  } else if (transcript_ != nullptr) {
    for (std::size_t idx : order_) {
      transcript_->record(Direction::kUpload, names_[idx], kServer, label,
                          uploads_[idx].rows(), uploads_[idx].cols(), ids_[idx]);
    }
  }
  return uploads_;
}

std::vector<const Matrix*> Federation::ordered_uploads() const {
  std::vector<const Matrix*> out;
  out.reserve(order_.size());
  for (std::size_t idx : order_) out.push_back(&uploads_[idx]);
  return out;
}

Matrix Federation::run_round(const Matrix& broadcast,
                             const std::string& down_label,
                             const std::string& up_label, const Compute& compute,
                             const Aggregate& aggregate) {
  this->broadcast(kServer, down_label, broadcast.rows(), broadcast.cols());
  gather(up_label, broadcast, compute);
  Matrix out = aggregate(ordered_uploads());
  end_round();
  return out;
}

void Federation::end_round() {
  if (transcript_ != nullptr) transcript_->next_round();
}

Matrix sum_in_order(const std::vector<Matrix>& parts) {
  if (parts.empty()) throw InputError("sum_in_order: nothing to sum");
  Matrix out = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) {
    if (parts[i].rows() != out.rows() || parts[i].cols() != out.cols()) {
      throw DimensionError("sum_in_order: shape mismatch");
    }
    out += parts[i];
  }
  return out;
}

Matrix sum_in_order(const std::vector<const Matrix*>& parts) {
  if (parts.empty()) throw InputError("sum_in_order: nothing to sum");
  Matrix out = *parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) {
    if (parts[i]->rows() != out.rows() || parts[i]->cols() != out.cols()) {
      throw DimensionError("sum_in_order: shape mismatch");
    }
    out += *parts[i];
  }
  return out;
}

void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& fn) {
  const std::size_t workers =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::max(threads, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

bool is_uniquely_recoverable(const Matrix& g) {
  if (g.rows() > g.cols()) return false;
  return numerical_rank(g) == g.rows();
}

Matrix alternative_preimage(const Matrix& s, const Matrix& g, double scale) {
  if (s.cols() != g.rows()) {
    throw DimensionError("alternative_preimage: S has " +
                         std::to_string(s.cols()) + " columns but g has " +
                         std::to_string(g.rows()) + " rows");
  }
  if (is_uniquely_recoverable(g)) {
    throw RankError("alternative_preimage: g has full row rank", g.rows());
  }
  // Any n with n^T g = 0 gives (S + a n^T) g = S g.
  Eigen::JacobiSVD<Matrix> svd(g, Eigen::ComputeFullU);
  Vector n = svd.matrixU().col(g.rows() - 1);
  return s + scale * Vector::Ones(s.rows()) * n.transpose();
}

AuditReport audit_transcript(const Transcript& transcript,
                             const AuditSpec& spec) {
  AuditReport report;
  auto flag = [&report](const Transfer& t, const std::string& why) {
    report.passed = false;
    report.violations.push_back("round " + std::to_string(t.round) + " " +
                                t.from + " -> " + t.to + " '" + t.label +
                                "' (" + std::to_string(t.rows) + "x" +
                                std::to_string(t.cols) + "): " + why);
  };
  if (transcript.truncated()) {
    report.passed = false;
    report.violations.push_back("transcript does not retain every transfer");
  }
  for (const auto& g : spec.multipliers) {
    if (is_uniquely_recoverable(g)) {
      report.passed = false;
      report.violations.push_back(
          "sketch multiplier " + std::to_string(g.rows()) + "x" +
          std::to_string(g.cols()) + " has full row rank");
    }
  }
  if (spec.sketch_width > 0 && spec.sketch_width >= spec.signal_length) {
    report.passed = false;
    report.violations.push_back("sketch width K+r >= L admits recovery");
  }
  for (const auto& t : transcript.transfers()) {
    if (t.label == "P" && t.to == kServer) {
      flag(t, "masking matrix sent to the coordinator");
    }
    if (t.direction != Direction::kUpload || t.user_id < 0) continue;
    ++report.uploads_checked;
    auto it = spec.samples.find(t.user_id);
    const Index j_i = it == spec.samples.end() ? -1 : it->second;
    const Index width = spec.sketch_width;
    bool ok = false;
    if (t.label == "W_i") {
      ok = width > 0 && t.rows == spec.signal_length && t.cols == width;
    } else if (t.label == "Y_i") {
      ok = width > 0 && t.rows == j_i && t.cols == width;
    } else if (t.label == "B~_i") {
      ok = spec.components > 0 && t.rows == spec.components &&
           t.cols == spec.signal_length;
    } else if (t.label == "grad_i") {
      ok = spec.n_params > 0 && t.rows == spec.n_params && t.cols == 1;
    }
    if (!ok) flag(t, "not a sanctioned upload");
  }
  return report;
}

void require_audit(const Transcript& transcript, const AuditSpec& spec) {
  AuditReport report = audit_transcript(transcript, spec);
  if (report.passed) return;
  std::string msg = "audit failed:";
  for (const auto& v : report.violations) msg += "\n  " + v;
  throw AuditError(msg);
}

}  // namespace fedprog
