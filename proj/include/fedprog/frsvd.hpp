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
#include <span>
#include <vector>

#include "fedprog/fedcore.hpp"
#include "fedprog/linalg.hpp"

namespace fedprog {

struct FrsvdConfig {
  Index k = 1;       // components returned
  Index r = 10;      // oversampling columns
  int q = 2;         // power iterations
  Index k_cap = 10;  // candidate components when K is chosen adaptively

  Index width() const { return k + r; }
  void validate() const;
};

struct FrsvdOutput {
  Matrix u;        // J x K
  Vector sigma;    // K
  Matrix v;        // L x K
  Matrix q_basis;  // J x K, orthogonal to the all-ones vector
  Matrix p_mask;   // K x K
};

struct FrsvdOptions {
  // Refuse configurations with K + r >= L. Disabling it exists only to
  // exercise the audit.
  bool enforce_privacy = true;
  int threads = 1;
};

// Federated randomized SVD of the centered stacked signal matrix. Users keep
// S_i; the coordinator sees only sketches W_i = S_i^T S_i W, Y_i = S_i W and
// masked projections P Q_i^T S_i. When `transcript` is non-null every
// transfer is recorded there.
FrsvdOutput federated_rsvd(const std::vector<UserState>& users,
                           const FrsvdConfig& cfg, std::uint64_t seed_w,
                           std::uint64_t seed_p,
                           Transcript* transcript = nullptr,
                           const FrsvdOptions& options = {});

// The same pipeline on one stacked matrix, without a federation.
FrsvdOutput centralized_rsvd(const Matrix& s, const FrsvdConfig& cfg,
                             std::uint64_t seed_w, std::uint64_t seed_p);

// Eigenpairs of the unnormalized covariance sum (s_j - mean)(s_j - mean)^T,
// columns ordered by decreasing eigenvalue.
struct MfpcaBasis {
  Matrix eigvecs;  // L x k
  Vector eigvals;  // k
};

// Via the SVD of the row-centered matrix; eigvals are squared singular values.
MfpcaBasis centralized_mfpca_svd(const Matrix& s);
// Via a symmetric eigendecomposition of the covariance sum (L x L).
MfpcaBasis centralized_mfpca_eig(const Matrix& s);

// Smallest K whose cumulative squared-sigma share reaches `threshold`.
Index select_k_fve(std::span<const double> sigma, double threshold);
Index select_k_fve(const Vector& sigma, double threshold);

// s_i * v, with no centering.
Matrix compute_scores(const Matrix& s_i, const Matrix& v);

// Approximate per-user float counts for one FRSVD run.
double comm_cost_formula(const FrsvdConfig& cfg, double l, bool high_rank);
double fsvd_cost_formula(double l, double j);

// Exact float counts of the transfers federated_rsvd records.
struct FrsvdCost {
  std::int64_t upload = 0;
  std::int64_t download = 0;
  std::int64_t total() const { return upload + download; }
};
FrsvdCost frsvd_exact_cost(const FrsvdConfig& cfg, Index l,
                           std::span<const Index> samples_per_user);

// Audit expectations for a federated_rsvd run over `users`.
AuditSpec frsvd_audit_spec(const std::vector<UserState>& users,
                           const FrsvdConfig& cfg, std::uint64_t seed_w);

// v.csv (L rows, K columns) and sigma.csv (one value per line).
void export_frsvd_csv(const FrsvdOutput& out, const std::filesystem::path& dir);

}  // namespace fedprog
