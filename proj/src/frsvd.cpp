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

#include "fedprog/frsvd.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>

#include "fedprog/errors.hpp"

namespace fedprog {
namespace {

Matrix center_columns(const Matrix& a) {
  return a.rowwise() - a.colwise().mean();
}

// Top-k left singular basis of the column-centered sketch. Its columns are
// orthogonal to the all-ones vector, so Q^T S equals Q^T (S - 1 mean^T).
Matrix range_basis(const Matrix& y, Index k) {
  if (y.rows() < k + 1) {
    throw RankError("frsvd: " + std::to_string(y.rows()) +
                        " samples cannot support " + std::to_string(k) +
                        " centered components",
                    y.rows() - 1);
  }
  const SvdTriplet svd = compact_svd(center_columns(y));
  const double tol = static_cast<double>(std::max(y.rows(), y.cols())) *
                     std::numeric_limits<double>::epsilon() *
                     (svd.sigma.size() > 0 ? svd.sigma(0) : 0.0);
  Index rank = 0;
  for (Index i = 0; i < svd.sigma.size(); ++i) {
    if (svd.sigma(i) > tol) ++rank;
  }
  if (rank < k || svd.sigma.size() < k) {
    throw RankError("frsvd: centered sketch has rank " + std::to_string(rank) +
                        " < K = " + std::to_string(k) +
                        "; increase r or reduce K",
                    rank);
  }
  return svd.u.leftCols(k);
}

void check_config(const FrsvdConfig& cfg, Index l, bool enforce_privacy) {
  cfg.validate();
  if (l < 1) throw DimensionError("frsvd: empty signals");
  if (enforce_privacy && cfg.width() >= l) {
    throw AuditError("frsvd: K + r = " + std::to_string(cfg.width()) +
                     " >= L = " + std::to_string(l) +
                     " lets the coordinator recover local data");
  }
}

FrsvdOutput finish(const Matrix& q_basis, const Matrix& p, const Matrix& b) {
  const SvdTriplet svd = compact_svd(b);
  FrsvdOutput out;
  out.u = q_basis * (p.transpose() * svd.u);
  out.sigma = svd.sigma;
  out.v = svd.v;
  out.q_basis = q_basis;
  out.p_mask = p;
  return out;
}

}  // namespace

void FrsvdConfig::validate() const {
  if (k < 1) throw ConfigError("frsvd: k must be >= 1");
  if (r < 0) throw ConfigError("frsvd: r must be >= 0");
  if (q < 0) throw ConfigError("frsvd: q must be >= 0");
  if (k_cap < 1) throw ConfigError("frsvd: k_cap must be >= 1");
}

FrsvdOutput federated_rsvd(const std::vector<UserState>& users,
                           const FrsvdConfig& cfg, std::uint64_t seed_w,
                           std::uint64_t seed_p, Transcript* transcript,
                           const FrsvdOptions& options) {
  if (users.empty()) throw InputError("federated_rsvd: no users");
  const Index l = users.front().signals.cols();
  for (const auto& u : users) {
    if (u.signals.cols() != l) {
      throw DimensionError("federated_rsvd: user " + std::to_string(u.user_id) +
                           " has signal length " +
                           std::to_string(u.signals.cols()) + ", expected " +
                           std::to_string(l));
    }
  }
  check_config(cfg, l, options.enforce_privacy);
  const Index k = cfg.k;
  const Index n = cfg.width();

  std::vector<int> ids;
  for (const auto& u : users) ids.push_back(u.user_id);
  Federation fed(ids, transcript, options.threads);

  Matrix w = gaussian_matrix(l, n, seed_w);
  for (int t = 0; t < cfg.q; ++t) {
    w = fed.run_round(
        w, "W", "W_i",
        [&users](std::size_t idx, const Matrix& b, Matrix& up) {
          const Matrix& s = users[idx].signals;
          up.noalias() = s.transpose() * (s * b);
        },
        [](const std::vector<const Matrix*>& parts) {
          return householder_basis(sum_in_order(parts));
        });
  }

  fed.broadcast(kServer, "W", l, n);
  fed.gather("Y_i", w, [&users](std::size_t idx, const Matrix& b, Matrix& up) {
    up.noalias() = users[idx].signals * b;
  });
  fed.end_round();

  std::vector<Matrix> ordered;
  std::vector<Index> offset(users.size());
  Index rows = 0;
  for (const Matrix* y : fed.ordered_uploads()) ordered.push_back(*y);
  for (std::size_t rank = 0; rank < fed.size(); ++rank) {
    const std::size_t idx = fed.index_of_rank(rank);
    offset[idx] = rows;
    rows += users[idx].signals.rows();
  }
  const Matrix q_basis = range_basis(stack_rows(ordered), k);

  for (std::size_t rank = 0; rank < fed.size(); ++rank) {
    const std::size_t idx = fed.index_of_rank(rank);
    fed.send(idx, kServer, "Q_i", users[idx].signals.rows(), k);
  }
  const Matrix p = random_orthogonal(k, seed_p);
  fed.broadcast(kMaskingServer, "P", k, k);
  fed.gather("B~_i", p, [&](std::size_t idx, const Matrix& mask, Matrix& up) {
    const Matrix& s = users[idx].signals;
    const Matrix q_i = q_basis.middleRows(offset[idx], s.rows());
    up.noalias() = mask * (q_i.transpose() * s);
  });
  fed.end_round();

  FrsvdOutput out = finish(q_basis, p, sum_in_order(fed.ordered_uploads()));
  fed.broadcast(kServer, "U^", k, k);
  fed.broadcast(kServer, "Sigma^", k, 1);
  fed.broadcast(kServer, "V^", l, k);
  fed.end_round();
  return out;
}

FrsvdOutput centralized_rsvd(const Matrix& s, const FrsvdConfig& cfg,
                             std::uint64_t seed_w, std::uint64_t seed_p) {
  check_config(cfg, s.cols(), true);
  Matrix w = gaussian_matrix(s.cols(), cfg.width(), seed_w);
  for (int t = 0; t < cfg.q; ++t) {
    w = householder_basis(s.transpose() * (s * w));
  }
  const Matrix q_basis = range_basis(s * w, cfg.k);
  const Matrix p = random_orthogonal(cfg.k, seed_p);
  return finish(q_basis, p, p * (q_basis.transpose() * s));
}

MfpcaBasis centralized_mfpca_svd(const Matrix& s) {
  if (s.rows() < 2) {
    throw InsufficientDataError("mfpca: need at least 2 signals, got " +
                                std::to_string(s.rows()));
  }
  const SvdTriplet svd = compact_svd(center_columns(s));
  return {svd.v, svd.sigma.array().square().matrix()};
}

MfpcaBasis centralized_mfpca_eig(const Matrix& s) {
  if (s.rows() < 2) {
    throw InsufficientDataError("mfpca: need at least 2 signals, got " +
                                std::to_string(s.rows()));
  }
  if (!s.allFinite()) throw InputError("mfpca: non-finite entries");
  const Matrix centered = center_columns(s);
  const Matrix c = centered.transpose() * centered;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(c);
  const Index l = c.rows();
  MfpcaBasis out{Matrix(l, l), Vector(l)};
  for (Index i = 0; i < l; ++i) {
    const Index src = l - 1 - i;
    out.eigvals(i) = std::max(eig.eigenvalues()(src), 0.0);
    Vector col = eig.eigenvectors().col(src);
    Index arg = 0;
    col.cwiseAbs().maxCoeff(&arg);
    if (col(arg) < 0) col = -col;
    out.eigvecs.col(i) = col;
  }
  return out;
}

Index select_k_fve(std::span<const double> sigma, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw ConfigError("select_k_fve: threshold must lie in (0, 1]");
  }
  double total = 0.0;
  for (double s : sigma) {
    if (!(s >= 0.0) || !std::isfinite(s)) {
      throw InputError("select_k_fve: singular values must be finite and >= 0");
    }
    total += s * s;
  }
  if (total <= 0.0) {
    throw DegenerateSpectrumError("select_k_fve: all singular values are zero");
  }
  double running = 0.0;
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    running += sigma[i] * sigma[i];
    if (running / total >= threshold - 1e-12) return static_cast<Index>(i + 1);
  }
  return static_cast<Index>(sigma.size());
}

Index select_k_fve(const Vector& sigma, double threshold) {
  return select_k_fve(std::span<const double>(sigma.data(), sigma.size()),
                      threshold);
}

Matrix compute_scores(const Matrix& s_i, const Matrix& v) {
  if (s_i.cols() != v.rows()) {
    throw DimensionError("compute_scores: signal length " +
                         std::to_string(s_i.cols()) + " vs basis rows " +
                         std::to_string(v.rows()));
  }
  return s_i * v;
}

double comm_cost_formula(const FrsvdConfig& cfg, double l, bool high_rank) {
  const double k = static_cast<double>(cfg.k);
  const double r = static_cast<double>(cfg.r);
  if (!high_rank) return (3.0 * k + r) * l;
  const double q = cfg.q;
  return ((2.0 * q + 3.0) * k + (2.0 * q + 1.0) * r) * l;
}

double fsvd_cost_formula(double l, double j) { return 2.0 * l * (l + j); }

FrsvdCost frsvd_exact_cost(const FrsvdConfig& cfg, Index l,
                           std::span<const Index> samples_per_user) {
  const std::int64_t k = cfg.k;
  const std::int64_t n = cfg.width();
  const std::int64_t q = cfg.q;
  const std::int64_t ll = l;
  FrsvdCost cost;
  for (Index j : samples_per_user) {
    cost.download += (q + 1) * ll * n + j * k + 2 * k * k + k + ll * k;
    cost.upload += q * ll * n + j * n + k * ll;
  }
  return cost;
}

AuditSpec frsvd_audit_spec(const std::vector<UserState>& users,
                           const FrsvdConfig& cfg, std::uint64_t seed_w) {
  AuditSpec spec;
  spec.signal_length = users.empty() ? 0 : users.front().signals.cols();
  spec.sketch_width = cfg.width();
  spec.components = cfg.k;
  for (const auto& u : users) spec.samples[u.user_id] = u.signals.rows();
  if (spec.signal_length > 0) {
    spec.multipliers.push_back(
        gaussian_matrix(spec.signal_length, cfg.width(), seed_w));
  }
  return spec;
}

void export_frsvd_csv(const FrsvdOutput& out, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream v_file(dir / "v.csv");
  std::ofstream s_file(dir / "sigma.csv");
  if (!v_file || !s_file) throw InputError("cannot write under " + dir.string());
  v_file.precision(17);
  s_file.precision(17);
  for (Index i = 0; i < out.v.rows(); ++i) {
    for (Index j = 0; j < out.v.cols(); ++j) {
      v_file << (j ? "," : "") << out.v(i, j);
    }
    v_file << '\n';
  }
  for (Index i = 0; i < out.sigma.size(); ++i) s_file << out.sigma(i) << '\n';
}

}  // namespace fedprog
