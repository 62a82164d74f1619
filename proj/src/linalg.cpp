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

#include "fedprog/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "fedprog/errors.hpp"
#include "fedprog/random.hpp"

namespace fedprog {
namespace {

double rank_tolerance(Index rows, Index cols, double largest) {
  return static_cast<double>(std::max(rows, cols)) *
         std::numeric_limits<double>::epsilon() * largest;
}

// Thin Q of an unpivoted Householder QR, columns flipped so diag(R) >= 0.
Matrix thin_q_positive(const Matrix& a) {
  const Index n = a.rows();
  const Index k = a.cols();
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix q = qr.householderQ() * Matrix::Identity(n, k);
  const Matrix& r = qr.matrixQR();
  for (Index j = 0; j < k; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return q;
}

}  // namespace

bool all_finite(const Matrix& a) { return a.allFinite(); }

Matrix gaussian_matrix(Index rows, Index cols, std::uint64_t seed) {
  if (rows < 1 || cols < 1) {
    throw DimensionError("gaussian_matrix: dimensions must be >= 1, got " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  }
  Engine engine = make_engine(seed, Stream::kGaussian);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix out(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) out(i, j) = normal(engine);
  }
  return out;
}

Index numerical_rank(const Matrix& a) {
  if (a.size() == 0) return 0;
  Eigen::ColPivHouseholderQR<Matrix> qr(a);
  const auto& r = qr.matrixQR();
  const Index diag = std::min(a.rows(), a.cols());
  const double largest = diag > 0 ? std::abs(r(0, 0)) : 0.0;
  if (largest == 0.0) return 0;
  const double tol = rank_tolerance(a.rows(), a.cols(), largest);
  Index rank = 0;
  for (Index i = 0; i < diag; ++i) {
    if (std::abs(r(i, i)) > tol) ++rank;
  }
  return rank;
}

Matrix qr_orthonormal(const Matrix& a) {
  if (a.rows() < 1 || a.cols() < 1) {
    throw DimensionError("qr_orthonormal: empty input");
  }
  if (a.cols() > a.rows()) {
    throw DimensionError("qr_orthonormal: need k <= n, got " +
                         std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()));
  }
  if (!a.allFinite()) throw InputError("qr_orthonormal: non-finite entries");
  const Index rank = numerical_rank(a);
  if (rank < a.cols()) {
    throw RankError("qr_orthonormal: input has numerical rank " +
                        std::to_string(rank) + " < " + std::to_string(a.cols()),
                    rank);
  }
  return thin_q_positive(a);
}

Matrix householder_basis(const Matrix& a) {
  if (a.cols() > a.rows()) {
    throw DimensionError("householder_basis: more columns than rows");
  }
  return thin_q_positive(a);
}

SvdTriplet compact_svd(const Matrix& a) {
  if (a.rows() < 1 || a.cols() < 1) {
    throw DimensionError("compact_svd: empty input");
  }
  if (!a.allFinite()) throw InputError("compact_svd: non-finite entries");
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SvdTriplet out{svd.matrixU(), svd.singularValues(), svd.matrixV()};
  for (Index j = 0; j < out.v.cols(); ++j) {
    Index arg = 0;
    out.v.col(j).cwiseAbs().maxCoeff(&arg);
    if (out.v(arg, j) < 0.0) {
      out.v.col(j) *= -1.0;
      out.u.col(j) *= -1.0;
    }
  }
  return out;
}

Matrix random_orthogonal(Index n, std::uint64_t seed) {
  if (n < 1) throw DimensionError("random_orthogonal: n must be >= 1");
  return qr_orthonormal(gaussian_matrix(n, n, derive_seed(seed, Stream::kOrthogonal)));
}

double max_principal_angle(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError("max_principal_angle: row counts differ");
  }
  const Matrix qa = householder_basis(a);
  const Matrix qb = householder_basis(b);
  // sin of the largest angle is the spectral norm of (I - Qa Qa^T) Qb when the
  // spans have equal dimension.
  const Matrix residual = qb - qa * (qa.transpose() * qb);
  Eigen::JacobiSVD<Matrix> svd(residual);
  const double s = std::clamp(svd.singularValues()(0), 0.0, 1.0);
  return std::asin(s);
}

Matrix stack_rows(std::span<const Matrix> blocks) {
  Index rows = 0;
  Index cols = blocks.empty() ? 0 : blocks.front().cols();
  for (const auto& b : blocks) {
    if (b.cols() != cols) throw DimensionError("stack_rows: column mismatch");
    rows += b.rows();
  }
  Matrix out(rows, cols);
  Index at = 0;
  for (const auto& b : blocks) {
    out.middleRows(at, b.rows()) = b;
    at += b.rows();
  }
  return out;
}

}  // namespace fedprog
