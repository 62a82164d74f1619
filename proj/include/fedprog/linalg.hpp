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
#include <span>

#include <Eigen/Dense>

namespace fedprog {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Thin singular value decomposition a = u * diag(sigma) * v^T.
//
// Columns of u and v are orthonormal and sigma is nonincreasing. Each column
// of v is oriented so that its largest-magnitude entry is positive (the
// matching column of u is flipped with it), which makes results comparable
// across implementations.
struct SvdTriplet {
  Matrix u;      // n x k
  Vector sigma;  // k
  Matrix v;      // m x k
};

// rows x cols matrix of i.i.d. standard normal entries, filled in row-major
// order from the stream for `seed`. Throws DimensionError on a zero dimension.
Matrix gaussian_matrix(Index rows, Index cols, std::uint64_t seed);

// Orthonormal basis Q (n x k) for the column span of `a` (n x k, k <= n).
// Column signs are chosen so that R has a positive diagonal.
// Throws RankError when `a` is numerically rank deficient, using the
// threshold max(n, k) * eps * (largest column norm).
Matrix qr_orthonormal(const Matrix& a);

// Thin SVD with k = min(n, m). Throws InputError on non-finite entries.
SvdTriplet compact_svd(const Matrix& a);

// Haar-distributed orthogonal n x n matrix, deterministic per seed.
Matrix random_orthogonal(Index n, std::uint64_t seed);

// Numerical rank under the same threshold rule as qr_orthonormal.
Index numerical_rank(const Matrix& a);

// Orthonormal basis of span(a) without a rank check. When `a` is rank
// deficient the extra columns complete the basis arbitrarily.
Matrix householder_basis(const Matrix& a);

// Largest principal angle (radians) between the column spans of a and b.
// Both must have the same number of rows; spans are orthonormalized first.
double max_principal_angle(const Matrix& a, const Matrix& b);

// Vertically stacks blocks that share a column count.
Matrix stack_rows(std::span<const Matrix> blocks);

bool all_finite(const Matrix& a);

}  // namespace fedprog
