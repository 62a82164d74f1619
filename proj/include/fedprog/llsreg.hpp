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
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fedprog/fedcore.hpp"
#include "fedprog/linalg.hpp"

namespace fedprog {

// Error law of ln(TTF): normal, smallest extreme value or logistic, giving
// lognormal, Weibull or log-logistic failure times.
enum class Distribution { kNormal, kSev, kLogistic };

const char* to_string(Distribution d);
Distribution parse_distribution(const std::string& name);

// sigma_tilde = 1 / sigma and beta_tilde = beta / sigma; beta_tilde(0) is
// the intercept.
struct Theta {
  double sigma_tilde = 1.0;
  Vector beta_tilde;

  // (sigma_tilde, beta_tilde...) as one vector.
  Vector packed() const;
  static Theta unpack(const Vector& v);
};

struct GdConfig {
  // Learning rate. Values <= 0 select 1e-3 / (total sample count).
  double alpha = 0.0;
  double delta = 1e-8;
  std::int64_t max_iters = 100000;
  std::uint64_t init_seed = 0;
  // Consecutive increases of the aggregated gradient norm treated as
  // divergence.
  int divergence_window = 50;
  bool record_trace = false;

  void validate() const;
  double resolved_alpha(std::int64_t total_samples) const;
};

struct FitResult {
  Theta theta_star;
  std::int64_t iterations = 0;
  bool converged = false;
  double final_step_norm = 0.0;
  std::int64_t clamp_events = 0;
  std::vector<Vector> trace;  // packed iterates, when requested
};

inline constexpr double kSigmaTildeFloor = 1e-8;

// x is J x (K+1) with a leading intercept column; y holds log-scale
// responses.
double nll_local(const Matrix& x, const Vector& y, const Theta& theta,
                 Distribution dist);
// Gradient ordered (d/d sigma_tilde, d/d beta_tilde...).
Vector grad_local(const Matrix& x, const Vector& y, const Theta& theta,
                  Distribution dist);
Matrix hessian_local(const Matrix& x, const Vector& y, const Theta& theta,
                     Distribution dist);

// One user's regression data.
struct RegressionShard {
  int user_id = 0;
  Matrix x;
  Vector y;
};

// Prepends the intercept column to a score matrix.
Matrix with_intercept(const Matrix& scores);

// Uniform(0, 1) initial iterate of length n_params.
Theta initial_theta(Index n_params, std::uint64_t seed);

// Gradient descent where users upload local gradients and the coordinator
// sums them in ascending user-id order.
FitResult federated_fit(const std::vector<RegressionShard>& shards,
                        const GdConfig& cfg, Distribution dist,
                        Transcript* transcript = nullptr, int threads = 1);

// The same descent on pooled data.
FitResult centralized_fit(const Matrix& x, const Vector& y, const GdConfig& cfg,
                          Distribution dist);

// Quantile of the fitted failure-time distribution at covariates x_new
// (length K+1, intercept first). p = 0.5 gives the median.
double predict_ttf(const Vector& x_new, const Theta& theta, Distribution dist,
                   double p = 0.5);

// Standard quantile of the location-scale error law.
double standard_quantile(Distribution dist, double p);

// {theta: {sigma_tilde, beta_tilde}, iterations, converged, nll_trace?}.
void write_fit_json(std::ostream& out, const FitResult& fit,
                    const std::vector<double>* nll_trace = nullptr);

}  // namespace fedprog
