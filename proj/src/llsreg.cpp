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

#include "fedprog/llsreg.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <boost/math/distributions/normal.hpp>
#include <nlohmann/json.hpp>

#include "fedprog/errors.hpp"
#include "fedprog/random.hpp"

namespace fedprog {
namespace {

void check_inputs(const Matrix& x, const Vector& y, const Theta& theta) {
  if (!(theta.sigma_tilde > 0.0)) {
    throw DomainError("sigma_tilde must be > 0, got " +
                      std::to_string(theta.sigma_tilde));
  }
  if (x.rows() != y.size()) {
    throw DimensionError("x has " + std::to_string(x.rows()) + " rows but y has " +
                         std::to_string(y.size()) + " entries");
  }
  if (x.cols() != theta.beta_tilde.size()) {
    throw DimensionError("x has " + std::to_string(x.cols()) +
                         " columns but beta_tilde has " +
                         std::to_string(theta.beta_tilde.size()));
  }
}

// log(1 + e^z) without overflow.
double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Vector residuals(const Matrix& x, const Vector& y, const Theta& theta) {
  return theta.sigma_tilde * y - x * theta.beta_tilde;
}

// Per-user gradient evaluator. For the normal law it works from cached
// moments (x^T x, x^T y, y^T y), which is the same formula regrouped.
class LocalGradient {
 public:
  LocalGradient(const Matrix& x, const Vector& y, Distribution dist)
      : x_(x), y_(y), dist_(dist) {
    if (x.rows() != y.size()) {
      throw DimensionError("x and y disagree on the sample count");
    }
    if (dist == Distribution::kNormal) {
      xtx_ = x.transpose() * x;
      xty_ = x.transpose() * y;
      yty_ = y.squaredNorm();
    }
  }

  // `packed` is (sigma_tilde, beta_tilde...); the gradient goes to `out`.
  template <typename In, typename Out>
  void evaluate(const In& packed, Out& out) const {
    if (dist_ != Distribution::kNormal) {
      out = grad_local(x_, y_, Theta::unpack(packed), dist_);
      return;
    }
    const double s = packed(0);
    if (!(s > 0.0)) throw DomainError("sigma_tilde must be > 0");
    const auto b = packed.tail(packed.size() - 1);
    out.resize(packed.size(), 1);
    out(0) = -static_cast<double>(y_.size()) / s + s * yty_ - xty_.dot(b);
    out.bottomRows(b.size()).noalias() = xtx_ * b;
    out.bottomRows(b.size()) -= s * xty_;
  }

 private:
  const Matrix& x_;
  const Vector& y_;
  Distribution dist_;
  Matrix xtx_;
  Vector xty_;
  double yty_ = 0.0;
};

template <typename GradFn>
FitResult descend(Index n_params, std::int64_t total_samples, const GdConfig& cfg,
                  GradFn&& gradient) {
  cfg.validate();
  const double alpha = cfg.resolved_alpha(total_samples);
  FitResult fit;
  Vector th = initial_theta(n_params, cfg.init_seed).packed();
  if (cfg.record_trace) fit.trace.push_back(th);
  double prev_norm = std::numeric_limits<double>::infinity();
  int rising = 0;
  for (std::int64_t l = 1; l <= cfg.max_iters; ++l) {
    const Vector g = gradient(th);
    if (!g.allFinite()) {
      throw DivergenceError("gradient became non-finite at iteration " +
                            std::to_string(l) + "; try a smaller alpha");
    }
    const double norm = g.norm();
    rising = norm > prev_norm ? rising + 1 : 0;
    prev_norm = norm;
    if (rising >= cfg.divergence_window) {
      throw DivergenceError("gradient norm grew for " + std::to_string(rising) +
                            " consecutive iterations; try a smaller alpha");
    }
    Vector next = th - alpha * g;
    if (next(0) <= 0.0) {
      next(0) = kSigmaTildeFloor;
      ++fit.clamp_events;
    }
    fit.final_step_norm = (next - th).norm();
    th = std::move(next);
    fit.iterations = l;
    if (cfg.record_trace) fit.trace.push_back(th);
    if (fit.final_step_norm < cfg.delta) {
      fit.converged = true;
      break;
    }
  }
  fit.theta_star = Theta::unpack(th);
  return fit;
}

}  // namespace

const char* to_string(Distribution d) {
  switch (d) {
    case Distribution::kNormal:
      return "normal";
    case Distribution::kSev:
      return "sev";
    case Distribution::kLogistic:
      return "logistic";
  }
  return "unknown";
}

Distribution parse_distribution(const std::string& name) {
  if (name == "normal" || name == "lognormal") return Distribution::kNormal;
  if (name == "sev" || name == "weibull") return Distribution::kSev;
  if (name == "logistic" || name == "loglogistic") return Distribution::kLogistic;
  throw ConfigError("unknown distribution '" + name + "'");
}

Vector Theta::packed() const {
  Vector v(beta_tilde.size() + 1);
  v(0) = sigma_tilde;
  v.tail(beta_tilde.size()) = beta_tilde;
  return v;
}

Theta Theta::unpack(const Vector& v) {
  if (v.size() < 2) throw DimensionError("theta needs at least 2 entries");
  return Theta{v(0), v.tail(v.size() - 1)};
}

void GdConfig::validate() const {
  if (!(delta > 0)) throw ConfigError("gd: delta must be > 0");
  if (max_iters < 1) throw ConfigError("gd: max_iters must be >= 1");
  if (!std::isfinite(alpha)) throw ConfigError("gd: alpha must be finite");
  if (divergence_window < 1) throw ConfigError("gd: divergence_window must be >= 1");
}

double GdConfig::resolved_alpha(std::int64_t total_samples) const {
  if (alpha > 0) return alpha;
  return 1e-3 / static_cast<double>(std::max<std::int64_t>(total_samples, 1));
}

double nll_local(const Matrix& x, const Vector& y, const Theta& theta,
                 Distribution dist) {
  check_inputs(x, y, theta);
  const Vector z = residuals(x, y, theta);
  const double base = -static_cast<double>(y.size()) * std::log(theta.sigma_tilde);
  switch (dist) {
    case Distribution::kNormal:
      return base + 0.5 * z.squaredNorm();
    case Distribution::kSev:
      return base - z.sum() + z.array().exp().sum();
    case Distribution::kLogistic: {
      double acc = 0.0;
      for (Index j = 0; j < z.size(); ++j) acc += 2.0 * softplus(z(j)) - z(j);
      return base + acc;
    }
  }
  return 0.0;
}

Vector grad_local(const Matrix& x, const Vector& y, const Theta& theta,
                  Distribution dist) {
  check_inputs(x, y, theta);
  const Vector z = residuals(x, y, theta);
  const double j = static_cast<double>(y.size());
  // w = d(per-sample loss) / dz.
  Vector w(z.size());
  for (Index i = 0; i < z.size(); ++i) {
    switch (dist) {
      case Distribution::kNormal:
        w(i) = z(i);
        break;
      case Distribution::kSev:
        w(i) = std::exp(z(i)) - 1.0;
        break;
      case Distribution::kLogistic:
        w(i) = 2.0 * sigmoid(z(i)) - 1.0;
        break;
    }
  }
  Vector g(x.cols() + 1);
  g(0) = -j / theta.sigma_tilde + w.dot(y);
  g.tail(x.cols()) = -(x.transpose() * w);
  return g;
}

Matrix hessian_local(const Matrix& x, const Vector& y, const Theta& theta,
                     Distribution dist) {
  check_inputs(x, y, theta);
  const Vector z = residuals(x, y, theta);
  const double j = static_cast<double>(y.size());
  Vector c(z.size());
  for (Index i = 0; i < z.size(); ++i) {
    switch (dist) {
      case Distribution::kNormal:
        c(i) = 1.0;
        break;
      case Distribution::kSev:
        c(i) = std::exp(z(i));
        break;
      case Distribution::kLogistic: {
        const double p = sigmoid(z(i));
        c(i) = 2.0 * p * (1.0 - p);
        break;
      }
    }
  }
  const Index p = x.cols();
  Matrix h(p + 1, p + 1);
  h(0, 0) = j / (theta.sigma_tilde * theta.sigma_tilde) +
            (c.array() * y.array().square()).sum();
  const Vector cross = -(x.transpose() * (c.array() * y.array()).matrix());
  h.block(1, 0, p, 1) = cross;
  h.block(0, 1, 1, p) = cross.transpose();
  h.block(1, 1, p, p) = x.transpose() * c.asDiagonal() * x;
  return h;
}

Matrix with_intercept(const Matrix& scores) {
  Matrix x(scores.rows(), scores.cols() + 1);
  x.col(0).setOnes();
  x.rightCols(scores.cols()) = scores;
  return x;
}

Theta initial_theta(Index n_params, std::uint64_t seed) {
  if (n_params < 2) throw DimensionError("theta needs at least 2 entries");
  Engine engine = make_engine(seed, Stream::kThetaInit);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector v(n_params);
  for (Index i = 0; i < n_params; ++i) v(i) = unit(engine);
  // sigma_tilde must start strictly positive.
  if (v(0) <= 0.0) v(0) = kSigmaTildeFloor;
  return Theta::unpack(v);
}

FitResult federated_fit(const std::vector<RegressionShard>& shards,
                        const GdConfig& cfg, Distribution dist,
                        Transcript* transcript, int threads) {
  if (shards.empty()) throw InputError("federated_fit: no users");
  const Index p = shards.front().x.cols();
  std::int64_t total = 0;
  std::vector<int> ids;
  std::vector<LocalGradient> local;
  local.reserve(shards.size());
  for (const auto& s : shards) {
    if (s.x.cols() != p) {
      throw DimensionError("federated_fit: user " + std::to_string(s.user_id) +
                           " has " + std::to_string(s.x.cols()) +
                           " covariates, expected " + std::to_string(p));
    }
    total += s.y.size();
    ids.push_back(s.user_id);
    local.emplace_back(s.x, s.y, dist);
  }
  Federation fed(ids, transcript, threads);
  Matrix broadcast(p + 1, 1);
  return descend(p + 1, total, cfg, [&](const Vector& th) -> Vector {
    broadcast.col(0) = th;
    return fed.run_round(
        broadcast, "theta", "grad_i",
        [&](std::size_t idx, const Matrix& b, Matrix& up) {
          local[idx].evaluate(b.col(0), up);
        },
        [](const std::vector<const Matrix*>& parts) {
          return sum_in_order(parts);
        });
  });
}

FitResult centralized_fit(const Matrix& x, const Vector& y, const GdConfig& cfg,
                          Distribution dist) {
  LocalGradient local(x, y, dist);
  Vector g(x.cols() + 1);
  return descend(x.cols() + 1, y.size(), cfg, [&](const Vector& th) -> const Vector& {
    local.evaluate(th, g);
    return g;
  });
}

double standard_quantile(Distribution dist, double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("quantile probability must lie in (0, 1)");
  }
  switch (dist) {
    case Distribution::kNormal:
      return boost::math::quantile(boost::math::normal_distribution<double>(), p);
    case Distribution::kSev:
      return std::log(-std::log1p(-p));
    case Distribution::kLogistic:
      return std::log(p / (1.0 - p));
  }
  return 0.0;
}

double predict_ttf(const Vector& x_new, const Theta& theta, Distribution dist,
                   double p) {
  const double zq = standard_quantile(dist, p);
  if (!(theta.sigma_tilde > 0.0)) throw DomainError("sigma_tilde must be > 0");
  if (x_new.size() != theta.beta_tilde.size()) {
    throw DimensionError("predict_ttf: covariate length mismatch");
  }
  const double scale = 1.0 / theta.sigma_tilde;
  const double location = x_new.dot(theta.beta_tilde) * scale;
  return std::exp(location + scale * zq);
}

void write_fit_json(std::ostream& out, const FitResult& fit,
                    const std::vector<double>* nll_trace) {
  nlohmann::ordered_json j;
  j["theta"]["sigma_tilde"] = fit.theta_star.sigma_tilde;
  j["theta"]["beta_tilde"] = std::vector<double>(
      fit.theta_star.beta_tilde.data(),
      fit.theta_star.beta_tilde.data() + fit.theta_star.beta_tilde.size());
  j["iterations"] = fit.iterations;
  j["converged"] = fit.converged;
  j["final_step_norm"] = fit.final_step_norm;
  if (nll_trace != nullptr) j["nll_trace"] = *nll_trace;
  out << j.dump(2) << '\n';
}

}  // namespace fedprog
