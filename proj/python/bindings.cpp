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

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "fedprog/errors.hpp"
#include "fedprog/experiments.hpp"
#include "fedprog/fedcore.hpp"
#include "fedprog/frsvd.hpp"
#include "fedprog/linalg.hpp"
#include "fedprog/llsreg.hpp"
#include "fedprog/prognostics.hpp"

namespace py = pybind11;
using namespace pybind11::literals;

namespace fedprog {
namespace {

py::dict frsvd_dict(const FrsvdOutput& out) {
  return py::dict("u"_a = out.u, "sigma"_a = out.sigma, "v"_a = out.v,
                  "q_basis"_a = out.q_basis, "p_mask"_a = out.p_mask);
}

py::dict meter_dict(const CostMeter& m) {
  return py::dict("upload"_a = m.total_upload, "download"_a = m.total_download,
                  "total"_a = m.total(), "rounds"_a = m.rounds,
                  "transfers"_a = m.transfers, "user_upload"_a = m.user_upload,
                  "user_download"_a = m.user_download);
}

py::list transfers_list(const Transcript& t) {
  py::list out;
  for (const auto& tr : t.transfers()) {
    out.append(py::dict("round"_a = tr.round, "direction"_a = to_string(tr.direction),
                        "from"_a = tr.from, "to"_a = tr.to, "label"_a = tr.label,
                        "float_count"_a = tr.float_count));
  }
  return out;
}

FrsvdConfig frsvd_config(Index k, Index r, int q) {
  return FrsvdConfig{.k = k, .r = r, .q = q, .k_cap = k};
}

GdConfig gd_config(double alpha, double delta, std::int64_t max_iters,
                   std::uint64_t init_seed) {
  GdConfig cfg;
  cfg.alpha = alpha;
  cfg.delta = delta;
  cfg.max_iters = max_iters;
  cfg.init_seed = init_seed;
  return cfg;
}

py::dict fit_dict(const FitResult& fit) {
  return py::dict("sigma_tilde"_a = fit.theta_star.sigma_tilde,
                  "beta_tilde"_a = fit.theta_star.beta_tilde,
                  "iterations"_a = fit.iterations, "converged"_a = fit.converged,
                  "final_step_norm"_a = fit.final_step_norm,
                  "clamp_events"_a = fit.clamp_events);
}

py::dict stats_dict(const ErrorStats& s) {
  return py::dict("median"_a = s.median, "iqr"_a = s.iqr, "q1"_a = s.q1,
                  "q3"_a = s.q3, "count"_a = s.count);
}

Theta make_theta(double sigma_tilde, const Vector& beta_tilde) {
  return Theta{sigma_tilde, beta_tilde};
}

}  // namespace
}  // namespace fedprog

PYBIND11_MODULE(_fedprog, m) {
  using namespace fedprog;
  m.doc() = "Federated randomized SVD and location-scale regression";

  auto base = py::register_exception<Error>(m, "FedprogError", PyExc_RuntimeError);
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<RankError>(m, "RankError", base.ptr());
  py::register_exception<InputError>(m, "InputError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<AuditError>(m, "AuditError", base.ptr());
  py::register_exception<DivergenceError>(m, "DivergenceError", base.ptr());
  py::register_exception<DegenerateSpectrumError>(m, "DegenerateSpectrumError",
                                                  base.ptr());
  py::register_exception<InsufficientDataError>(m, "InsufficientDataError",
                                                base.ptr());

  m.def("gaussian_matrix", &gaussian_matrix, "rows"_a, "cols"_a, "seed"_a);
  m.def("qr_orthonormal", &qr_orthonormal, "a"_a);
  m.def("compact_svd", [](const Matrix& a) {
    SvdTriplet s = compact_svd(a);
    return py::make_tuple(s.u, s.sigma, s.v);
  }, "a"_a, "Returns (u, sigma, v) with a = u diag(sigma) v^T.");
  m.def("random_orthogonal", &random_orthogonal, "n"_a, "seed"_a);

  m.def("federated_rsvd",
        [](const std::vector<Matrix>& blocks, Index k, Index r, int q,
           std::uint64_t seed_w, std::uint64_t seed_p, bool audit) {
          std::vector<UserState> users;
          for (std::size_t i = 0; i < blocks.size(); ++i) {
            users.push_back({static_cast<int>(i), blocks[i], Vector()});
          }
          const FrsvdConfig cfg = frsvd_config(k, r, q);
          Transcript transcript;
          py::dict out = frsvd_dict(
              federated_rsvd(users, cfg, seed_w, seed_p, &transcript));
          out["cost"] = meter_dict(transcript.meter());
          out["transcript"] = transfers_list(transcript);
          if (audit) require_audit(transcript, frsvd_audit_spec(users, cfg, seed_w));
          return out;
        },
        "blocks"_a, "k"_a, "r"_a = 10, "q"_a = 2, "seed_w"_a = 1, "seed_p"_a = 2,
        "audit"_a = true,
        "Runs the federated protocol with one user per row block.");
  m.def("centralized_rsvd",
        [](const Matrix& s, Index k, Index r, int q, std::uint64_t seed_w,
           std::uint64_t seed_p) {
          return frsvd_dict(centralized_rsvd(s, frsvd_config(k, r, q), seed_w, seed_p));
        },
        "s"_a, "k"_a, "r"_a = 10, "q"_a = 2, "seed_w"_a = 1, "seed_p"_a = 2);
  m.def("centralized_mfpca_svd", [](const Matrix& s) {
    MfpcaBasis b = centralized_mfpca_svd(s);
    return py::make_tuple(b.eigvecs, b.eigvals);
  }, "s"_a);
  m.def("centralized_mfpca_eig", [](const Matrix& s) {
    MfpcaBasis b = centralized_mfpca_eig(s);
    return py::make_tuple(b.eigvecs, b.eigvals);
  }, "s"_a);
  m.def("select_k_fve",
        [](const Vector& sigma, double threshold) {
          return select_k_fve(sigma, threshold);
        },
        "sigma"_a, "threshold"_a = 0.95);
  m.def("compute_scores", &compute_scores, "s_i"_a, "v"_a);
  m.def("comm_cost_formula",
        [](Index k, Index r, int q, double l, bool high_rank) {
          return comm_cost_formula(frsvd_config(k, r, q), l, high_rank);
        },
        "k"_a, "r"_a, "q"_a, "l"_a, "high_rank"_a = true);
  m.def("fsvd_cost_formula", &fsvd_cost_formula, "l"_a, "j"_a);

  m.def("is_uniquely_recoverable", &is_uniquely_recoverable, "g"_a);
  m.def("alternative_preimage", &alternative_preimage, "s"_a, "g"_a,
        "scale"_a = 1.0);

  m.def("nll_local",
        [](const Matrix& x, const Vector& y, double st, const Vector& bt,
           const std::string& dist) {
          return nll_local(x, y, make_theta(st, bt), parse_distribution(dist));
        },
        "x"_a, "y"_a, "sigma_tilde"_a, "beta_tilde"_a, "dist"_a = "normal");
  m.def("grad_local",
        [](const Matrix& x, const Vector& y, double st, const Vector& bt,
           const std::string& dist) {
          return grad_local(x, y, make_theta(st, bt), parse_distribution(dist));
        },
        "x"_a, "y"_a, "sigma_tilde"_a, "beta_tilde"_a, "dist"_a = "normal");
  m.def("hessian_local",
        [](const Matrix& x, const Vector& y, double st, const Vector& bt,
           const std::string& dist) {
          return hessian_local(x, y, make_theta(st, bt), parse_distribution(dist));
        },
        "x"_a, "y"_a, "sigma_tilde"_a, "beta_tilde"_a, "dist"_a = "normal");
  m.def("federated_fit",
        [](const std::vector<Matrix>& xs, const std::vector<Vector>& ys,
           const std::string& dist, double alpha, double delta,
           std::int64_t max_iters, std::uint64_t init_seed) {
          if (xs.size() != ys.size()) throw InputError("xs and ys differ in length");
          std::vector<RegressionShard> shards;
          for (std::size_t i = 0; i < xs.size(); ++i) {
            shards.push_back({static_cast<int>(i), xs[i], ys[i]});
          }
          Transcript transcript(0);
          py::dict out = fit_dict(federated_fit(
              shards, gd_config(alpha, delta, max_iters, init_seed),
              parse_distribution(dist), &transcript));
          out["cost"] = meter_dict(transcript.meter());
          return out;
        },
        "xs"_a, "ys"_a, "dist"_a = "normal", "alpha"_a = 0.0, "delta"_a = 1e-8,
        "max_iters"_a = 100000, "init_seed"_a = 0);
  m.def("centralized_fit",
        [](const Matrix& x, const Vector& y, const std::string& dist, double alpha,
           double delta, std::int64_t max_iters, std::uint64_t init_seed) {
          return fit_dict(centralized_fit(x, y,
                                          gd_config(alpha, delta, max_iters, init_seed),
                                          parse_distribution(dist)));
        },
        "x"_a, "y"_a, "dist"_a = "normal", "alpha"_a = 0.0, "delta"_a = 1e-8,
        "max_iters"_a = 100000, "init_seed"_a = 0);
  m.def("predict_ttf",
        [](const Vector& x_new, double st, const Vector& bt, const std::string& dist,
           double p) {
          return predict_ttf(x_new, make_theta(st, bt), parse_distribution(dist), p);
        },
        "x_new"_a, "sigma_tilde"_a, "beta_tilde"_a, "dist"_a = "normal", "p"_a = 0.5);
  m.def("error_stats",
        [](const std::vector<double>& v) { return stats_dict(error_stats(v)); },
        "values"_a);

  m.def("config_keys", [](const std::map<std::string, std::string>& overrides) {
    ExperimentConfig cfg = default_experiment_config();
    for (const auto& [k, v] : overrides) apply_setting(cfg, k, v);
    return describe_config(cfg);
  }, "overrides"_a = std::map<std::string, std::string>{});
  m.def("run_experiment",
        [](const std::map<std::string, std::string>& settings) {
          ExperimentConfig cfg = default_experiment_config();
          for (const auto& [k, v] : settings) apply_setting(cfg, k, v);
          ExperimentReport report;
          {
            py::gil_scoped_release release;
            report = run_experiment(cfg);
          }
          py::dict summaries;
          for (const auto& [key, s] : report.benchmark.summaries) {
            summaries[py::str(key)] = stats_dict(s.overall);
          }
          py::list cost_rows;
          for (const auto& r : report.cost_rows) {
            cost_rows.append(py::dict(
                "kind"_a = r.kind, "users"_a = r.users, "samples"_a = r.samples,
                "l"_a = r.l, "metered_total"_a = r.metered_total,
                "exact_total"_a = r.exact_total,
                "frsvd_formula_per_user"_a = r.frsvd_formula_per_user,
                "fsvd_formula"_a = r.fsvd_formula, "wall_seconds"_a = r.wall_seconds));
          }
          return py::dict("summaries"_a = summaries, "cost_rows"_a = cost_rows,
                          "files"_a = report.files,
                          "cost"_a = meter_dict(report.benchmark.proposed_cost));
        },
        "settings"_a,
        "Runs an experiment from dotted config keys and writes its artifacts.");
}
