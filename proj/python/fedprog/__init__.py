# Copyright 2026 The fedprog Authors.
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Federated prognostics: federated randomized SVD and location-scale regression."""

from fedprog._fedprog import (
    AuditError,
    ConfigError,
    DegenerateSpectrumError,
    DimensionError,
    DivergenceError,
    DomainError,
    FedprogError,
    InputError,
    InsufficientDataError,
    RankError,
    alternative_preimage,
    centralized_fit,
    centralized_mfpca_eig,
    centralized_mfpca_svd,
    centralized_rsvd,
    comm_cost_formula,
    compact_svd,
    compute_scores,
    config_keys,
    error_stats,
    federated_fit,
    federated_rsvd,
    fsvd_cost_formula,
    gaussian_matrix,
    grad_local,
    hessian_local,
    is_uniquely_recoverable,
    nll_local,
    predict_ttf,
    qr_orthonormal,
    random_orthogonal,
    run_experiment,
    select_k_fve,
)

__version__ = "0.1.0"
