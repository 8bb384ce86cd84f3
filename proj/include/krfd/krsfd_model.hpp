// Copyright 2026-present the krfd project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <memory>
#include <optional>

#include "krfd/dataset.hpp"
#include "krfd/kernel.hpp"
#include "krfd/krfd_model.hpp"
#include "krfd/linalg.hpp"

namespace krfd {

// =============================================================================
// KRSFD: the sparse-data variant. Measurement points vary per input; the
// design matrix H stacks per-input blocks g_i^T (kron) T_i over a fixed set
// of t-space kernel centers. theta has an isotropic prior, the MAP solve runs
// through CG on the normal equations, and predictive covariance comes from an
// exact factorization (small problems) or an incomplete LU approximate
// inverse (large ones). The t-independent baseline term is omitted here.
// =============================================================================

struct KrsfdHyperparams {
    double lambda = 1e-3;  // ridge strength on theta
    KernelConfig kernel_g;
    KernelConfig kernel_t;
    // Target zero fraction of the input Gram, in [0, 0.9]. When set, the
    // per-input t blocks are truncated at z_t_from_z_g(z_g) so the design
    // lands near 90% zeros; unset disables truncation entirely.
    std::optional<double> z_g;
    Matrix centers;  // L x q kernel centers in t-space
    double alpha = 1e-3;
    double beta = 1e-3;
    double cg_tol_mse = 1e-3;
    int cg_max_iters = 500;
    // Above this NL the normal-equation matrix is never formed densely and
    // covariance queries switch to the ILU approximate inverse.
    std::size_t dense_threshold = 4000;
    double ilu_drop_tol = 1e-4;
    double ilu_fill_factor = 10.0;

    void validate() const;
};

struct SparseDesign {
    SparseMatrix h;        // S x NL, rows grouped by input
    std::vector<std::int64_t> block_offsets;  // N+1 row ranges into h
    SparseMatrix g_sparse;  // truncated input Gram, N x N
    SparseMatrix t_stack;   // truncated T_i blocks stacked, S x L
    double g_threshold = 0.0;  // query-time zeroing thresholds
    double t_threshold = 0.0;
    double h_zero_fraction = 0.0;

    std::size_t n_inputs() const { return g_sparse.rows; }
    std::size_t n_centers() const { return t_stack.cols; }
};

struct CgReport {
    int iterations = 0;
    double residual_mse = 0.0;
    bool truncated = false;
};

struct KrsfdModel {
    KrsfdHyperparams hp;
    Matrix x_train;   // N x p
    Matrix record_t;  // S x q raw measurement locations (design is rebuilt from these)
    SparseDesign design;
    Vector theta;  // NL, blocks of L per training input
    double sigma2 = 0.0;
    CgReport cg;

    std::size_t n_inputs() const { return x_train.rows(); }
    std::size_t n_centers() const { return hp.centers.rows(); }

    // Covariance machinery is built on first use and shared across copies.
    struct CovarianceCache;
    std::shared_ptr<CovarianceCache> cov_cache;
};

/// Fresh (empty) covariance cache; attached by fit and by the model loader.
std::shared_ptr<KrsfdModel::CovarianceCache> make_covariance_cache();

/// Assembles the truncated design. The input Gram is truncated at z_g, each
/// per-input T_i block independently at z_t_from_z_g(z_g), which steers the
/// overall zero fraction of H toward 0.9.
SparseDesign build_design(const SparseFunctionalDataset& dataset,
                          const KrsfdHyperparams& hp);

KrsfdModel fit_krsfd(const SparseFunctionalDataset& dataset, const KrsfdHyperparams& hp);

/// Mean and predictive variance at one (x, t) query. Kernel values below the
/// stored truncation thresholds are zeroed, mirroring the design assembly.
PredictiveDistribution predict(const KrsfdModel& model, std::span<const double> x_new,
                               std::span<const double> t_new);

std::vector<PredictiveDistribution> predict_curve(const KrsfdModel& model,
                                                  std::span<const double> x_new,
                                                  const Matrix& t_grid);

/// Predictive means at every record of a query dataset (no variance).
Vector predict_records(const KrsfdModel& model, const SparseFunctionalDataset& query);

/// Latent-function draws from the parameter posterior on t_grid;
/// deterministic per seed. Exact mode uses a Cholesky of the normal-equation
/// matrix; ILU mode uses triangular solves against the incomplete factors.
Matrix sample_functions(const KrsfdModel& model, std::span<const double> x_new,
                        const Matrix& t_grid, std::size_t n_samples, std::uint64_t seed);

/// The variance mode the model will use (builds the covariance machinery).
VarianceMode covariance_mode(const KrsfdModel& model);

}  // namespace krfd
