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

#include "krfd/dataset.hpp"
#include "krfd/kernel.hpp"

namespace krfd {

// =============================================================================
// FLM: function-on-scalar linear model. Y(X, t) = beta_0(t) + sum_j x_j
// beta_j(t) with each beta_j expanded over t-space kernels on a center grid.
// Linear in X by construction; fitted by ridge-regularized least squares on
// the stacked design W (rows w_i = augmented-X_i^T kron T_i).
// =============================================================================

struct FlmModel {
    Vector theta;  // (p+1)*L, ordered (beta_0 block, beta_1 block, ..., beta_p block)
    KernelConfig kernel_t;
    Matrix centers;  // L x q
    double lambda = 0.0;
    std::size_t input_dim = 0;  // p
};

/// Refuses systems with (p+1)*L above this unless overridden; the normal
/// equations are dense of that order.
inline constexpr std::size_t kFlmDefaultCoefCap = 20000;

FlmModel flm_fit(const SparseFunctionalDataset& dataset, double lambda,
                 const KernelConfig& kernel_t, const Matrix& centers,
                 std::size_t coef_cap = kFlmDefaultCoefCap);

/// Dense-grid convenience: centers default to the dataset grid and the shared
/// T block is assembled once.
FlmModel flm_fit(const DenseFunctionalDataset& dataset, double lambda,
                 const KernelConfig& kernel_t, const Matrix* centers = nullptr,
                 std::size_t coef_cap = kFlmDefaultCoefCap);

double flm_predict(const FlmModel& model, std::span<const double> x_new,
                   std::span<const double> t_new);

/// Means for every record of a query dataset.
Vector flm_predict_records(const FlmModel& model, const SparseFunctionalDataset& query);
/// Means for every input over the dataset grid.
Matrix flm_predict_surface(const FlmModel& model, const Matrix& x_query, const Matrix& t_grid);

// =============================================================================
// KRR bank: one independent kernel ridge regressor per measurement point of a
// dense grid. Requires the shared-grid layout; sparse data is rejected.
// =============================================================================

struct KrrPointConfig {
    KernelConfig kernel;
    double alpha = 1.0;  // ridge strength added to the Gram diagonal
};

struct KrrBankModel {
    std::vector<KrrPointConfig> configs;  // one per grid point
    Matrix coef;                          // L x N dual coefficients
    Matrix x_train;                       // N x p
    Matrix t_grid;                        // L x q, the measurement points
};

/// Dual ridge per grid column j: coefficients = (G_j + alpha_j I)^{-1} y_j.
KrrBankModel krr_bank_fit(const DenseFunctionalDataset& dataset,
                          const std::vector<KrrPointConfig>& per_point);

Vector krr_bank_predict(const KrrBankModel& model, std::span<const double> x_new);
Matrix krr_bank_predict_surface(const KrrBankModel& model, const Matrix& x_query);

/// Translation from inverse-scale parametrization: gamma = 1/(2 sigma^2) for
/// Gaussian kernels and 1/sigma for Laplacian ones.
KernelConfig kernel_from_gamma(KernelKind kind, double gamma);

}  // namespace krfd
