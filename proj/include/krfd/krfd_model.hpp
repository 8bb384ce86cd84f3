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

#include <cstdint>

#include "krfd/dataset.hpp"
#include "krfd/kernel.hpp"
#include "krfd/linalg.hpp"

namespace krfd {

// =============================================================================
// KRFD: kernel regression for functional data on a shared measurement grid.
//
// Model:  Y(X, t) = sum_nl k_G(X, X_n) theta_nl k_T(t, t_l)
//                 + sum_m c_m k_M(X, X_m) + noise,
// fitted in closed form as the joint MAP of (theta, c) under separable
// Gaussian priors, with the noise variance estimated as the MAP of its
// inverse-gamma posterior. The Kronecker structure keeps every solve at
// N x N or L x L.
// =============================================================================

struct KrfdHyperparams {
    double lambda_g = 1e-3;
    double lambda_t = 1e-3;
    double lambda_m = 1e-3;
    KernelConfig kernel_g;
    KernelConfig kernel_t;
    KernelConfig kernel_m;
    double alpha = 1e-3;  // inverse-gamma shape for the noise variance prior
    double beta = 1e-3;   // inverse-gamma scale
    bool include_mu = true;

    void validate() const;
};

enum class VarianceMode { kExact, kIlu };

struct PredictiveDistribution {
    double mean = 0.0;
    double variance = 0.0;
    bool clamped = false;  // variance was negative before clamping to zero
    VarianceMode variance_mode = VarianceMode::kExact;
};

struct KrfdModel {
    KrfdHyperparams hp;
    Matrix x_train;  // N x p
    Matrix t_train;  // L x q
    Matrix theta;    // N x L MAP coefficients
    Vector c;        // N MAP baseline coefficients (zeros when !include_mu)
    double sigma2 = 0.0;

    // Gram matrices and the factorizations behind the predictive variance.
    Matrix g, t, m;
    SymFactor fac_g2;  // G^2 + lambda_g G
    SymFactor fac_t2;  // T^2 + lambda_t T
    SymFactor fac_m2;  // M^2 + lambda_m M (only when include_mu)

    std::size_t n_inputs() const { return x_train.rows(); }
    std::size_t n_grid() const { return t_train.rows(); }
};

KrfdModel fit_krfd(const DenseFunctionalDataset& dataset, const KrfdHyperparams& hp);

PredictiveDistribution predict(const KrfdModel& model, std::span<const double> x_new,
                               std::span<const double> t_new);

/// Elementwise predict over a grid; the input-side kernel vectors and
/// quadratic forms are computed once and shared.
std::vector<PredictiveDistribution> predict_curve(const KrfdModel& model,
                                                  std::span<const double> x_new,
                                                  const Matrix& t_grid);

/// Predictive means for many inputs over a grid (batched matrix form).
Matrix predict_surface(const KrfdModel& model, const Matrix& x_query, const Matrix& t_grid);

/// Draws latent functions (no observation noise) from the parameter
/// posterior, evaluated on t_grid. Deterministic for a fixed seed.
/// Returns n_samples x t_grid.rows().
Matrix sample_functions(const KrfdModel& model, std::span<const double> x_new,
                        const Matrix& t_grid, std::size_t n_samples, std::uint64_t seed);

/// Kernel vector of a query point against stored points (one row per point).
Vector kernel_vector(const KernelConfig& cfg, const Matrix& points,
                     std::span<const double> query);

/// Symmetric inverse square root via eigendecomposition; eigenvalues are
/// clipped below at 1e-10 of the largest before inversion. Used to map
/// standard-normal draws onto N(0, mat^{-1}).
Matrix inverse_sqrt_psd(const Matrix& mat);

}  // namespace krfd
