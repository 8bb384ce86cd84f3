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

#include <span>
#include <string>

#include "krfd/matrix.hpp"
#include "krfd/sparse.hpp"

namespace krfd {

enum class KernelKind { kGaussian, kLaplacian };

std::string kernel_kind_name(KernelKind kind);
KernelKind kernel_kind_from_name(const std::string& name);

/// Positive-definite kernel on R^d.
///   Gaussian:  exp(-||a - b||_2^2 / (2 scale^2))
///   Laplacian: exp(-|a - b|_1 / scale)
/// Both evaluate to exactly 1 at a == b and lie in (0, 1].
struct KernelConfig {
    KernelKind kind = KernelKind::kGaussian;
    double scale = 1.0;
};

double eval_kernel(const KernelConfig& cfg, std::span<const double> a,
                   std::span<const double> b);

/// Gram matrix between two point sets (rows of the argument matrices).
/// The square same-set overload computes the upper triangle and mirrors it,
/// so the result is symmetric to the bit.
Matrix gram(const KernelConfig& cfg, const Matrix& row_points, const Matrix& col_points);
Matrix gram(const KernelConfig& cfg, const Matrix& points);

/// Result of quantile truncation of a Gram matrix.
/// Entries with value < threshold were replaced by structural zeros. The
/// diagonal of a square matrix is always retained. `threshold` is kept so
/// query-time kernel evaluations can be zeroed by the same rule.
struct SparseGram {
    SparseMatrix matrix;
    double zero_fraction = 0.0;  // achieved, not target
    double threshold = 0.0;
};

/// Zeros the ceil(target_zero_fraction * entry-count) smallest off-diagonal
/// values. The threshold is a global quantile of the candidate values; ties
/// at the threshold are kept, so the achieved fraction may undershoot the
/// target. diagonal_exempt only applies when the matrix is square; pass
/// false for blocks whose rows and columns index different point sets.
SparseGram truncate(const Matrix& gm, double target_zero_fraction,
                    bool diagonal_exempt = true);

/// Given the zero fraction z_G of the input-space Gram, the t-space fraction
/// that drives the combined design zero fraction z_G + z_T - z_G*z_T to 0.9.
double z_t_from_z_g(double z_g);

}  // namespace krfd
