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

#include <functional>

#include "krfd/matrix.hpp"
#include "krfd/sparse.hpp"

namespace krfd {

// =============================================================================
// Symmetric positive-definite factorization
// =============================================================================

/// Cholesky factorization of a symmetric positive-definite matrix.
///
/// Near-singular inputs are retried with escalating diagonal jitter
/// delta in {1e-10, 1e-8, 1e-6} * trace/n; the jitter actually applied is
/// recorded. All jitter levels failing raises NumericalError.
class SymFactor {
public:
    static SymFactor cholesky(const Matrix& a);

    std::size_t dim() const { return l_.rows(); }
    double jitter_used() const { return jitter_; }
    double log_det() const;

    Vector solve(const Vector& rhs) const;
    /// Column-wise solve: returns X with A X = rhs.
    Matrix solve(const Matrix& rhs) const;
    /// Returns X with X A = lhs (i.e. lhs * A^{-1}).
    Matrix right_solve(const Matrix& lhs) const;
    /// Solves L^T x = rhs where A = L L^T; maps N(0, I) draws to
    /// N(0, A^{-1}) samples.
    Vector upper_solve(Vector rhs) const;

    /// L L^T with the jitter still on the diagonal (for verification).
    Matrix reconstruct() const;

private:
    Matrix l_;  // lower-triangular factor of (A + jitter I)
    double jitter_ = 0.0;
};

/// Convenience wrapper: factorize and solve in one call.
Matrix sym_solve(const Matrix& mat, const Matrix& rhs);
Vector sym_solve(const Matrix& mat, const Vector& rhs);

// =============================================================================
// General dense solve (partial-pivot LU); used for the one non-symmetric
// system in the dense model fit.
// =============================================================================

Vector lu_solve(Matrix a, Vector rhs);

// =============================================================================
// Symmetric eigendecomposition
// =============================================================================

struct EigSym {
    Vector values;   // ascending
    Matrix vectors;  // column k is the eigenvector of values[k]; orthonormal
};

/// Householder tridiagonalization followed by implicit-shift QL iteration.
EigSym eig_sym(const Matrix& mat);

// =============================================================================
// Kronecker-product operator
// =============================================================================

/// (A kron B) v without forming the Kronecker matrix. v is laid out in blocks
/// of length L per row of A: v = (V_11..V_1L, V_21..V_2L, ...), matching the
/// row-major flattening of the N x L matrix V. Cost O(NL(N+L)).
Vector kron_apply(const Matrix& a, const Matrix& b, const Vector& v);

// =============================================================================
// Conjugate gradient
// =============================================================================

struct LinearOperator {
    std::size_t n = 0;
    std::function<void(const double* x, double* y)> apply;
};

struct CgResult {
    Vector x;
    int iterations = 0;
    double residual_mse = 0.0;  // ||op x - rhs||^2 / n, recomputed at exit
    bool truncated = false;     // hit max_iters before reaching tol_mse
};

/// CG on a symmetric positive-definite operator, stopping when the mean
/// square of the residual entries drops to tol_mse or the iteration cap is
/// reached. NaN/Inf during iteration raises NumericalError. The optional
/// observer sees every iterate (used by convergence diagnostics).
CgResult cg_solve(const LinearOperator& op, const Vector& rhs, double tol_mse = 1e-3,
                  int max_iters = 500,
                  const std::function<void(int, const Vector&)>& on_iterate = {});

// =============================================================================
// Incomplete LU (dual-threshold ILUT)
// =============================================================================

struct IluFactor {
    SparseMatrix l;  // lower triangular, unit diagonal stored explicitly
    SparseMatrix u;  // upper triangular including diagonal
    double drop_tolerance = 0.0;
    double fill_factor = 0.0;
};

/// Row-wise ILUT: fill-in below drop_tol * (2-norm of the row) is discarded
/// and each half-row keeps at most fill_factor * nnz(row) entries. A zero
/// pivot raises ZeroPivotError so callers can densify or adjust drop_tol.
IluFactor ilu_factor(const SparseMatrix& a, double drop_tol = 1e-4,
                     double fill_factor = 10.0);

/// x = U^{-1} L^{-1} rhs (approximate inverse apply).
Vector ilu_inverse_apply(const IluFactor& fac, const Vector& rhs);

/// Solves L^T x = rhs; with D = diag(U) this maps D^{-1/2}-scaled normal
/// draws to approximate N(0, A^{-1}) samples when A is SPD.
Vector ilu_upper_solve_lt(const IluFactor& fac, const Vector& rhs);

}  // namespace krfd
