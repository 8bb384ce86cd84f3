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

#include "krfd/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "krfd/simd.hpp"

namespace krfd {

namespace {

void check_square(const Matrix& a, const char* what) {
    if (a.rows() != a.cols()) throw InputError(std::string(what) + ": matrix not square");
    if (a.rows() == 0) throw InputError(std::string(what) + ": empty matrix");
}

// In-place lower Cholesky; returns false on a non-positive pivot.
bool try_cholesky(Matrix& a) {
    const std::size_t n = a.rows();
    for (std::size_t j = 0; j < n; ++j) {
        double diag = a(j, j) - simd::dot(a.row(j), a.row(j), j);
        if (!(diag > 0.0) || !std::isfinite(diag)) return false;
        diag = std::sqrt(diag);
        a(j, j) = diag;
        const double inv = 1.0 / diag;
        for (std::size_t i = j + 1; i < n; ++i) {
            const double v = (a(i, j) - simd::dot(a.row(i), a.row(j), j)) * inv;
            a(i, j) = v;
        }
    }
    // Zero the strict upper triangle so the factor is exactly triangular.
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) a(i, j) = 0.0;
    }
    return true;
}

}  // namespace

SymFactor SymFactor::cholesky(const Matrix& a) {
    check_square(a, "cholesky");
    if (!all_finite(a)) throw InputError("cholesky: non-finite entries");
    const std::size_t n = a.rows();
    double trace = 0.0;
    for (std::size_t i = 0; i < n; ++i) trace += a(i, i);
    const double base = std::max(trace / static_cast<double>(n), 1.0e-300);

    static constexpr double kJitterScale[] = {0.0, 1e-10, 1e-8, 1e-6};
    for (const double scale : kJitterScale) {
        Matrix work = a;
        const double jitter = scale * base;
        if (jitter != 0.0) {
            for (std::size_t i = 0; i < n; ++i) work(i, i) += jitter;
        }
        if (try_cholesky(work)) {
            SymFactor fac;
            fac.l_ = std::move(work);
            fac.jitter_ = jitter;
            return fac;
        }
    }
    throw NumericalError("cholesky: matrix is singular beyond the jitter ladder");
}

double SymFactor::log_det() const {
    double acc = 0.0;
    for (std::size_t i = 0; i < dim(); ++i) acc += std::log(l_(i, i));
    return 2.0 * acc;
}

Vector SymFactor::solve(const Vector& rhs) const {
    if (rhs.size() != dim()) throw InputError("sym solve: rhs length mismatch");
    const std::size_t n = dim();
    Vector x = rhs;
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = (x[i] - simd::dot(l_.row(i), x.data(), i)) / l_(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double v = x[ii];
        for (std::size_t k = ii + 1; k < n; ++k) v -= l_(k, ii) * x[k];
        x[ii] = v / l_(ii, ii);
    }
    return x;
}

Matrix SymFactor::solve(const Matrix& rhs) const {
    if (rhs.rows() != dim()) throw InputError("sym solve: rhs row count mismatch");
    const std::size_t n = dim();
    const std::size_t m = rhs.cols();
    Matrix x = rhs;
    // Forward substitution across all right-hand sides at once.
    for (std::size_t i = 0; i < n; ++i) {
        double* xi = x.row(i);
        const double* li = l_.row(i);
        for (std::size_t k = 0; k < i; ++k) {
            if (li[k] != 0.0) simd::axpy(-li[k], x.row(k), xi, m);
        }
        simd::scale(1.0 / l_(i, i), xi, m);
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double* xi = x.row(ii);
        for (std::size_t k = ii + 1; k < n; ++k) {
            const double lki = l_(k, ii);
            if (lki != 0.0) simd::axpy(-lki, x.row(k), xi, m);
        }
        simd::scale(1.0 / l_(ii, ii), xi, m);
    }
    return x;
}

Matrix SymFactor::right_solve(const Matrix& lhs) const {
    // lhs A^{-1} = (A^{-1} lhs^T)^T by symmetry of A.
    return transpose(solve(transpose(lhs)));
}

Vector SymFactor::upper_solve(Vector rhs) const {
    if (rhs.size() != dim()) throw InputError("upper_solve: rhs length mismatch");
    const std::size_t n = dim();
    for (std::size_t ii = n; ii-- > 0;) {
        double v = rhs[ii];
        for (std::size_t k = ii + 1; k < n; ++k) v -= l_(k, ii) * rhs[k];
        rhs[ii] = v / l_(ii, ii);
    }
    return rhs;
}

Matrix SymFactor::reconstruct() const { return matmul_a_bt(l_, l_); }

Matrix sym_solve(const Matrix& mat, const Matrix& rhs) {
    return SymFactor::cholesky(mat).solve(rhs);
}

Vector sym_solve(const Matrix& mat, const Vector& rhs) {
    return SymFactor::cholesky(mat).solve(rhs);
}

Vector lu_solve(Matrix a, Vector rhs) {
    check_square(a, "lu_solve");
    const std::size_t n = a.rows();
    if (rhs.size() != n) throw InputError("lu_solve: rhs length mismatch");
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;

    for (std::size_t k = 0; k < n; ++k) {
        std::size_t pivot = k;
        double best = std::fabs(a(k, k));
        for (std::size_t i = k + 1; i < n; ++i) {
            const double cand = std::fabs(a(i, k));
            if (cand > best) {
                best = cand;
                pivot = i;
            }
        }
        if (!(best > 0.0) || !std::isfinite(best)) {
            throw NumericalError("lu_solve: singular matrix");
        }
        if (pivot != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(pivot, j));
            std::swap(rhs[k], rhs[pivot]);
        }
        const double inv = 1.0 / a(k, k);
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = a(i, k) * inv;
            if (f != 0.0) {
                a(i, k) = f;
                simd::axpy(-f, a.row(k) + k + 1, a.row(i) + k + 1, n - k - 1);
                rhs[i] -= f * rhs[k];
            }
        }
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double v = rhs[ii];
        for (std::size_t j = ii + 1; j < n; ++j) v -= a(ii, j) * rhs[j];
        rhs[ii] = v / a(ii, ii);
    }
    return rhs;
}

// =============================================================================
// Symmetric eigendecomposition (Householder reduction + implicit QL)
// =============================================================================

namespace {

// Reduces a symmetric matrix to tridiagonal form; on exit `a` holds the
// accumulated orthogonal transform, d the diagonal, e the subdiagonal
// (e[0] unused).
void householder_tridiag(Matrix& a, Vector& d, Vector& e) {
    const std::size_t n = a.rows();
    for (std::size_t i = n - 1; i > 0; --i) {
        const std::size_t l = i - 1;
        double h = 0.0;
        if (l > 0) {
            double scale = 0.0;
            for (std::size_t k = 0; k <= l; ++k) scale += std::fabs(a(i, k));
            if (scale == 0.0) {
                e[i] = a(i, l);
            } else {
                const double inv_scale = 1.0 / scale;
                for (std::size_t k = 0; k <= l; ++k) {
                    a(i, k) *= inv_scale;
                    h += a(i, k) * a(i, k);
                }
                double f = a(i, l);
                double g = (f >= 0.0) ? -std::sqrt(h) : std::sqrt(h);
                e[i] = scale * g;
                h -= f * g;
                a(i, l) = f - g;
                f = 0.0;
                for (std::size_t j = 0; j <= l; ++j) {
                    a(j, i) = a(i, j) / h;
                    g = 0.0;
                    for (std::size_t k = 0; k <= j; ++k) g += a(j, k) * a(i, k);
                    for (std::size_t k = j + 1; k <= l; ++k) g += a(k, j) * a(i, k);
                    e[j] = g / h;
                    f += e[j] * a(i, j);
                }
                const double hh = f / (h + h);
                for (std::size_t j = 0; j <= l; ++j) {
                    f = a(i, j);
                    e[j] = g = e[j] - hh * f;
                    for (std::size_t k = 0; k <= j; ++k) {
                        a(j, k) -= f * e[k] + g * a(i, k);
                    }
                }
            }
        } else {
            e[i] = a(i, l);
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (d[i] != 0.0) {
            for (std::size_t j = 0; j < i; ++j) {
                double g = 0.0;
                for (std::size_t k = 0; k < i; ++k) g += a(i, k) * a(k, j);
                for (std::size_t k = 0; k < i; ++k) a(k, j) -= g * a(k, i);
            }
        }
        d[i] = a(i, i);
        a(i, i) = 1.0;
        for (std::size_t j = 0; j < i; ++j) a(j, i) = a(i, j) = 0.0;
    }
}

inline double hypot2(double a, double b) { return std::sqrt(a * a + b * b); }

// Implicit-shift QL on the tridiagonal (d, e); z accumulates eigenvectors.
void tridiag_ql(Vector& d, Vector& e, Matrix& z) {
    const std::size_t n = d.size();
    if (n == 1) return;
    for (std::size_t i = 1; i < n; ++i) e[i - 1] = e[i];
    e[n - 1] = 0.0;

    for (std::size_t l = 0; l < n; ++l) {
        int iter = 0;
        std::size_t m;
        do {
            for (m = l; m + 1 < n; ++m) {
                const double dd = std::fabs(d[m]) + std::fabs(d[m + 1]);
                if (std::fabs(e[m]) <= std::numeric_limits<double>::epsilon() * dd) break;
            }
            if (m != l) {
                if (++iter == 64) {
                    throw NumericalError("eig_sym: QL iteration failed to converge");
                }
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = hypot2(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + (g >= 0.0 ? std::fabs(r) : -std::fabs(r)));
                double s = 1.0;
                double c = 1.0;
                double p = 0.0;
                bool underflow_exit = false;
                for (std::size_t ii = m; ii-- > l;) {
                    double f = s * e[ii];
                    const double b = c * e[ii];
                    r = hypot2(f, g);
                    e[ii + 1] = r;
                    if (r == 0.0) {
                        d[ii + 1] -= p;
                        e[m] = 0.0;
                        underflow_exit = true;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[ii + 1] - p;
                    r = (d[ii] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[ii + 1] = g + p;
                    g = c * r - b;
                    for (std::size_t k = 0; k < n; ++k) {
                        f = z(k, ii + 1);
                        z(k, ii + 1) = s * z(k, ii) + c * f;
                        z(k, ii) = c * z(k, ii) - s * f;
                    }
                }
                if (underflow_exit) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }
}

}  // namespace

EigSym eig_sym(const Matrix& mat) {
    check_square(mat, "eig_sym");
    if (!all_finite(mat)) throw InputError("eig_sym: non-finite entries");
    const std::size_t n = mat.rows();
    EigSym out;
    out.values.assign(n, 0.0);
    if (n == 1) {
        out.values[0] = mat(0, 0);
        out.vectors = Matrix::identity(1);
        return out;
    }
    Matrix z = mat;
    Vector e(n, 0.0);
    householder_tridiag(z, out.values, e);
    tridiag_ql(out.values, e, z);

    // Sort ascending, permuting eigenvector columns along.
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return out.values[a] < out.values[b];
    });
    Vector sorted_vals(n);
    Matrix sorted_vecs(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        sorted_vals[k] = out.values[order[k]];
        for (std::size_t r = 0; r < n; ++r) sorted_vecs(r, k) = z(r, order[k]);
    }
    out.values = std::move(sorted_vals);
    out.vectors = std::move(sorted_vecs);
    return out;
}

Vector kron_apply(const Matrix& a, const Matrix& b, const Vector& v) {
    check_square(a, "kron_apply");
    check_square(b, "kron_apply");
    const std::size_t n = a.rows();
    const std::size_t l = b.rows();
    if (v.size() != n * l) throw InputError("kron_apply: vector length must be N*L");

    // v viewed as N x L row-major V; result is A V B^T flattened the same way.
    Matrix vb(n, l);
    for (std::size_t i = 0; i < n; ++i) {
        const double* vi = v.data() + i * l;
        double* out = vb.row(i);
        for (std::size_t j = 0; j < l; ++j) out[j] = simd::dot(vi, b.row(j), l);
    }
    Vector result(n * l, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double* ri = result.data() + i * l;
        const double* ai = a.row(i);
        for (std::size_t k = 0; k < n; ++k) {
            if (ai[k] != 0.0) simd::axpy(ai[k], vb.row(k), ri, l);
        }
    }
    return result;
}

CgResult cg_solve(const LinearOperator& op, const Vector& rhs, double tol_mse,
                  int max_iters, const std::function<void(int, const Vector&)>& on_iterate) {
    if (op.n != rhs.size()) throw InputError("cg_solve: operator/rhs size mismatch");
    if (!(tol_mse > 0.0)) throw InputError("cg_solve: tol_mse must be positive");
    if (max_iters < 1) throw InputError("cg_solve: max_iters must be >= 1");
    const std::size_t n = op.n;
    const double dn = static_cast<double>(n);

    CgResult res;
    res.x.assign(n, 0.0);
    Vector r = rhs;
    Vector p = rhs;
    Vector ap(n, 0.0);
    double rr = simd::dot(r.data(), r.data(), n);

    if (rr / dn <= tol_mse) {
        res.residual_mse = rr / dn;
        return res;
    }

    while (res.iterations < max_iters) {
        op.apply(p.data(), ap.data());
        const double pap = simd::dot(p.data(), ap.data(), n);
        if (!std::isfinite(pap) || pap == 0.0) {
            throw NumericalError("cg_solve: breakdown (non-finite or zero curvature)");
        }
        const double alpha = rr / pap;
        simd::axpy(alpha, p.data(), res.x.data(), n);
        simd::axpy(-alpha, ap.data(), r.data(), n);
        ++res.iterations;
        const double rr_next = simd::dot(r.data(), r.data(), n);
        if (!std::isfinite(rr_next)) {
            throw NumericalError("cg_solve: breakdown (non-finite residual)");
        }
        if (on_iterate) on_iterate(res.iterations, res.x);
        if (rr_next / dn <= tol_mse) {
            rr = rr_next;
            break;
        }
        const double beta = rr_next / rr;
        rr = rr_next;
        for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    }

    // Recompute the true residual; the recurrence can drift.
    op.apply(res.x.data(), ap.data());
    simd::axpy(-1.0, rhs.data(), ap.data(), n);
    res.residual_mse = simd::dot(ap.data(), ap.data(), n) / dn;
    res.truncated = res.residual_mse > tol_mse;
    return res;
}

// =============================================================================
// ILUT
// =============================================================================

IluFactor ilu_factor(const SparseMatrix& a, double drop_tol, double fill_factor) {
    if (a.rows != a.cols) throw InputError("ilu_factor: matrix not square");
    if (drop_tol < 0.0 || fill_factor <= 0.0) {
        throw InputError("ilu_factor: bad drop tolerance or fill factor");
    }
    const std::size_t n = a.rows;
    IluFactor fac;
    fac.drop_tolerance = drop_tol;
    fac.fill_factor = fill_factor;
    fac.l = SparseMatrix(n, n);
    fac.u = SparseMatrix(n, n);

    // Dense workspace row + touched list; U rows are looked up via row_ptr of
    // the partially built factor.
    Vector w(n, 0.0);
    std::vector<std::int32_t> touched;

    // Diagonal positions of finished U rows (offset into fac.u.values).
    std::vector<std::int64_t> u_diag(n, -1);

    for (std::size_t i = 0; i < n; ++i) {
        touched.clear();
        double row_norm = 0.0;
        for (std::int64_t k = a.row_begin(i); k < a.row_end(i); ++k) {
            const std::int32_t c = a.col_idx[k];
            w[c] = a.values[k];
            touched.push_back(c);
            row_norm += a.values[k] * a.values[k];
        }
        row_norm = std::sqrt(row_norm);
        if (row_norm == 0.0) throw ZeroPivotError("ilu_factor: empty row");
        const double drop = drop_tol * row_norm;
        const std::size_t row_nnz = static_cast<std::size_t>(a.row_end(i) - a.row_begin(i));
        const auto keep_cap = static_cast<std::size_t>(
            std::max(1.0, std::ceil(fill_factor * static_cast<double>(row_nnz))));

        std::sort(touched.begin(), touched.end());
        // Eliminate against finished rows k < i in ascending column order.
        // New fill-in positions are appended and processed in order.
        std::size_t cursor = 0;
        while (cursor < touched.size()) {
            // Find the smallest untreated column < i.
            std::int32_t k = -1;
            for (std::size_t t = cursor; t < touched.size(); ++t) {
                const std::int32_t c = touched[t];
                if (c >= static_cast<std::int32_t>(i)) continue;
                if (k == -1 || c < k) k = c;
            }
            if (k == -1) break;
            // Swap k to the cursor position.
            for (std::size_t t = cursor; t < touched.size(); ++t) {
                if (touched[t] == k) {
                    std::swap(touched[t], touched[cursor]);
                    break;
                }
            }
            ++cursor;
            const double ukk = fac.u.values[u_diag[k]];
            double factor = w[k] / ukk;
            if (std::fabs(factor) < drop) {
                w[k] = 0.0;
                continue;
            }
            w[k] = factor;
            for (std::int64_t m = u_diag[k] + 1; m < fac.u.row_end(static_cast<std::size_t>(k)); ++m) {
                const std::int32_t c = fac.u.col_idx[m];
                if (w[c] == 0.0) touched.push_back(c);
                w[c] -= factor * fac.u.values[m];
            }
        }

        // Split into L (cols < i) and U (cols >= i), drop small entries, cap fill.
        std::vector<std::pair<std::int32_t, double>> l_part, u_part;
        std::sort(touched.begin(), touched.end());
        touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
        double diag_val = 0.0;
        for (const std::int32_t c : touched) {
            const double v = w[c];
            w[c] = 0.0;
            if (c == static_cast<std::int32_t>(i)) {
                diag_val = v;
                continue;
            }
            if (v == 0.0 || std::fabs(v) < drop) continue;
            if (c < static_cast<std::int32_t>(i)) {
                l_part.emplace_back(c, v);
            } else {
                u_part.emplace_back(c, v);
            }
        }
        auto cap_largest = [&](std::vector<std::pair<std::int32_t, double>>& part) {
            if (part.size() <= keep_cap) return;
            std::nth_element(part.begin(), part.begin() + static_cast<std::ptrdiff_t>(keep_cap),
                             part.end(), [](const auto& x, const auto& y) {
                                 return std::fabs(x.second) > std::fabs(y.second);
                             });
            part.resize(keep_cap);
        };
        cap_largest(l_part);
        cap_largest(u_part);
        std::sort(l_part.begin(), l_part.end());
        std::sort(u_part.begin(), u_part.end());

        if (diag_val == 0.0 || !std::isfinite(diag_val)) {
            throw ZeroPivotError("ilu_factor: zero pivot at row " + std::to_string(i));
        }

        for (const auto& [c, v] : l_part) {
            fac.l.col_idx.push_back(c);
            fac.l.values.push_back(v);
        }
        fac.l.col_idx.push_back(static_cast<std::int32_t>(i));
        fac.l.values.push_back(1.0);
        fac.l.row_ptr[i + 1] = static_cast<std::int64_t>(fac.l.values.size());

        u_diag[i] = static_cast<std::int64_t>(fac.u.values.size());
        fac.u.col_idx.push_back(static_cast<std::int32_t>(i));
        fac.u.values.push_back(diag_val);
        for (const auto& [c, v] : u_part) {
            fac.u.col_idx.push_back(c);
            fac.u.values.push_back(v);
        }
        fac.u.row_ptr[i + 1] = static_cast<std::int64_t>(fac.u.values.size());
    }
    return fac;
}

Vector ilu_inverse_apply(const IluFactor& fac, const Vector& rhs) {
    const std::size_t n = fac.l.rows;
    if (rhs.size() != n) throw InputError("ilu_inverse_apply: rhs length mismatch");
    Vector x = rhs;
    // Forward: L y = rhs (unit diagonal stored last in each row).
    for (std::size_t i = 0; i < n; ++i) {
        double v = x[i];
        for (std::int64_t k = fac.l.row_begin(i); k < fac.l.row_end(i) - 1; ++k) {
            v -= fac.l.values[k] * x[fac.l.col_idx[k]];
        }
        x[i] = v;
    }
    // Backward: U x = y (diagonal stored first in each row).
    for (std::size_t ii = n; ii-- > 0;) {
        double v = x[ii];
        const std::int64_t lo = fac.u.row_begin(ii);
        for (std::int64_t k = lo + 1; k < fac.u.row_end(ii); ++k) {
            v -= fac.u.values[k] * x[fac.u.col_idx[k]];
        }
        x[ii] = v / fac.u.values[lo];
    }
    return x;
}

Vector ilu_upper_solve_lt(const IluFactor& fac, const Vector& rhs) {
    const std::size_t n = fac.l.rows;
    if (rhs.size() != n) throw InputError("ilu_upper_solve_lt: rhs length mismatch");
    // L^T is upper triangular with unit diagonal; solve by scattering each
    // solved component back through column i of L (= row entries of L).
    Vector x = rhs;
    for (std::size_t ii = n; ii-- > 0;) {
        const double xi = x[ii];
        for (std::int64_t k = fac.l.row_begin(ii); k < fac.l.row_end(ii) - 1; ++k) {
            x[fac.l.col_idx[k]] -= fac.l.values[k] * xi;
        }
    }
    return x;
}

}  // namespace krfd
