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

#include "krfd/sparse.hpp"

#include <algorithm>
#include <cmath>

#include "krfd/simd.hpp"

namespace krfd {

SparseMatrix SparseMatrix::from_dense(const Matrix& dense, double drop_below_abs) {
    SparseMatrix out(dense.rows(), dense.cols());
    for (std::size_t i = 0; i < dense.rows(); ++i) {
        const double* row = dense.row(i);
        for (std::size_t j = 0; j < dense.cols(); ++j) {
            if (row[j] != 0.0 && std::fabs(row[j]) >= drop_below_abs) {
                out.col_idx.push_back(static_cast<std::int32_t>(j));
                out.values.push_back(row[j]);
            }
        }
        out.row_ptr[i + 1] = static_cast<std::int64_t>(out.values.size());
    }
    return out;
}

Matrix SparseMatrix::to_dense() const {
    Matrix out(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::int64_t k = row_begin(i); k < row_end(i); ++k) {
            out(i, static_cast<std::size_t>(col_idx[k])) = values[k];
        }
    }
    return out;
}

SparseMatrix SparseMatrix::transposed() const {
    SparseMatrix out(cols, rows);
    std::vector<std::int64_t> counts(cols, 0);
    for (const std::int32_t c : col_idx) ++counts[static_cast<std::size_t>(c)];
    for (std::size_t j = 0; j < cols; ++j) out.row_ptr[j + 1] = out.row_ptr[j] + counts[j];
    out.col_idx.resize(nnz());
    out.values.resize(nnz());
    std::vector<std::int64_t> cursor(out.row_ptr.begin(), out.row_ptr.end() - 1);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::int64_t k = row_begin(i); k < row_end(i); ++k) {
            const auto j = static_cast<std::size_t>(col_idx[k]);
            const std::int64_t pos = cursor[j]++;
            out.col_idx[pos] = static_cast<std::int32_t>(i);
            out.values[pos] = values[k];
        }
    }
    return out;
}

void SparseMatrix::matvec(const double* x, double* y) const {
    for (std::size_t i = 0; i < rows; ++i) {
        const std::int64_t lo = row_ptr[i];
        const std::int64_t hi = row_ptr[i + 1];
        y[i] = simd::gather_dot(values.data() + lo, col_idx.data() + lo,
                                static_cast<std::size_t>(hi - lo), x);
    }
}

void SparseMatrix::matvec_transpose(const double* x, double* y) const {
    std::fill(y, y + cols, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        for (std::int64_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
            y[col_idx[k]] += xi * values[k];
        }
    }
}

void SparseMatrix::validate() const {
    if (row_ptr.size() != rows + 1) throw InputError("sparse: bad row_ptr length");
    if (row_ptr.front() != 0 || row_ptr.back() != static_cast<std::int64_t>(nnz())) {
        throw InputError("sparse: bad row_ptr bounds");
    }
    for (std::size_t i = 0; i < rows; ++i) {
        std::int32_t prev = -1;
        for (std::int64_t k = row_begin(i); k < row_end(i); ++k) {
            if (col_idx[k] <= prev || col_idx[k] >= static_cast<std::int32_t>(cols)) {
                throw InputError("sparse: column indices not strictly increasing");
            }
            if (values[k] == 0.0) throw InputError("sparse: explicit zero stored");
            prev = col_idx[k];
        }
    }
}

SparseMatrix sparse_ata_plus_ridge(const SparseMatrix& a, double ridge) {
    const std::size_t n = a.cols;
    const SparseMatrix at = a.transposed();
    SparseMatrix out(n, n);
    Vector accum(n, 0.0);
    std::vector<std::int32_t> touched;
    touched.reserve(256);
    for (std::size_t j = 0; j < n; ++j) {
        // Row j of A^T A = sum over rows r of A with a_rj != 0 of a_rj * A[r,:].
        for (std::int64_t k = at.row_begin(j); k < at.row_end(j); ++k) {
            const auto r = static_cast<std::size_t>(at.col_idx[k]);
            const double arj = at.values[k];
            for (std::int64_t m = a.row_begin(r); m < a.row_end(r); ++m) {
                const std::int32_t c = a.col_idx[m];
                if (accum[c] == 0.0) touched.push_back(c);
                accum[c] += arj * a.values[m];
            }
        }
        if (ridge != 0.0) {
            if (accum[j] == 0.0) touched.push_back(static_cast<std::int32_t>(j));
            accum[j] += ridge;
        }
        std::sort(touched.begin(), touched.end());
        for (const std::int32_t c : touched) {
            if (accum[c] != 0.0) {
                out.col_idx.push_back(c);
                out.values.push_back(accum[c]);
            }
            accum[c] = 0.0;
        }
        touched.clear();
        out.row_ptr[j + 1] = static_cast<std::int64_t>(out.values.size());
    }
    return out;
}

}  // namespace krfd
