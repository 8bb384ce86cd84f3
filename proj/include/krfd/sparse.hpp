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
#include <vector>

#include "krfd/matrix.hpp"

namespace krfd {

/// CSR sparse matrix. Column indices are strictly increasing within each row
/// and explicit zeros are never stored.
struct SparseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::int64_t> row_ptr;  // rows + 1 offsets
    std::vector<std::int32_t> col_idx;
    std::vector<double> values;

    SparseMatrix() { row_ptr.push_back(0); }
    SparseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), row_ptr(r + 1, 0) {}

    std::size_t nnz() const { return values.size(); }

    std::int64_t row_begin(std::size_t i) const { return row_ptr[i]; }
    std::int64_t row_end(std::size_t i) const { return row_ptr[i + 1]; }

    static SparseMatrix from_dense(const Matrix& dense, double drop_below_abs = 0.0);
    Matrix to_dense() const;
    SparseMatrix transposed() const;

    /// y = A x
    void matvec(const double* x, double* y) const;
    /// y = A^T x
    void matvec_transpose(const double* x, double* y) const;

    /// Checks the structural invariants; throws InputError on violation.
    void validate() const;
};

/// A^T A + ridge * I as CSR, rows built with a dense accumulator so the
/// result is exact and the column order sorted. Quadratic in the per-row fill
/// of A; intended for moderate problem sizes.
SparseMatrix sparse_ata_plus_ridge(const SparseMatrix& a, double ridge);

}  // namespace krfd
