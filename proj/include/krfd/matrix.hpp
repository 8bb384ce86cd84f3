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

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "krfd/errors.hpp"

namespace krfd {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles. Value semantics throughout; rows are
/// contiguous so the simd primitives apply directly.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    /// Builds an n x 1 column from a vector.
    static Matrix column(const Vector& v) {
        Matrix m(v.size(), 1);
        for (std::size_t i = 0; i < v.size(); ++i) m(i, 0) = v[i];
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* row(std::size_t i) { return data_.data() + i * cols_; }
    const double* row(std::size_t i) const { return data_.data() + i * cols_; }
    std::span<const double> row_span(std::size_t i) const {
        return {row(i), cols_};
    }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& storage() { return data_; }
    const std::vector<double>& storage() const { return data_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// ---- dense kernels (implemented over the simd layer) ----

Matrix matmul(const Matrix& a, const Matrix& b);
/// a^T * b without materializing the transpose.
Matrix matmul_at_b(const Matrix& a, const Matrix& b);
/// a * b^T without materializing the transpose.
Matrix matmul_a_bt(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

Vector matvec(const Matrix& a, const Vector& x);
/// a^T * x.
Vector matvec_t(const Matrix& a, const Vector& x);

Matrix add(const Matrix& a, const Matrix& b);
Matrix subtract(const Matrix& a, const Matrix& b);
/// a + s * I (square only).
Matrix add_diag(Matrix a, double s);

double frobenius_norm(const Matrix& a);
double vec_norm(const Vector& v);
double vec_dot(const Vector& a, const Vector& b);

/// Row sums of a (length rows).
Vector row_sums(const Matrix& a);

bool all_finite(const Matrix& a);
bool all_finite(const Vector& v);

// ---- tiny parallel helper ----

/// Number of worker threads (KRFD_THREADS override, hardware default).
std::size_t worker_threads();

/// Runs fn(i) for i in [0, n), split across worker threads in contiguous
/// chunks. Callers must ensure iterations touch disjoint state; chunking is
/// deterministic so parallel fills produce identical bytes run to run.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace krfd
