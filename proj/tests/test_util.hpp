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

#include <cmath>

#include "krfd/linalg.hpp"
#include "krfd/matrix.hpp"
#include "krfd/rng.hpp"

namespace krfd::test {

inline Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double lo = -1.0,
                            double hi = 1.0) {
    Matrix m(rows, cols);
    for (double& v : m.storage()) v = rng.uniform(lo, hi);
    return m;
}

inline Vector random_vector(std::size_t n, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Vector v(n);
    for (double& x : v) x = rng.uniform(lo, hi);
    return v;
}

// A^T A + ridge I, guaranteed SPD for ridge > 0.
inline Matrix random_spd(std::size_t n, Rng& rng, double ridge = 0.1) {
    const Matrix a = random_matrix(n, n, rng);
    Matrix s = matmul_at_b(a, a);
    for (std::size_t i = 0; i < n; ++i) s(i, i) += ridge;
    return s;
}

inline Matrix random_symmetric(std::size_t n, Rng& rng) {
    Matrix s(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            const double v = rng.uniform(-1.0, 1.0);
            s(i, j) = v;
            s(j, i) = v;
        }
    }
    return s;
}

// Explicit Kronecker product, the oracle for kron_apply and the factored solves.
inline Matrix kron_explicit(const Matrix& a, const Matrix& b) {
    Matrix k(a.rows() * b.rows(), a.cols() * b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            for (std::size_t r = 0; r < b.rows(); ++r) {
                for (std::size_t c = 0; c < b.cols(); ++c) {
                    k(i * b.rows() + r, j * b.cols() + c) = a(i, j) * b(r, c);
                }
            }
        }
    }
    return k;
}

inline double rel_err(double got, double want) {
    const double denom = std::max(std::fabs(want), 1e-300);
    return std::fabs(got - want) / denom;
}

inline double rel_err(const Vector& got, const Vector& want) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) {
        const double d = got[i] - want[i];
        num += d * d;
        den += want[i] * want[i];
    }
    return std::sqrt(num / std::max(den, 1e-300));
}

inline double rel_err(const Matrix& got, const Matrix& want) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) {
        const double d = got.data()[i] - want.data()[i];
        num += d * d;
        den += want.data()[i] * want.data()[i];
    }
    return std::sqrt(num / std::max(den, 1e-300));
}

}  // namespace krfd::test
