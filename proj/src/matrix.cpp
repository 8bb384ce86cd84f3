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

#include "krfd/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "krfd/simd.hpp"

namespace krfd {

namespace {

void check_mul(std::size_t inner_a, std::size_t inner_b, const char* what) {
    if (inner_a != inner_b) {
        throw InputError(std::string(what) + ": inner dimensions disagree");
    }
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
    check_mul(a.cols(), b.rows(), "matmul");
    Matrix c(a.rows(), b.cols());
    // Row-major friendly i-k-j order: row k of b streams through axpy.
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* ci = c.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik != 0.0) simd::axpy(aik, b.row(k), ci, b.cols());
        }
    }
    return c;
}

Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
    check_mul(a.rows(), b.rows(), "matmul_at_b");
    Matrix c(a.cols(), b.cols());
    for (std::size_t k = 0; k < a.rows(); ++k) {
        const double* ak = a.row(k);
        const double* bk = b.row(k);
        for (std::size_t i = 0; i < a.cols(); ++i) {
            if (ak[i] != 0.0) simd::axpy(ak[i], bk, c.row(i), b.cols());
        }
    }
    return c;
}

Matrix matmul_a_bt(const Matrix& a, const Matrix& b) {
    check_mul(a.cols(), b.cols(), "matmul_a_bt");
    Matrix c(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* ai = a.row(i);
        double* ci = c.row(i);
        for (std::size_t j = 0; j < b.rows(); ++j) {
            ci[j] = simd::dot(ai, b.row(j), a.cols());
        }
    }
    return c;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    }
    return t;
}

Vector matvec(const Matrix& a, const Vector& x) {
    check_mul(a.cols(), x.size(), "matvec");
    Vector y(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        y[i] = simd::dot(a.row(i), x.data(), a.cols());
    }
    return y;
}

Vector matvec_t(const Matrix& a, const Vector& x) {
    check_mul(a.rows(), x.size(), "matvec_t");
    Vector y(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        if (x[i] != 0.0) simd::axpy(x[i], a.row(i), y.data(), a.cols());
    }
    return y;
}

Matrix add(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw InputError("add: shape mismatch");
    }
    Matrix c = a;
    simd::axpy(1.0, b.data(), c.data(), c.size());
    return c;
}

Matrix subtract(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw InputError("subtract: shape mismatch");
    }
    Matrix c = a;
    simd::axpy(-1.0, b.data(), c.data(), c.size());
    return c;
}

Matrix add_diag(Matrix a, double s) {
    if (a.rows() != a.cols()) throw InputError("add_diag: matrix not square");
    for (std::size_t i = 0; i < a.rows(); ++i) a(i, i) += s;
    return a;
}

double frobenius_norm(const Matrix& a) {
    return std::sqrt(simd::dot(a.data(), a.data(), a.size()));
}

double vec_norm(const Vector& v) {
    return std::sqrt(simd::dot(v.data(), v.data(), v.size()));
}

double vec_dot(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw InputError("vec_dot: length mismatch");
    return simd::dot(a.data(), b.data(), a.size());
}

Vector row_sums(const Matrix& a) {
    Vector s(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) s[i] = simd::sum(a.row(i), a.cols());
    return s;
}

bool all_finite(const Matrix& a) {
    for (double v : a.storage()) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

bool all_finite(const Vector& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

std::size_t worker_threads() {
    static const std::size_t n = [] {
        if (const char* env = std::getenv("KRFD_THREADS")) {
            const long parsed = std::strtol(env, nullptr, 10);
            if (parsed >= 1) return static_cast<std::size_t>(parsed);
        }
        const unsigned hw = std::thread::hardware_concurrency();
        return static_cast<std::size_t>(hw == 0 ? 1 : hw);
    }();
    return n;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min(worker_threads(), n);
    if (workers <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace krfd
