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

// =============================================================================
// Runtime-dispatched vector primitives.
//
// Every arithmetic inner loop in the library (distances, dot products, axpy,
// CSR gather-dot) goes through this table. A scalar reference backend is
// always available; AVX2 (x86-64) and NEON (aarch64) variants are selected at
// startup when the CPU supports them. Backends are equivalence-tested against
// the scalar reference in tests/test_simd.cpp.
//
// The selected backend is fixed for the lifetime of the process, so repeated
// runs on the same machine produce bit-identical results. The environment
// variable KRFD_SIMD=scalar|avx2|neon overrides the automatic choice.
// =============================================================================

namespace krfd::simd {

struct Ops {
    const char* name;

    // sum_i x[i] * y[i]
    double (*dot)(const double* x, const double* y, std::size_t n);
    // sum_i x[i]
    double (*sum)(const double* x, std::size_t n);
    // sum_i (x[i] - y[i])^2
    double (*sq_dist)(const double* x, const double* y, std::size_t n);
    // sum_i |x[i] - y[i]|
    double (*l1_dist)(const double* x, const double* y, std::size_t n);
    // y[i] += a * x[i]
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    // x[i] *= a
    void (*scale)(double a, double* x, std::size_t n);
    // sum_i vals[i] * x[idx[i]]  (sparse row dot against a dense vector)
    double (*gather_dot)(const double* vals, const int* idx, std::size_t n,
                         const double* x);
};

// Reference implementation; always available.
const Ops& scalar_ops();

// Architecture-specific tables; nullptr when not compiled in or not
// supported by the running CPU.
const Ops* avx2_ops();
const Ops* neon_ops();

// Backend chosen at first use (honors KRFD_SIMD).
const Ops& active();

inline double dot(const double* x, const double* y, std::size_t n) {
    return active().dot(x, y, n);
}
inline double sum(const double* x, std::size_t n) { return active().sum(x, n); }
inline double sq_dist(const double* x, const double* y, std::size_t n) {
    return active().sq_dist(x, y, n);
}
inline double l1_dist(const double* x, const double* y, std::size_t n) {
    return active().l1_dist(x, y, n);
}
inline void axpy(double a, const double* x, double* y, std::size_t n) {
    active().axpy(a, x, y, n);
}
inline void scale(double a, double* x, std::size_t n) { active().scale(a, x, n); }
inline double gather_dot(const double* vals, const int* idx, std::size_t n,
                         const double* x) {
    return active().gather_dot(vals, idx, n, x);
}

}  // namespace krfd::simd
