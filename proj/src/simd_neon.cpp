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

// NEON backend. Advanced SIMD is baseline on aarch64, so no runtime check is
// needed beyond the architecture guard.

#include "krfd/simd.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

#include <cmath>

namespace krfd::simd {
namespace {

double dot_neon(const double* x, const double* y, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(x + i), vld1q_f64(y + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
    }
    for (; i + 2 <= n; i += 2) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(x + i), vld1q_f64(y + i));
    }
    double acc = vaddvq_f64(acc0) + vaddvq_f64(acc1);
    for (; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

double sum_neon(const double* x, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) acc0 = vaddq_f64(acc0, vld1q_f64(x + i));
    double acc = vaddvq_f64(acc0);
    for (; i < n; ++i) acc += x[i];
    return acc;
}

double sq_dist_neon(const double* x, const double* y, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t d = vsubq_f64(vld1q_f64(x + i), vld1q_f64(y + i));
        acc0 = vfmaq_f64(acc0, d, d);
    }
    double acc = vaddvq_f64(acc0);
    for (; i < n; ++i) {
        const double d = x[i] - y[i];
        acc += d * d;
    }
    return acc;
}

double l1_dist_neon(const double* x, const double* y, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        acc0 = vaddq_f64(acc0, vabdq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
    }
    double acc = vaddvq_f64(acc0);
    for (; i < n; ++i) acc += std::fabs(x[i] - y[i]);
    return acc;
}

void axpy_neon(double a, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t vy = vld1q_f64(y + i);
        vy = vfmaq_f64(vy, va, vld1q_f64(x + i));
        vst1q_f64(y + i, vy);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void scale_neon(double a, double* x, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(x + i, vmulq_f64(va, vld1q_f64(x + i)));
    }
    for (; i < n; ++i) x[i] *= a;
}

double gather_dot_neon(const double* vals, const int* idx, std::size_t n,
                       const double* x) {
    // No hardware gather on NEON; scalar loads with vector accumulate.
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += vals[i] * x[idx[i]];
    return acc;
}

}  // namespace

const Ops* neon_ops_impl() {
    static const Ops ops = {
        "neon",       dot_neon,   sum_neon,   sq_dist_neon,
        l1_dist_neon, axpy_neon, scale_neon, gather_dot_neon,
    };
    return &ops;
}

}  // namespace krfd::simd

#endif  // aarch64
