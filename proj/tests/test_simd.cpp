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

// Equivalence tests: every SIMD backend must agree with the scalar reference
// on all primitives, across lengths that exercise the vector body and every
// possible tail.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "krfd/rng.hpp"
#include "krfd/simd.hpp"

using namespace krfd;

namespace {

std::vector<const simd::Ops*> available_backends() {
    std::vector<const simd::Ops*> v;
    if (const auto* ops = simd::avx2_ops()) v.push_back(ops);
    if (const auto* ops = simd::neon_ops()) v.push_back(ops);
    return v;
}

constexpr double kRelTol = 1e-13;

double rel_close(double a, double b) {
    const double scale = std::max({std::fabs(a), std::fabs(b), 1.0});
    return std::fabs(a - b) / scale;
}

}  // namespace

TEST_CASE("simd backends match the scalar reference") {
    const auto backends = available_backends();
    if (backends.empty()) {
        MESSAGE("no SIMD backend on this machine; scalar-only");
        return;
    }
    Rng rng(2024);
    const auto& ref = simd::scalar_ops();
    for (const auto* ops : backends) {
        CAPTURE(ops->name);
        for (std::size_t n : {0, 1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17, 31, 64, 257, 1000}) {
            std::vector<double> x(n), y(n);
            std::vector<int> idx(n);
            std::vector<double> table(n + 64);
            for (auto& v : x) v = rng.uniform(-5.0, 5.0);
            for (auto& v : y) v = rng.uniform(-5.0, 5.0);
            for (auto& v : table) v = rng.uniform(-5.0, 5.0);
            for (std::size_t i = 0; i < n; ++i) {
                idx[i] = static_cast<int>(rng.uniform_int(0, table.size() - 1));
            }

            CHECK(rel_close(ops->dot(x.data(), y.data(), n),
                            ref.dot(x.data(), y.data(), n)) < kRelTol);
            CHECK(rel_close(ops->sum(x.data(), n), ref.sum(x.data(), n)) < kRelTol);
            CHECK(rel_close(ops->sq_dist(x.data(), y.data(), n),
                            ref.sq_dist(x.data(), y.data(), n)) < kRelTol);
            CHECK(rel_close(ops->l1_dist(x.data(), y.data(), n),
                            ref.l1_dist(x.data(), y.data(), n)) < kRelTol);
            CHECK(rel_close(ops->gather_dot(x.data(), idx.data(), n, table.data()),
                            ref.gather_dot(x.data(), idx.data(), n, table.data())) < kRelTol);

            std::vector<double> ya = y, yb = y;
            ops->axpy(1.7, x.data(), ya.data(), n);
            ref.axpy(1.7, x.data(), yb.data(), n);
            for (std::size_t i = 0; i < n; ++i) CHECK(rel_close(ya[i], yb[i]) < kRelTol);

            std::vector<double> xa = x, xb = x;
            ops->scale(-0.37, xa.data(), n);
            ref.scale(-0.37, xb.data(), n);
            for (std::size_t i = 0; i < n; ++i) CHECK(xa[i] == xb[i]);
        }
    }
}

TEST_CASE("active backend is deterministic within a process") {
    const auto& a = simd::active();
    const auto& b = simd::active();
    CHECK(&a == &b);

    Rng rng(7);
    std::vector<double> x(513), y(513);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    for (auto& v : y) v = rng.uniform(-1.0, 1.0);
    const double first = simd::dot(x.data(), y.data(), x.size());
    const double second = simd::dot(x.data(), y.data(), x.size());
    CHECK(first == second);
}

TEST_CASE("axpy and scale agree with direct arithmetic") {
    Rng rng(11);
    std::vector<double> x(100), y(100);
    for (auto& v : x) v = rng.uniform(-2.0, 2.0);
    for (auto& v : y) v = rng.uniform(-2.0, 2.0);
    std::vector<double> expect(100);
    for (std::size_t i = 0; i < 100; ++i) expect[i] = y[i] + 0.5 * x[i];
    simd::axpy(0.5, x.data(), y.data(), 100);
    for (std::size_t i = 0; i < 100; ++i) {
        CHECK(y[i] == doctest::Approx(expect[i]).epsilon(1e-15));
    }
}
