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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "krfd/baselines.hpp"
#include "krfd/datagen.hpp"
#include "krfd/linalg.hpp"
#include "test_util.hpp"

using namespace krfd;
using namespace krfd::test;

namespace {

SparseFunctionalDataset random_sparse(std::size_t n, std::size_t p, std::size_t rec_lo,
                                      std::size_t rec_hi, Rng& rng) {
    SparseFunctionalDataset ds;
    ds.x = random_matrix(n, p, rng, -2.0, 2.0);
    ds.offsets.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        ds.offsets[i + 1] =
            ds.offsets[i] + static_cast<std::int64_t>(rng.uniform_int(rec_lo, rec_hi));
    }
    const auto s = static_cast<std::size_t>(ds.offsets.back());
    ds.t = random_matrix(s, 1, rng, 0.0, 2.0);
    ds.y = random_vector(s, rng, -2.0, 2.0);
    return ds;
}

// Explicit stacked design: W rows are augmented-X kron T-block rows.
Matrix explicit_w(const SparseFunctionalDataset& ds, const KernelConfig& kt,
                  const Matrix& centers) {
    const std::size_t p1 = ds.x.cols() + 1;
    const std::size_t l = centers.rows();
    Matrix w(ds.n_records(), p1 * l);
    for (std::size_t i = 0; i < ds.n_inputs(); ++i) {
        Vector xa(p1);
        xa[0] = 1.0;
        for (std::size_t j = 0; j < ds.x.cols(); ++j) xa[j + 1] = ds.x(i, j);
        for (std::size_t r = ds.records_begin(i); r < ds.records_end(i); ++r) {
            for (std::size_t b = 0; b < p1; ++b) {
                for (std::size_t c = 0; c < l; ++c) {
                    w(r, b * l + c) =
                        xa[b] * eval_kernel(kt, ds.t.row_span(r), centers.row_span(c));
                }
            }
        }
    }
    return w;
}

}  // namespace

TEST_CASE("flm_fit: intercept-only scalar ridge") {
    // p = 0 is not representable (covariates always exist), so emulate it by
    // an explicit construction: all records at the single center, so the
    // t-kernel is exactly 1 and the design reduces to columns of ones and x.
    SparseFunctionalDataset ds;
    ds.x = Matrix(3, 1);  // all-zero covariate column: only the intercept acts
    ds.offsets = {0, 2, 4, 6};
    ds.t = Matrix(6, 1, 0.5);
    ds.y = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
    Matrix centers(1, 1);
    centers(0, 0) = 0.5;  // every record sits on the center: k_T == 1
    const double lambda = 0.7;
    const FlmModel model = flm_fit(ds, lambda, {KernelKind::kGaussian, 1.0}, centers);
    // Normal equations: intercept coefficient = sum(y) / (S + lambda).
    const double want = 21.0 / (6.0 + lambda);
    CHECK(model.theta[0] == doctest::Approx(want).epsilon(1e-12));
    // The x-block coefficient is zero since the covariate column is zero.
    CHECK(model.theta[1] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("flm_fit: normal-equation oracle on a tiny dense instance") {
    Rng rng(3);
    DenseFunctionalDataset ds;
    ds.x = random_matrix(4, 2, rng);
    ds.t = random_matrix(3, 1, rng, 0.0, 2.0);
    ds.y = random_matrix(4, 3, rng);
    const KernelConfig kt{KernelKind::kGaussian, 0.8};
    const double lambda = 0.05;
    const FlmModel model = flm_fit(ds, lambda, kt);

    // Oracle: build W explicitly and solve the ridge normal equations.
    SparseFunctionalDataset flat;
    flat.x = ds.x;
    flat.offsets = {0, 3, 6, 9, 12};
    flat.t = Matrix(12, 1);
    flat.y.resize(12);
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            flat.t(i * 3 + j, 0) = ds.t(j, 0);
            flat.y[i * 3 + j] = ds.y(i, j);
        }
    }
    const Matrix w = explicit_w(flat, kt, ds.t);
    Matrix normal = matmul_at_b(w, w);
    for (std::size_t i = 0; i < normal.rows(); ++i) normal(i, i) += lambda;
    const Vector want = sym_solve(normal, matvec_t(w, flat.y));
    CHECK(rel_err(model.theta, want) < 1e-8);

    // Ragged path on the flattened dataset gives the same coefficients.
    const FlmModel ragged = flm_fit(flat, lambda, kt, ds.t);
    CHECK(rel_err(ragged.theta, model.theta) < 1e-12);
}

TEST_CASE("flm_fit: ridge limit and capacity cap") {
    Rng rng(5);
    const SparseFunctionalDataset ds = random_sparse(5, 2, 2, 4, rng);
    const Matrix centers = linspace_grid(0.0, 2.0, 4);
    const KernelConfig kt{KernelKind::kGaussian, 0.8};

    double prev_norm = std::numeric_limits<double>::infinity();
    for (const double lambda : {1.0, 1e3, 1e6, 1e9}) {
        const FlmModel model = flm_fit(ds, lambda, kt, centers);
        const double norm = vec_norm(model.theta);
        CHECK(norm < prev_norm);
        prev_norm = norm;
    }
    CHECK(prev_norm < 1e-6);

    CHECK_THROWS_AS(flm_fit(ds, 0.1, kt, centers, /*coef_cap=*/5), CapacityError);
}

TEST_CASE("flm_predict: pinned values and the double-sum oracle") {
    Rng rng(7);
    FlmModel model;
    model.kernel_t = {KernelKind::kLaplacian, 0.9};
    model.centers = linspace_grid(0.0, 2.0, 5);
    model.input_dim = 3;
    model.lambda = 0.1;
    model.theta = random_vector(20, rng);

    // theta = 0 -> 0
    FlmModel zero = model;
    std::fill(zero.theta.begin(), zero.theta.end(), 0.0);
    CHECK(flm_predict(zero, Vector{1.0, -1.0, 0.5}, Vector{0.3}) == 0.0);

    // X = 0 -> intercept block only
    const Vector t_query{1.1};
    double intercept_only = 0.0;
    for (std::size_t c = 0; c < 5; ++c) {
        intercept_only +=
            model.theta[c] * eval_kernel(model.kernel_t, t_query, model.centers.row_span(c));
    }
    CHECK(flm_predict(model, Vector{0.0, 0.0, 0.0}, t_query) ==
          doctest::Approx(intercept_only).epsilon(1e-13));

    // Random query vs. the direct double sum.
    const Vector xq = random_vector(3, rng);
    double want = 0.0;
    for (std::size_t b = 0; b < 4; ++b) {
        const double coef = b == 0 ? 1.0 : xq[b - 1];
        for (std::size_t c = 0; c < 5; ++c) {
            want += coef * model.theta[b * 5 + c] *
                    eval_kernel(model.kernel_t, t_query, model.centers.row_span(c));
        }
    }
    CHECK(flm_predict(model, xq, t_query) == doctest::Approx(want).epsilon(1e-12));

    CHECK_THROWS_AS(flm_predict(model, Vector{1.0}, t_query), InputError);
}

TEST_CASE("flm_predict is affine in the covariates") {
    Rng rng(9);
    const SparseFunctionalDataset ds = random_sparse(6, 3, 2, 5, rng);
    const Matrix centers = linspace_grid(0.0, 2.0, 4);
    const FlmModel model = flm_fit(ds, 0.2, {KernelKind::kGaussian, 0.7}, centers);

    for (int rep = 0; rep < 20; ++rep) {
        const Vector x1 = random_vector(3, rng);
        const Vector x2 = random_vector(3, rng);
        const double a = rng.uniform(-1.0, 2.0);
        Vector mix(3);
        for (std::size_t j = 0; j < 3; ++j) mix[j] = a * x1[j] + (1.0 - a) * x2[j];
        const Vector tq = random_vector(1, rng, 0.0, 2.0);
        const double lhs = flm_predict(model, mix, tq);
        const double rhs =
            a * flm_predict(model, x1, tq) + (1.0 - a) * flm_predict(model, x2, tq);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
}

TEST_CASE("krr bank: pinned cases and the per-column ridge oracle") {
    // N = 1: coefficient = y / (1 + alpha).
    DenseFunctionalDataset one;
    one.x = Matrix(1, 2);
    one.t = Matrix(1, 1);
    one.y = Matrix(1, 1);
    one.y(0, 0) = 4.0;
    const double alpha = 0.5;
    const KrrBankModel m1 =
        krr_bank_fit(one, {{KernelConfig{KernelKind::kGaussian, 1.0}, alpha}});
    CHECK(m1.coef(0, 0) == doctest::Approx(4.0 / 1.5).epsilon(1e-14));

    Rng rng(11);
    DenseFunctionalDataset ds;
    ds.x = random_matrix(5, 2, rng);
    ds.t = linspace_grid(0.0, 2.0, 3);
    ds.y = random_matrix(5, 3, rng);
    for (std::size_t i = 0; i < 5; ++i) ds.y(i, 1) = 0.0;  // a zero column

    std::vector<KrrPointConfig> cfgs = {
        {KernelConfig{KernelKind::kGaussian, 1.2}, 0.3},
        {KernelConfig{KernelKind::kLaplacian, 0.9}, 0.7},
        {KernelConfig{KernelKind::kGaussian, 1.2}, 0.05},
    };
    const KrrBankModel model = krr_bank_fit(ds, cfgs);

    // Zero column -> zero coefficients -> zero predictions.
    for (std::size_t i = 0; i < 5; ++i) CHECK(model.coef(1, i) == 0.0);

    // Per-column explicit ridge oracle.
    for (std::size_t j = 0; j < 3; ++j) {
        const Matrix g = gram(cfgs[j].kernel, ds.x);
        Vector y_col(5);
        for (std::size_t i = 0; i < 5; ++i) y_col[i] = ds.y(i, j);
        const Vector want = sym_solve(add_diag(g, cfgs[j].alpha), y_col);
        Vector got(5);
        for (std::size_t i = 0; i < 5; ++i) got[i] = model.coef(j, i);
        CHECK(rel_err(got, want) < 1e-10);
    }

    // Predictions match the direct kernel expansion.
    const Vector xq = random_vector(2, rng);
    const Vector pred = krr_bank_predict(model, xq);
    for (std::size_t j = 0; j < 3; ++j) {
        double want = 0.0;
        for (std::size_t i = 0; i < 5; ++i) {
            want += model.coef(j, i) *
                    eval_kernel(cfgs[j].kernel, ds.x.row_span(i), xq);
        }
        CHECK(pred[j] == doctest::Approx(want).epsilon(1e-12));
    }
    CHECK(pred[1] == 0.0);
}

TEST_CASE("krr bank: a column's fit is unaffected by other columns' data") {
    Rng rng(13);
    DenseFunctionalDataset ds;
    ds.x = random_matrix(6, 2, rng);
    ds.t = linspace_grid(0.0, 2.0, 3);
    ds.y = random_matrix(6, 3, rng);
    std::vector<KrrPointConfig> cfgs(3, {KernelConfig{KernelKind::kGaussian, 1.0}, 0.2});
    const KrrBankModel base = krr_bank_fit(ds, cfgs);

    DenseFunctionalDataset perturbed = ds;
    for (std::size_t i = 0; i < 6; ++i) {
        perturbed.y(i, 0) = rng.uniform(-5.0, 5.0);
        perturbed.y(i, 2) = rng.uniform(-5.0, 5.0);
    }
    const KrrBankModel other = krr_bank_fit(perturbed, cfgs);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(base.coef(1, i) == other.coef(1, i));
    }
}

TEST_CASE("krr bank: single training point at the query returns its coefficient") {
    DenseFunctionalDataset one;
    one.x = Matrix(1, 2);
    one.x(0, 0) = 0.7;
    one.x(0, 1) = -0.1;
    one.t = Matrix(1, 1);
    one.y = Matrix(1, 1);
    one.y(0, 0) = 2.0;
    const KrrBankModel model =
        krr_bank_fit(one, {{KernelConfig{KernelKind::kGaussian, 1.0}, 0.25}});
    const Vector pred = krr_bank_predict(model, one.x.row_span(0));
    CHECK(pred[0] == doctest::Approx(model.coef(0, 0)).epsilon(1e-15));  // k(x,x) = 1
}

TEST_CASE("gamma translation layer") {
    const KernelConfig g = kernel_from_gamma(KernelKind::kGaussian, 0.5);
    CHECK(g.scale == doctest::Approx(1.0));  // sqrt(1/(2*0.5))
    const KernelConfig l = kernel_from_gamma(KernelKind::kLaplacian, 4.0);
    CHECK(l.scale == doctest::Approx(0.25));
    CHECK_THROWS_AS(kernel_from_gamma(KernelKind::kGaussian, 0.0), InputError);
}
