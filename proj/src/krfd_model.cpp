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

#include "krfd/krfd_model.hpp"

#include <cmath>

#include "krfd/rng.hpp"
#include "krfd/simd.hpp"

namespace krfd {

void KrfdHyperparams::validate() const {
    if (!(lambda_g > 0.0) || !(lambda_t > 0.0)) {
        throw InputError("krfd: lambda_g and lambda_t must be positive");
    }
    if (include_mu && !(lambda_m > 0.0)) {
        throw InputError("krfd: lambda_m must be positive");
    }
    if (!(alpha > 0.0) || !(beta > 0.0)) {
        throw InputError("krfd: inverse-gamma parameters must be positive");
    }
    if (!(kernel_g.scale > 0.0) || !(kernel_t.scale > 0.0) ||
        (include_mu && !(kernel_m.scale > 0.0))) {
        throw InputError("krfd: kernel scales must be positive");
    }
}

Vector kernel_vector(const KernelConfig& cfg, const Matrix& points,
                     std::span<const double> query) {
    if (query.size() != points.cols()) {
        throw InputError("kernel_vector: query dimension mismatch");
    }
    Vector v(points.rows());
    for (std::size_t i = 0; i < points.rows(); ++i) {
        v[i] = eval_kernel(cfg, {points.row(i), points.cols()}, query);
    }
    return v;
}

namespace {

// S = G * G + lambda * G, the matrix behind the posterior covariance factor.
Matrix squared_plus_scaled(const Matrix& g, double lambda) {
    Matrix s = matmul(g, g);
    simd::axpy(lambda, g.data(), s.data(), s.size());
    return s;
}

// Y - (col * ones^T): subtracts col[i] from every entry of row i.
Matrix subtract_column_outer(const Matrix& y, const Vector& col) {
    Matrix r = y;
    for (std::size_t i = 0; i < r.rows(); ++i) {
        double* ri = r.row(i);
        const double ci = col[i];
        for (std::size_t j = 0; j < r.cols(); ++j) ri[j] -= ci;
    }
    return r;
}

}  // namespace

KrfdModel fit_krfd(const DenseFunctionalDataset& dataset, const KrfdHyperparams& hp) {
    hp.validate();
    dataset.validate();
    const std::size_t n = dataset.n_inputs();
    const std::size_t l = dataset.n_grid();

    KrfdModel model;
    model.hp = hp;
    model.x_train = dataset.x;
    model.t_train = dataset.t;

    model.g = gram(hp.kernel_g, dataset.x);
    model.t = gram(hp.kernel_t, dataset.t);
    const SymFactor fac_g = SymFactor::cholesky(add_diag(model.g, hp.lambda_g));
    const SymFactor fac_t = SymFactor::cholesky(add_diag(model.t, hp.lambda_t));

    Vector mc(n, 0.0);  // M * c
    if (hp.include_mu) {
        model.m = gram(hp.kernel_m, dataset.x);
        const SymFactor fac_m = SymFactor::cholesky(add_diag(model.m, hp.lambda_m));

        // c = (I - (1^T B 1) C A M)^{-1} C (Y - A Y B) 1
        // with A = G (G + lg I)^{-1}, B = (T + lt I)^{-1} T, C = (M + lm I)^{-1}/L.
        const Vector b_ones = fac_t.solve(matvec(model.t, Vector(l, 1.0)));
        const double ones_b_ones = simd::sum(b_ones.data(), b_ones.size());

        const Matrix ay = fac_g.solve(matmul(model.g, dataset.y));
        const Matrix ayb = matmul(fac_t.right_solve(ay), model.t);

        Vector rhs = fac_m.solve(row_sums(subtract(dataset.y, ayb)));
        simd::scale(1.0 / static_cast<double>(l), rhs.data(), rhs.size());

        const Matrix am = fac_g.solve(matmul(model.g, model.m));
        Matrix cam = fac_m.solve(am);
        simd::scale(1.0 / static_cast<double>(l), cam.data(), cam.size());

        Matrix system(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                system(i, j) = (i == j ? 1.0 : 0.0) - ones_b_ones * cam(i, j);
            }
        }
        model.c = lu_solve(std::move(system), std::move(rhs));
        mc = matvec(model.m, model.c);
    } else {
        model.c.assign(n, 0.0);
    }

    // theta = (G + lg I)^{-1} (Y - (M c) 1^T) (T + lt I)^{-1}
    const Matrix centered = subtract_column_outer(dataset.y, mc);
    model.theta = fac_t.right_solve(fac_g.solve(centered));

    // Noise variance MAP from the fitted residual.
    Matrix fitted = matmul(matmul(model.g, model.theta), model.t);
    for (std::size_t i = 0; i < n; ++i) {
        double* row = fitted.row(i);
        for (std::size_t j = 0; j < l; ++j) row[j] += mc[i];
    }
    const Matrix resid = subtract(dataset.y, fitted);
    const double rss = simd::dot(resid.data(), resid.data(), resid.size());
    model.sigma2 = (2.0 * hp.beta + rss) /
                   (2.0 * hp.alpha + 2.0 + static_cast<double>(n * l));

    model.fac_g2 = SymFactor::cholesky(squared_plus_scaled(model.g, hp.lambda_g));
    model.fac_t2 = SymFactor::cholesky(squared_plus_scaled(model.t, hp.lambda_t));
    if (hp.include_mu) {
        model.fac_m2 = SymFactor::cholesky(squared_plus_scaled(model.m, hp.lambda_m));
    }
    return model;
}

namespace {

struct QueryContext {
    Vector g_vec, m_vec;
    Vector theta_g;  // theta^T g, length L
    double qg = 0.0;
    double mu_var = 0.0;  // sigma^2/L * m^T (M^2 + lm M)^{-1} m
};

QueryContext make_query_context(const KrfdModel& model, std::span<const double> x_new) {
    QueryContext ctx;
    ctx.g_vec = kernel_vector(model.hp.kernel_g, model.x_train, x_new);
    ctx.theta_g = matvec_t(model.theta, ctx.g_vec);
    ctx.qg = vec_dot(ctx.g_vec, model.fac_g2.solve(ctx.g_vec));
    if (model.hp.include_mu) {
        ctx.m_vec = kernel_vector(model.hp.kernel_m, model.x_train, x_new);
        const double qm = vec_dot(ctx.m_vec, model.fac_m2.solve(ctx.m_vec));
        ctx.mu_var = model.sigma2 / static_cast<double>(model.n_grid()) * qm;
    }
    return ctx;
}

PredictiveDistribution predict_at(const KrfdModel& model, const QueryContext& ctx,
                                  std::span<const double> t_new) {
    const Vector t_vec = kernel_vector(model.hp.kernel_t, model.t_train, t_new);
    PredictiveDistribution out;
    out.mean = vec_dot(t_vec, ctx.theta_g);
    if (model.hp.include_mu) out.mean += vec_dot(ctx.m_vec, model.c);
    const double qt = vec_dot(t_vec, model.fac_t2.solve(t_vec));
    out.variance = model.sigma2 * ctx.qg * qt + ctx.mu_var;
    if (out.variance < 0.0) {
        // Cancellation in the quadratic forms can nudge tiny variances
        // negative; report the clamp.
        out.variance = 0.0;
        out.clamped = true;
    }
    return out;
}

}  // namespace

PredictiveDistribution predict(const KrfdModel& model, std::span<const double> x_new,
                               std::span<const double> t_new) {
    const QueryContext ctx = make_query_context(model, x_new);
    return predict_at(model, ctx, t_new);
}

std::vector<PredictiveDistribution> predict_curve(const KrfdModel& model,
                                                  std::span<const double> x_new,
                                                  const Matrix& t_grid) {
    std::vector<PredictiveDistribution> out;
    if (t_grid.rows() == 0) return out;
    if (t_grid.cols() != model.t_train.cols()) {
        throw InputError("predict_curve: grid dimension mismatch");
    }
    const QueryContext ctx = make_query_context(model, x_new);
    out.reserve(t_grid.rows());
    for (std::size_t j = 0; j < t_grid.rows(); ++j) {
        out.push_back(predict_at(model, ctx, t_grid.row_span(j)));
    }
    return out;
}

Matrix predict_surface(const KrfdModel& model, const Matrix& x_query, const Matrix& t_grid) {
    if (x_query.cols() != model.x_train.cols()) {
        throw InputError("predict_surface: covariate dimension mismatch");
    }
    if (t_grid.cols() != model.t_train.cols()) {
        throw InputError("predict_surface: grid dimension mismatch");
    }
    const Matrix gq = gram(model.hp.kernel_g, x_query, model.x_train);
    const Matrix tq = gram(model.hp.kernel_t, t_grid, model.t_train);
    Matrix pred = matmul_a_bt(matmul(gq, model.theta), tq);
    if (model.hp.include_mu) {
        const Matrix mq = gram(model.hp.kernel_m, x_query, model.x_train);
        const Vector shift = matvec(mq, model.c);
        for (std::size_t i = 0; i < pred.rows(); ++i) {
            const double si = shift[i];
            double* row = pred.row(i);
            for (std::size_t j = 0; j < pred.cols(); ++j) row[j] += si;
        }
    }
    return pred;
}

Matrix inverse_sqrt_psd(const Matrix& mat) {
    const EigSym eig = eig_sym(mat);
    const std::size_t n = eig.values.size();
    const double w_max = eig.values[n - 1];
    if (!(w_max > 0.0)) {
        throw NumericalError("inverse_sqrt_psd: matrix has no positive spectrum");
    }
    const double floor_val = 1e-10 * w_max;
    Matrix scaled = eig.vectors;  // columns U_k * w_k^{-1/2}
    for (std::size_t k = 0; k < n; ++k) {
        const double w = std::max(eig.values[k], floor_val);
        const double inv_sqrt = 1.0 / std::sqrt(w);
        for (std::size_t r = 0; r < n; ++r) scaled(r, k) *= inv_sqrt;
    }
    return matmul_a_bt(scaled, eig.vectors);
}

Matrix sample_functions(const KrfdModel& model, std::span<const double> x_new,
                        const Matrix& t_grid, std::size_t n_samples, std::uint64_t seed) {
    if (n_samples < 1) throw InputError("sample_functions: need n_samples >= 1");
    if (t_grid.cols() != model.t_train.cols()) {
        throw InputError("sample_functions: grid dimension mismatch");
    }
    const std::size_t n = model.n_inputs();
    const std::size_t l = model.n_grid();
    const double sigma = std::sqrt(model.sigma2);

    const Matrix sg = inverse_sqrt_psd(squared_plus_scaled(model.g, model.hp.lambda_g));
    const Matrix st = inverse_sqrt_psd(squared_plus_scaled(model.t, model.hp.lambda_t));
    Matrix sm;
    double mu_sd = 0.0;
    if (model.hp.include_mu) {
        sm = inverse_sqrt_psd(squared_plus_scaled(model.m, model.hp.lambda_m));
        mu_sd = std::sqrt(model.sigma2 / static_cast<double>(l));
    }

    const Vector g_vec = kernel_vector(model.hp.kernel_g, model.x_train, x_new);
    Vector m_vec;
    if (model.hp.include_mu) {
        m_vec = kernel_vector(model.hp.kernel_m, model.x_train, x_new);
    }
    const Matrix tq = gram(model.hp.kernel_t, t_grid, model.t_train);

    Rng rng = Rng::stream(seed, "krfd-sample");
    Matrix out(n_samples, t_grid.rows());
    Matrix z(n, l);
    Vector u(n);
    for (std::size_t s = 0; s < n_samples; ++s) {
        for (double& v : z.storage()) v = rng.normal();
        // theta_s = theta + sigma * Sg Z St
        Matrix theta_s = matmul(matmul(sg, z), st);
        simd::scale(sigma, theta_s.data(), theta_s.size());
        simd::axpy(1.0, model.theta.data(), theta_s.data(), theta_s.size());

        double mu_shift = 0.0;
        if (model.hp.include_mu) {
            for (double& v : u) v = rng.normal();
            Vector c_s = matvec(sm, u);
            simd::scale(mu_sd, c_s.data(), c_s.size());
            simd::axpy(1.0, model.c.data(), c_s.data(), c_s.size());
            mu_shift = vec_dot(m_vec, c_s);
        }

        const Vector proj = matvec_t(theta_s, g_vec);  // length L
        double* row = out.row(s);
        for (std::size_t j = 0; j < t_grid.rows(); ++j) {
            row[j] = simd::dot(tq.row(j), proj.data(), l) + mu_shift;
        }
    }
    return out;
}

}  // namespace krfd
