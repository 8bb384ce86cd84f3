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

#include "krfd/baselines.hpp"

#include <cmath>
#include <map>

#include "krfd/krfd_model.hpp"
#include "krfd/linalg.hpp"
#include "krfd/simd.hpp"

namespace krfd {

namespace {

// Accumulates the FLM normal equations block-by-block without materializing
// W: w_i^T w_i = (X'_i X'_i^T) kron (T_i^T T_i) and w_i^T y_i = X'_i kron
// (T_i^T y_i), where X'_i is the intercept-augmented covariate vector.
struct FlmAccumulator {
    std::size_t p1;  // p + 1
    std::size_t l;
    Matrix ata;   // (p+1)L x (p+1)L
    Vector atb;   // (p+1)L

    FlmAccumulator(std::size_t p1_, std::size_t l_)
        : p1(p1_), l(l_), ata(p1_ * l_, p1_ * l_), atb(p1_ * l_, 0.0) {}

    void add_block(const Vector& x_aug, const Matrix& tt_block, const Vector& ty) {
        for (std::size_t a = 0; a < p1; ++a) {
            const double xa = x_aug[a];
            if (xa == 0.0) continue;
            simd::axpy(xa, ty.data(), atb.data() + a * l, l);
            for (std::size_t b = 0; b < p1; ++b) {
                const double w = xa * x_aug[b];
                if (w == 0.0) continue;
                for (std::size_t r = 0; r < l; ++r) {
                    simd::axpy(w, tt_block.row(r), ata.row(a * l + r) + b * l, l);
                }
            }
        }
    }
};

Vector augmented(const Matrix& x, std::size_t i) {
    Vector xa(x.cols() + 1);
    xa[0] = 1.0;
    for (std::size_t j = 0; j < x.cols(); ++j) xa[j + 1] = x(i, j);
    return xa;
}

void check_cap(std::size_t p1, std::size_t l, std::size_t cap) {
    if (p1 * l > cap) {
        throw CapacityError(
            "flm: (p+1)*L = " + std::to_string(p1 * l) + " exceeds the cap of " +
            std::to_string(cap) +
            "; reduce the covariate dimension (e.g. project the inputs) or use "
            "fewer kernel centers");
    }
}

FlmModel solve_flm(FlmAccumulator& acc, double lambda, const KernelConfig& kernel_t,
                   const Matrix& centers, std::size_t p) {
    for (std::size_t i = 0; i < acc.atb.size(); ++i) acc.ata(i, i) += lambda;
    FlmModel model;
    model.theta = sym_solve(acc.ata, acc.atb);
    model.kernel_t = kernel_t;
    model.centers = centers;
    model.lambda = lambda;
    model.input_dim = p;
    return model;
}

}  // namespace

FlmModel flm_fit(const SparseFunctionalDataset& dataset, double lambda,
                 const KernelConfig& kernel_t, const Matrix& centers,
                 std::size_t coef_cap) {
    dataset.validate();
    if (!(lambda > 0.0)) throw InputError("flm: lambda must be positive");
    if (centers.rows() == 0) throw InputError("flm: centers are empty");
    const std::size_t p1 = dataset.x.cols() + 1;
    const std::size_t l = centers.rows();
    check_cap(p1, l, coef_cap);

    FlmAccumulator acc(p1, l);
    for (std::size_t i = 0; i < dataset.n_inputs(); ++i) {
        const std::size_t lo = dataset.records_begin(i);
        const std::size_t hi = dataset.records_end(i);
        Matrix t_block(hi - lo, centers.cols());
        for (std::size_t r = lo; r < hi; ++r) {
            for (std::size_t c = 0; c < centers.cols(); ++c) {
                t_block(r - lo, c) = dataset.t(r, c);
            }
        }
        const Matrix tb = gram(kernel_t, t_block, centers);  // N_i x L
        const Matrix tt = matmul_at_b(tb, tb);
        Vector ty(l, 0.0);
        for (std::size_t r = 0; r < hi - lo; ++r) {
            simd::axpy(dataset.y[lo + r], tb.row(r), ty.data(), l);
        }
        acc.add_block(augmented(dataset.x, i), tt, ty);
    }
    return solve_flm(acc, lambda, kernel_t, centers, p1 - 1);
}

FlmModel flm_fit(const DenseFunctionalDataset& dataset, double lambda,
                 const KernelConfig& kernel_t, const Matrix* centers,
                 std::size_t coef_cap) {
    dataset.validate();
    if (!(lambda > 0.0)) throw InputError("flm: lambda must be positive");
    const Matrix& ctr = centers ? *centers : dataset.t;
    if (ctr.rows() == 0) throw InputError("flm: centers are empty");
    const std::size_t p1 = dataset.x.cols() + 1;
    const std::size_t l = ctr.rows();
    check_cap(p1, l, coef_cap);

    // Shared grid: one T block and one T^T T serve every input.
    const Matrix tb = gram(kernel_t, dataset.t, ctr);
    const Matrix tt = matmul_at_b(tb, tb);
    FlmAccumulator acc(p1, l);
    for (std::size_t i = 0; i < dataset.n_inputs(); ++i) {
        Vector ty(l, 0.0);
        for (std::size_t r = 0; r < dataset.n_grid(); ++r) {
            simd::axpy(dataset.y(i, r), tb.row(r), ty.data(), l);
        }
        acc.add_block(augmented(dataset.x, i), tt, ty);
    }
    return solve_flm(acc, lambda, kernel_t, ctr, p1 - 1);
}

double flm_predict(const FlmModel& model, std::span<const double> x_new,
                   std::span<const double> t_new) {
    if (x_new.size() != model.input_dim) {
        throw InputError("flm_predict: covariate dimension mismatch");
    }
    const Vector tb = kernel_vector(model.kernel_t, model.centers, t_new);
    const std::size_t l = model.centers.rows();
    double out = simd::dot(model.theta.data(), tb.data(), l);  // intercept block
    for (std::size_t j = 0; j < model.input_dim; ++j) {
        out += x_new[j] * simd::dot(model.theta.data() + (j + 1) * l, tb.data(), l);
    }
    return out;
}

Vector flm_predict_records(const FlmModel& model, const SparseFunctionalDataset& query) {
    Vector pred(query.n_records());
    for (std::size_t i = 0; i < query.n_inputs(); ++i) {
        for (std::size_t r = query.records_begin(i); r < query.records_end(i); ++r) {
            pred[r] = flm_predict(model, query.x.row_span(i), query.t.row_span(r));
        }
    }
    return pred;
}

Matrix flm_predict_surface(const FlmModel& model, const Matrix& x_query,
                           const Matrix& t_grid) {
    if (x_query.cols() != model.input_dim) {
        throw InputError("flm_predict_surface: covariate dimension mismatch");
    }
    const Matrix tb = gram(model.kernel_t, t_grid, model.centers);  // g x L
    const std::size_t l = model.centers.rows();
    // beta values on the grid: row j of tb against each coefficient block.
    Matrix beta(model.input_dim + 1, t_grid.rows());
    for (std::size_t b = 0; b <= model.input_dim; ++b) {
        for (std::size_t j = 0; j < t_grid.rows(); ++j) {
            beta(b, j) = simd::dot(model.theta.data() + b * l, tb.row(j), l);
        }
    }
    Matrix pred(x_query.rows(), t_grid.rows());
    for (std::size_t i = 0; i < x_query.rows(); ++i) {
        double* row = pred.row(i);
        simd::axpy(1.0, beta.row(0), row, t_grid.rows());
        for (std::size_t j = 0; j < model.input_dim; ++j) {
            simd::axpy(x_query(i, j), beta.row(j + 1), row, t_grid.rows());
        }
    }
    return pred;
}

KernelConfig kernel_from_gamma(KernelKind kind, double gamma) {
    if (!(gamma > 0.0)) throw InputError("kernel_from_gamma: gamma must be positive");
    KernelConfig cfg;
    cfg.kind = kind;
    cfg.scale = kind == KernelKind::kGaussian ? std::sqrt(1.0 / (2.0 * gamma)) : 1.0 / gamma;
    return cfg;
}

KrrBankModel krr_bank_fit(const DenseFunctionalDataset& dataset,
                          const std::vector<KrrPointConfig>& per_point) {
    dataset.validate();
    const std::size_t l = dataset.n_grid();
    const std::size_t n = dataset.n_inputs();
    if (per_point.size() != l) {
        throw InputError("krr_bank_fit: need one config per grid point");
    }

    KrrBankModel model;
    model.configs = per_point;
    model.x_train = dataset.x;
    model.t_grid = dataset.t;
    model.coef = Matrix(l, n);

    // Grams are shared between grid points with identical kernel configs.
    std::map<std::pair<int, double>, Matrix> gram_cache;
    for (std::size_t j = 0; j < l; ++j) {
        const auto& cfg = per_point[j];
        if (!(cfg.alpha > 0.0)) throw InputError("krr_bank_fit: alpha must be positive");
        const auto key = std::make_pair(static_cast<int>(cfg.kernel.kind), cfg.kernel.scale);
        auto it = gram_cache.find(key);
        if (it == gram_cache.end()) {
            it = gram_cache.emplace(key, gram(cfg.kernel, dataset.x)).first;
        }
        Vector y_col(n);
        for (std::size_t i = 0; i < n; ++i) y_col[i] = dataset.y(i, j);
        const Vector coef = sym_solve(add_diag(it->second, cfg.alpha), y_col);
        for (std::size_t i = 0; i < n; ++i) model.coef(j, i) = coef[i];
    }
    return model;
}

Vector krr_bank_predict(const KrrBankModel& model, std::span<const double> x_new) {
    if (x_new.size() != model.x_train.cols()) {
        throw InputError("krr_bank_predict: covariate dimension mismatch");
    }
    const std::size_t l = model.configs.size();
    Vector out(l);
    // Kernel vectors shared between identically configured points.
    std::map<std::pair<int, double>, Vector> vec_cache;
    for (std::size_t j = 0; j < l; ++j) {
        const auto& cfg = model.configs[j];
        const auto key = std::make_pair(static_cast<int>(cfg.kernel.kind), cfg.kernel.scale);
        auto it = vec_cache.find(key);
        if (it == vec_cache.end()) {
            it = vec_cache.emplace(key, kernel_vector(cfg.kernel, model.x_train, x_new)).first;
        }
        out[j] = simd::dot(it->second.data(), model.coef.row(j), model.x_train.rows());
    }
    return out;
}

Matrix krr_bank_predict_surface(const KrrBankModel& model, const Matrix& x_query) {
    Matrix pred(x_query.rows(), model.configs.size());
    parallel_for(x_query.rows(), [&](std::size_t i) {
        const Vector row = krr_bank_predict(model, x_query.row_span(i));
        for (std::size_t j = 0; j < row.size(); ++j) pred(i, j) = row[j];
    });
    return pred;
}

}  // namespace krfd
