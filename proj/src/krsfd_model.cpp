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

#include "krfd/krsfd_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

#include "krfd/rng.hpp"
#include "krfd/simd.hpp"

namespace krfd {

void KrsfdHyperparams::validate() const {
    if (!(lambda > 0.0)) throw InputError("krsfd: lambda must be positive");
    if (z_g && (!(*z_g >= 0.0) || *z_g > 0.9)) {
        throw InputError("krsfd: z_g must lie in [0, 0.9]");
    }
    if (centers.rows() == 0) throw InputError("krsfd: kernel centers are empty");
    if (!(alpha > 0.0) || !(beta > 0.0)) {
        throw InputError("krsfd: inverse-gamma parameters must be positive");
    }
    if (!(kernel_g.scale > 0.0) || !(kernel_t.scale > 0.0)) {
        throw InputError("krsfd: kernel scales must be positive");
    }
    if (!(cg_tol_mse > 0.0) || cg_max_iters < 1) {
        throw InputError("krsfd: bad CG stopping parameters");
    }
    for (std::size_t i = 0; i < centers.rows(); ++i) {
        for (std::size_t j = i + 1; j < centers.rows(); ++j) {
            if (simd::sq_dist(centers.row(i), centers.row(j), centers.cols()) == 0.0) {
                throw InputError("krsfd: duplicate kernel centers");
            }
        }
    }
}

struct KrsfdModel::CovarianceCache {
    std::mutex mu;
    bool ready = false;
    VarianceMode mode = VarianceMode::kExact;
    std::unique_ptr<SymFactor> dense_fac;
    std::unique_ptr<IluFactor> ilu;
};

std::shared_ptr<KrsfdModel::CovarianceCache> make_covariance_cache() {
    return std::make_shared<KrsfdModel::CovarianceCache>();
}

namespace {

Matrix rows_block(const Matrix& src, std::size_t begin, std::size_t end) {
    Matrix out(end - begin, src.cols());
    for (std::size_t r = begin; r < end; ++r) {
        for (std::size_t c = 0; c < src.cols(); ++c) out(r - begin, c) = src(r, c);
    }
    return out;
}

// Kernel vector with truncation applied: values below threshold become 0.
Vector truncated_kernel_vector(const KernelConfig& cfg, const Matrix& points,
                               std::span<const double> query, double threshold) {
    Vector v = kernel_vector(cfg, points, query);
    for (double& x : v) {
        if (x < threshold) x = 0.0;
    }
    return v;
}

}  // namespace

SparseDesign build_design(const SparseFunctionalDataset& dataset,
                          const KrsfdHyperparams& hp) {
    hp.validate();
    dataset.validate();
    const std::size_t n = dataset.n_inputs();
    const std::size_t s = dataset.n_records();
    const std::size_t l = hp.centers.rows();
    if (dataset.t.cols() != hp.centers.cols()) {
        throw InputError("krsfd: record locations and centers disagree in dimension");
    }

    SparseDesign design;
    design.block_offsets = dataset.offsets;

    const double z_g = hp.z_g.value_or(0.0);
    const double z_t = hp.z_g ? z_t_from_z_g(z_g) : 0.0;

    const SparseGram gs = truncate(gram(hp.kernel_g, dataset.x), z_g);
    design.g_sparse = gs.matrix;
    design.g_threshold = gs.threshold;

    // Dense T over all records once, then per-input truncation; the pooled
    // quantile over all entries is kept as the query-time threshold.
    const Matrix t_full = gram(hp.kernel_t, dataset.t, hp.centers);
    {
        Vector pooled(t_full.storage());
        const auto want =
            static_cast<std::size_t>(std::ceil(z_t * static_cast<double>(pooled.size())));
        if (want == 0) {
            design.t_threshold = 0.0;
        } else if (want >= pooled.size()) {
            design.t_threshold = std::numeric_limits<double>::infinity();
        } else {
            std::nth_element(pooled.begin(),
                             pooled.begin() + static_cast<std::ptrdiff_t>(want), pooled.end());
            design.t_threshold = pooled[want];
        }
    }

    design.t_stack = SparseMatrix(s, l);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = dataset.records_begin(i);
        const std::size_t hi = dataset.records_end(i);
        // Rows index records and columns index centers, so no diagonal exemption.
        const SparseGram block = truncate(rows_block(t_full, lo, hi), z_t, false);
        for (std::size_t r = 0; r < hi - lo; ++r) {
            for (std::int64_t k = block.matrix.row_begin(r); k < block.matrix.row_end(r); ++k) {
                design.t_stack.col_idx.push_back(block.matrix.col_idx[k]);
                design.t_stack.values.push_back(block.matrix.values[k]);
            }
            design.t_stack.row_ptr[lo + r + 1] =
                static_cast<std::int64_t>(design.t_stack.values.size());
        }
    }

    // H row r (record of input i): entries g_i[n] * T[r, l] at column n*L + l.
    design.h = SparseMatrix(s, n * l);
    std::size_t reserve = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto g_nnz = static_cast<std::size_t>(design.g_sparse.row_end(i) -
                                                    design.g_sparse.row_begin(i));
        for (std::size_t r = dataset.records_begin(i); r < dataset.records_end(i); ++r) {
            reserve += g_nnz * static_cast<std::size_t>(design.t_stack.row_end(r) -
                                                        design.t_stack.row_begin(r));
        }
    }
    design.h.col_idx.reserve(reserve);
    design.h.values.reserve(reserve);

    for (std::size_t i = 0; i < n; ++i) {
        const std::int64_t g_lo = design.g_sparse.row_begin(i);
        const std::int64_t g_hi = design.g_sparse.row_end(i);
        for (std::size_t r = dataset.records_begin(i); r < dataset.records_end(i); ++r) {
            const std::int64_t t_lo = design.t_stack.row_begin(r);
            const std::int64_t t_hi = design.t_stack.row_end(r);
            for (std::int64_t gk = g_lo; gk < g_hi; ++gk) {
                const double gv = design.g_sparse.values[gk];
                const std::int64_t base =
                    static_cast<std::int64_t>(design.g_sparse.col_idx[gk]) *
                    static_cast<std::int64_t>(l);
                for (std::int64_t tk = t_lo; tk < t_hi; ++tk) {
                    design.h.col_idx.push_back(
                        static_cast<std::int32_t>(base + design.t_stack.col_idx[tk]));
                    design.h.values.push_back(gv * design.t_stack.values[tk]);
                }
            }
            design.h.row_ptr[r + 1] = static_cast<std::int64_t>(design.h.values.size());
        }
    }
    design.h_zero_fraction =
        1.0 - static_cast<double>(design.h.nnz()) /
                  (static_cast<double>(s) * static_cast<double>(n * l));
    return design;
}

namespace {

Matrix dense_normal_matrix(const SparseMatrix& h, double lambda) {
    const std::size_t nl = h.cols;
    Matrix a(nl, nl);
    for (std::size_t r = 0; r < h.rows; ++r) {
        for (std::int64_t j = h.row_begin(r); j < h.row_end(r); ++j) {
            const double vj = h.values[j];
            double* row = a.row(static_cast<std::size_t>(h.col_idx[j]));
            for (std::int64_t k = h.row_begin(r); k < h.row_end(r); ++k) {
                row[h.col_idx[k]] += vj * h.values[k];
            }
        }
    }
    for (std::size_t i = 0; i < nl; ++i) a(i, i) += lambda;
    return a;
}

KrsfdModel::CovarianceCache& ensure_covariance(const KrsfdModel& model) {
    if (!model.cov_cache) throw InputError("krsfd: model is not fitted");
    auto& cache = *model.cov_cache;
    std::lock_guard<std::mutex> lock(cache.mu);
    if (cache.ready) return cache;
    const std::size_t nl = model.theta.size();
    if (nl <= model.hp.dense_threshold) {
        cache.dense_fac = std::make_unique<SymFactor>(
            SymFactor::cholesky(dense_normal_matrix(model.design.h, model.hp.lambda)));
        cache.mode = VarianceMode::kExact;
    } else {
        const SparseMatrix normal =
            sparse_ata_plus_ridge(model.design.h, model.hp.lambda);
        double drop = model.hp.ilu_drop_tol;
        for (int attempt = 0;; ++attempt) {
            try {
                cache.ilu = std::make_unique<IluFactor>(
                    ilu_factor(normal, drop, model.hp.ilu_fill_factor));
                break;
            } catch (const ZeroPivotError&) {
                if (attempt >= 2) throw;
                drop /= 10.0;  // admit more fill and retry
            }
        }
        cache.mode = VarianceMode::kIlu;
    }
    cache.ready = true;
    return cache;
}

}  // namespace

VarianceMode covariance_mode(const KrsfdModel& model) {
    return ensure_covariance(model).mode;
}

KrsfdModel fit_krsfd(const SparseFunctionalDataset& dataset, const KrsfdHyperparams& hp) {
    KrsfdModel model;
    model.hp = hp;
    model.x_train = dataset.x;
    model.record_t = dataset.t;
    model.design = build_design(dataset, hp);
    model.cov_cache = make_covariance_cache();

    const std::size_t nl = model.design.h.cols;
    const std::size_t s = model.design.h.rows;

    Vector rhs(nl, 0.0);
    model.design.h.matvec_transpose(dataset.y.data(), rhs.data());

    LinearOperator op;
    op.n = nl;
    Matrix dense_a;
    Vector work(s, 0.0);
    if (nl <= hp.dense_threshold) {
        dense_a = dense_normal_matrix(model.design.h, hp.lambda);
        op.apply = [&dense_a](const double* x, double* y) {
            for (std::size_t i = 0; i < dense_a.rows(); ++i) {
                y[i] = simd::dot(dense_a.row(i), x, dense_a.cols());
            }
        };
    } else {
        op.apply = [&model, &work, lambda = hp.lambda](const double* x, double* y) {
            model.design.h.matvec(x, work.data());
            model.design.h.matvec_transpose(work.data(), y);
            simd::axpy(lambda, x, y, model.design.h.cols);
        };
    }

    CgResult cg;
    try {
        cg = cg_solve(op, rhs, hp.cg_tol_mse, hp.cg_max_iters);
    } catch (const NumericalError& e) {
        throw NumericalError(std::string("krsfd fit: ") + e.what());
    }
    model.theta = std::move(cg.x);
    model.cg.iterations = cg.iterations;
    model.cg.residual_mse = cg.residual_mse;
    model.cg.truncated = cg.truncated;

    model.design.h.matvec(model.theta.data(), work.data());
    simd::axpy(-1.0, dataset.y.data(), work.data(), s);
    const double rss = simd::dot(work.data(), work.data(), s);
    model.sigma2 =
        (2.0 * hp.beta + rss) / (2.0 * hp.alpha + 2.0 + static_cast<double>(s));
    return model;
}

namespace {

struct SparseQuery {
    Vector g_vec;  // truncated, length N
    Vector theta_g;  // Theta^T g, length L
};

SparseQuery make_sparse_query(const KrsfdModel& model, std::span<const double> x_new) {
    SparseQuery q;
    q.g_vec = truncated_kernel_vector(model.hp.kernel_g, model.x_train, x_new,
                                      model.design.g_threshold);
    const std::size_t l = model.n_centers();
    q.theta_g.assign(l, 0.0);
    for (std::size_t nidx = 0; nidx < q.g_vec.size(); ++nidx) {
        if (q.g_vec[nidx] != 0.0) {
            simd::axpy(q.g_vec[nidx], model.theta.data() + nidx * l, q.theta_g.data(), l);
        }
    }
    return q;
}

PredictiveDistribution predict_at(const KrsfdModel& model, const SparseQuery& q,
                                  std::span<const double> t_new) {
    const Vector t_vec = truncated_kernel_vector(model.hp.kernel_t, model.hp.centers,
                                                 t_new, model.design.t_threshold);
    PredictiveDistribution out;
    out.mean = vec_dot(t_vec, q.theta_g);

    const std::size_t n = model.n_inputs();
    const std::size_t l = model.n_centers();
    Vector query(n * l, 0.0);
    for (std::size_t nidx = 0; nidx < n; ++nidx) {
        if (q.g_vec[nidx] != 0.0) {
            simd::axpy(q.g_vec[nidx], t_vec.data(), query.data() + nidx * l, l);
        }
    }
    auto& cache = ensure_covariance(model);
    out.variance_mode = cache.mode;
    const Vector solved = cache.mode == VarianceMode::kExact
                              ? cache.dense_fac->solve(query)
                              : ilu_inverse_apply(*cache.ilu, query);
    out.variance = model.sigma2 * vec_dot(query, solved);
    if (out.variance < 0.0) {
        out.variance = 0.0;
        out.clamped = true;
    }
    return out;
}

}  // namespace

PredictiveDistribution predict(const KrsfdModel& model, std::span<const double> x_new,
                               std::span<const double> t_new) {
    const SparseQuery q = make_sparse_query(model, x_new);
    return predict_at(model, q, t_new);
}

std::vector<PredictiveDistribution> predict_curve(const KrsfdModel& model,
                                                  std::span<const double> x_new,
                                                  const Matrix& t_grid) {
    std::vector<PredictiveDistribution> out;
    if (t_grid.rows() == 0) return out;
    if (t_grid.cols() != model.hp.centers.cols()) {
        throw InputError("predict_curve: grid dimension mismatch");
    }
    const SparseQuery q = make_sparse_query(model, x_new);
    out.reserve(t_grid.rows());
    for (std::size_t j = 0; j < t_grid.rows(); ++j) {
        out.push_back(predict_at(model, q, t_grid.row_span(j)));
    }
    return out;
}

Vector predict_records(const KrsfdModel& model, const SparseFunctionalDataset& query) {
    if (query.x.cols() != model.x_train.cols()) {
        throw InputError("predict_records: covariate dimension mismatch");
    }
    Vector pred(query.n_records(), 0.0);
    for (std::size_t i = 0; i < query.n_inputs(); ++i) {
        const SparseQuery q = make_sparse_query(model, query.x.row_span(i));
        for (std::size_t r = query.records_begin(i); r < query.records_end(i); ++r) {
            const Vector t_vec =
                truncated_kernel_vector(model.hp.kernel_t, model.hp.centers,
                                        query.t.row_span(r), model.design.t_threshold);
            pred[r] = vec_dot(t_vec, q.theta_g);
        }
    }
    return pred;
}

Matrix sample_functions(const KrsfdModel& model, std::span<const double> x_new,
                        const Matrix& t_grid, std::size_t n_samples, std::uint64_t seed) {
    if (n_samples < 1) throw InputError("sample_functions: need n_samples >= 1");
    if (t_grid.cols() != model.hp.centers.cols()) {
        throw InputError("sample_functions: grid dimension mismatch");
    }
    const std::size_t n = model.n_inputs();
    const std::size_t l = model.n_centers();
    const std::size_t nl = n * l;
    const double sigma = std::sqrt(model.sigma2);

    auto& cache = ensure_covariance(model);

    const Vector g_vec = truncated_kernel_vector(model.hp.kernel_g, model.x_train,
                                                 x_new, model.design.g_threshold);
    Matrix tq(t_grid.rows(), l);
    for (std::size_t j = 0; j < t_grid.rows(); ++j) {
        const Vector t_vec =
            truncated_kernel_vector(model.hp.kernel_t, model.hp.centers,
                                    t_grid.row_span(j), model.design.t_threshold);
        for (std::size_t k = 0; k < l; ++k) tq(j, k) = t_vec[k];
    }

    // D^{-1/2} for the ILU sampling path: A ~ L diag(U) L^T for SPD A.
    Vector inv_sqrt_diag;
    if (cache.mode == VarianceMode::kIlu) {
        inv_sqrt_diag.resize(nl);
        for (std::size_t i = 0; i < nl; ++i) {
            const double d = cache.ilu->u.values[cache.ilu->u.row_begin(i)];
            if (!(d > 0.0)) {
                throw NumericalError("sample_functions: ILU diagonal not positive");
            }
            inv_sqrt_diag[i] = 1.0 / std::sqrt(d);
        }
    }

    Rng rng = Rng::stream(seed, "krsfd-sample");
    Matrix out(n_samples, t_grid.rows());
    Vector z(nl);
    for (std::size_t s = 0; s < n_samples; ++s) {
        for (double& v : z) v = rng.normal();
        Vector theta_s;
        if (cache.mode == VarianceMode::kExact) {
            theta_s = cache.dense_fac->upper_solve(z);
        } else {
            Vector w(nl);
            for (std::size_t i = 0; i < nl; ++i) w[i] = z[i] * inv_sqrt_diag[i];
            theta_s = ilu_upper_solve_lt(*cache.ilu, w);
        }
        simd::scale(sigma, theta_s.data(), theta_s.size());
        simd::axpy(1.0, model.theta.data(), theta_s.data(), nl);

        Vector proj(l, 0.0);
        for (std::size_t nidx = 0; nidx < n; ++nidx) {
            if (g_vec[nidx] != 0.0) {
                simd::axpy(g_vec[nidx], theta_s.data() + nidx * l, proj.data(), l);
            }
        }
        double* row = out.row(s);
        for (std::size_t j = 0; j < t_grid.rows(); ++j) {
            row[j] = simd::dot(tq.row(j), proj.data(), l);
        }
    }
    return out;
}

}  // namespace krfd
