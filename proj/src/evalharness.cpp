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

#include "krfd/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "krfd/baselines.hpp"
#include "krfd/linalg.hpp"
#include "krfd/simd.hpp"

namespace krfd {

// =============================================================================
// Metrics
// =============================================================================

namespace {

bool is_constant(const Vector& v) {
    for (const double x : v) {
        if (x != v.front()) return false;
    }
    return true;
}

double pearson(const Vector& a, const Vector& b) {
    // Exactly constant inputs have no defined correlation; detecting them by
    // value avoids the roundoff noise a mean subtraction would leave behind.
    if (is_constant(a) || is_constant(b)) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    const std::size_t n = a.size();
    const double mean_a = simd::sum(a.data(), n) / static_cast<double>(n);
    const double mean_b = simd::sum(b.data(), n) / static_cast<double>(n);
    double cov = 0.0, var_a = 0.0, var_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = a[i] - mean_a;
        const double db = b[i] - mean_b;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    if (var_a == 0.0 || var_b == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return cov / std::sqrt(var_a * var_b);
}

void check_shapes(const std::vector<Vector>& pred, const std::vector<Vector>& obs) {
    if (pred.size() != obs.size()) throw InputError("metrics: group counts disagree");
    if (pred.empty()) throw InputError("metrics: no data");
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i].size() != obs[i].size()) {
            throw InputError("metrics: group " + std::to_string(i) + " shape mismatch");
        }
        if (pred[i].empty()) throw InputError("metrics: empty group");
    }
}

}  // namespace

Vector per_curve_r(const std::vector<Vector>& pred, const std::vector<Vector>& obs) {
    check_shapes(pred, obs);
    Vector r(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) r[i] = pearson(pred[i], obs[i]);
    return r;
}

MetricReport metrics(const std::vector<Vector>& pred, const std::vector<Vector>& obs) {
    check_shapes(pred, obs);
    MetricReport rep;
    double abs_sum = 0.0, sq_sum = 0.0, obs_sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        for (std::size_t j = 0; j < pred[i].size(); ++j) {
            const double d = pred[i][j] - obs[i][j];
            abs_sum += std::fabs(d);
            sq_sum += d * d;
            obs_sum += obs[i][j];
            ++n;
        }
    }
    rep.n_points = n;
    const double dn = static_cast<double>(n);
    rep.mae = abs_sum / dn;
    rep.rmse = std::sqrt(sq_sum / dn);

    const double obs_mean = obs_sum / dn;
    double ss_tot = 0.0;
    for (const auto& group : obs) {
        for (const double v : group) {
            const double d = v - obs_mean;
            ss_tot += d * d;
        }
    }
    if (ss_tot == 0.0) {
        rep.r2 = sq_sum == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity();
    } else {
        rep.r2 = 1.0 - sq_sum / ss_tot;
    }

    double r_sum = 0.0;
    std::size_t r_count = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double r = pearson(pred[i], obs[i]);
        if (std::isnan(r)) {
            ++rep.n_curves_skipped;
        } else {
            r_sum += r;
            ++r_count;
        }
    }
    rep.mean_r = r_count == 0 ? std::numeric_limits<double>::quiet_NaN()
                              : r_sum / static_cast<double>(r_count);
    return rep;
}

// =============================================================================
// K-fold
// =============================================================================

std::vector<Fold> kfold(std::size_t n, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw InputError("kfold: k must be at least 2");
    if (k > n) throw InputError("kfold: k exceeds the number of inputs");
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng = Rng::stream(seed, "kfold");
    for (std::size_t i = n; i-- > 1;) {
        const auto j = static_cast<std::size_t>(rng.uniform_int(0, i));
        std::swap(order[i], order[j]);
    }
    std::vector<Fold> folds(k);
    // Contiguous chunks of the shuffled order; sizes differ by at most one.
    std::size_t start = 0;
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t len = n / k + (f < n % k ? 1 : 0);
        folds[f].validation.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                                   order.begin() + static_cast<std::ptrdiff_t>(start + len));
        start += len;
    }
    for (std::size_t f = 0; f < k; ++f) {
        for (std::size_t g = 0; g < k; ++g) {
            if (g == f) continue;
            folds[f].train.insert(folds[f].train.end(), folds[g].validation.begin(),
                                  folds[g].validation.end());
        }
    }
    return folds;
}

// =============================================================================
// Random search
// =============================================================================

ParamDomain ParamDomain::log_uniform(double lo, double hi) {
    if (!(lo > 0.0) || !(hi > lo)) {
        throw InputError("search space: log-uniform interval must be positive and increasing");
    }
    ParamDomain d;
    d.kind = Kind::kLogUniform;
    d.lo = lo;
    d.hi = hi;
    return d;
}

ParamDomain ParamDomain::uniform(double lo, double hi) {
    if (!(hi > lo)) throw InputError("search space: uniform interval must be increasing");
    ParamDomain d;
    d.kind = Kind::kUniform;
    d.lo = lo;
    d.hi = hi;
    return d;
}

ParamDomain ParamDomain::categorical(std::vector<std::string> values) {
    if (values.empty()) throw InputError("search space: empty categorical domain");
    ParamDomain d;
    d.kind = Kind::kCategorical;
    d.categories = std::move(values);
    return d;
}

ParamConfig sample_config(const SearchSpace& space, Rng& rng) {
    ParamConfig cfg;
    for (const auto& [name, dom] : space) {
        switch (dom.kind) {
            case ParamDomain::Kind::kLogUniform:
                cfg[name] = std::exp(rng.uniform(std::log(dom.lo), std::log(dom.hi)));
                break;
            case ParamDomain::Kind::kUniform:
                cfg[name] = rng.uniform(dom.lo, dom.hi);
                break;
            case ParamDomain::Kind::kCategorical: {
                const auto idx = static_cast<std::size_t>(
                    rng.uniform_int(0, dom.categories.size() - 1));
                cfg[name] = dom.categories[idx];
                break;
            }
        }
    }
    return cfg;
}

SearchResult random_search(const SearchSpace& space, std::size_t n_trials,
                           std::uint64_t seed,
                           const std::function<Vector(const ParamConfig&)>& evaluate) {
    if (n_trials < 1) throw InputError("random_search: need at least one trial");
    if (space.empty()) throw InputError("random_search: empty search space");

    SearchResult result;
    result.best_score = std::numeric_limits<double>::infinity();
    Rng rng = Rng::stream(seed, "random-search");
    for (std::size_t trial = 0; trial < n_trials; ++trial) {
        TrialRecord rec;
        rec.index = trial;
        rec.config = sample_config(space, rng);
        try {
            rec.fold_scores = evaluate(rec.config);
            rec.score = simd::sum(rec.fold_scores.data(), rec.fold_scores.size()) /
                        static_cast<double>(rec.fold_scores.size());
            if (!std::isfinite(rec.score)) {
                rec.failed = true;
                rec.error = "non-finite objective";
            }
        } catch (const Error& e) {
            rec.failed = true;
            rec.error = e.what();
        }
        if (!rec.failed && rec.score < result.best_score) {
            result.best_score = rec.score;
            result.best = rec.config;
            result.best_index = trial;
        }
        result.trials.push_back(std::move(rec));
    }
    if (result.best.empty()) {
        std::string msg = "random_search: every trial failed;";
        for (const auto& t : result.trials) {
            msg += " [trial " + std::to_string(t.index) + ": " + t.error + "]";
        }
        throw NumericalError(msg);
    }
    return result;
}

// =============================================================================
// Default spaces and model objectives
// =============================================================================

SearchSpace default_space_krfd() {
    SearchSpace s;
    s["lambda_g"] = ParamDomain::log_uniform(1e-6, 1.0);
    s["lambda_t"] = ParamDomain::log_uniform(1e-6, 1.0);
    s["lambda_m"] = ParamDomain::log_uniform(1e-6, 1.0);
    s["sigma_g"] = ParamDomain::log_uniform(0.1, 100.0);
    s["sigma_t"] = ParamDomain::log_uniform(0.1, 100.0);
    s["sigma_m"] = ParamDomain::log_uniform(0.1, 100.0);
    s["k_x"] = ParamDomain::categorical({"gaussian", "laplacian"});
    s["k_t"] = ParamDomain::categorical({"gaussian", "laplacian"});
    return s;
}

SearchSpace default_space_krsfd() {
    SearchSpace s;
    s["lambda"] = ParamDomain::log_uniform(1e-6, 1.0);
    s["sigma_g"] = ParamDomain::log_uniform(0.1, 100.0);
    s["sigma_t"] = ParamDomain::log_uniform(0.1, 100.0);
    s["z_g"] = ParamDomain::uniform(0.1, 0.9);
    s["k_x"] = ParamDomain::categorical({"gaussian", "laplacian"});
    s["k_t"] = ParamDomain::categorical({"gaussian", "laplacian"});
    return s;
}

SearchSpace default_space_flm() {
    SearchSpace s;
    s["lambda"] = ParamDomain::log_uniform(1e-6, 1.0);
    s["sigma"] = ParamDomain::log_uniform(0.1, 100.0);
    s["k_t"] = ParamDomain::categorical({"gaussian", "laplacian"});
    return s;
}

SearchSpace default_space_krr_point() {
    SearchSpace s;
    s["alpha"] = ParamDomain::log_uniform(1e-6, 1.0);
    s["gamma"] = ParamDomain::log_uniform(1e-6, 1.0);
    s["k_x"] = ParamDomain::categorical({"gaussian", "laplacian"});
    return s;
}

double config_number(const ParamConfig& cfg, const std::string& key) {
    const auto it = cfg.find(key);
    if (it == cfg.end()) throw InputError("config: missing key '" + key + "'");
    if (const double* v = std::get_if<double>(&it->second)) return *v;
    throw InputError("config: key '" + key + "' is not numeric");
}

std::string config_string(const ParamConfig& cfg, const std::string& key) {
    const auto it = cfg.find(key);
    if (it == cfg.end()) throw InputError("config: missing key '" + key + "'");
    if (const std::string* v = std::get_if<std::string>(&it->second)) return *v;
    throw InputError("config: key '" + key + "' is not categorical");
}

KrfdHyperparams krfd_hp_from_config(const ParamConfig& cfg) {
    KrfdHyperparams hp;
    hp.lambda_g = config_number(cfg, "lambda_g");
    hp.lambda_t = config_number(cfg, "lambda_t");
    hp.lambda_m = config_number(cfg, "lambda_m");
    const KernelKind kx = kernel_kind_from_name(config_string(cfg, "k_x"));
    const KernelKind kt = kernel_kind_from_name(config_string(cfg, "k_t"));
    hp.kernel_g = {kx, config_number(cfg, "sigma_g")};
    hp.kernel_t = {kt, config_number(cfg, "sigma_t")};
    hp.kernel_m = {kx, config_number(cfg, "sigma_m")};
    return hp;
}

KrsfdHyperparams krsfd_hp_from_config(const ParamConfig& cfg, const Matrix& centers) {
    KrsfdHyperparams hp;
    hp.lambda = config_number(cfg, "lambda");
    hp.z_g = config_number(cfg, "z_g");
    hp.kernel_g = {kernel_kind_from_name(config_string(cfg, "k_x")),
                   config_number(cfg, "sigma_g")};
    hp.kernel_t = {kernel_kind_from_name(config_string(cfg, "k_t")),
                   config_number(cfg, "sigma_t")};
    hp.centers = centers;
    return hp;
}

namespace {

double pooled_error(const Matrix& pred, const Matrix& obs, const std::string& objective) {
    double acc = 0.0;
    const std::size_t n = pred.size();
    if (objective == "mae") {
        for (std::size_t i = 0; i < n; ++i) {
            acc += std::fabs(pred.data()[i] - obs.data()[i]);
        }
        return acc / static_cast<double>(n);
    }
    if (objective != "rmse") throw InputError("unknown objective '" + objective + "'");
    for (std::size_t i = 0; i < n; ++i) {
        const double d = pred.data()[i] - obs.data()[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(n));
}

double pooled_error(const Vector& pred, const Vector& obs, const std::string& objective) {
    double acc = 0.0;
    if (objective == "mae") {
        for (std::size_t i = 0; i < pred.size(); ++i) acc += std::fabs(pred[i] - obs[i]);
        return acc / static_cast<double>(pred.size());
    }
    if (objective != "rmse") throw InputError("unknown objective '" + objective + "'");
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - obs[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(pred.size()));
}

}  // namespace

SearchResult tune_krfd(const DenseFunctionalDataset& data, std::size_t k,
                       std::size_t n_trials, std::uint64_t seed,
                       const std::string& objective, const SearchSpace* space) {
    const SearchSpace sp = space ? *space : default_space_krfd();
    const std::vector<Fold> folds = kfold(data.n_inputs(), k, seed);
    return random_search(sp, n_trials, seed, [&](const ParamConfig& cfg) {
        const KrfdHyperparams hp = krfd_hp_from_config(cfg);
        Vector scores;
        for (const Fold& fold : folds) {
            const DenseFunctionalDataset train = take_inputs(data, fold.train);
            const DenseFunctionalDataset val = take_inputs(data, fold.validation);
            const KrfdModel model = fit_krfd(train, hp);
            const Matrix pred = predict_surface(model, val.x, val.t);
            scores.push_back(pooled_error(pred, val.y, objective));
        }
        return scores;
    });
}

SearchResult tune_flm_dense(const DenseFunctionalDataset& data, std::size_t k,
                            std::size_t n_trials, std::uint64_t seed,
                            const std::string& objective, const SearchSpace* space) {
    const SearchSpace sp = space ? *space : default_space_flm();
    const std::vector<Fold> folds = kfold(data.n_inputs(), k, seed);
    return random_search(sp, n_trials, seed, [&](const ParamConfig& cfg) {
        const KernelConfig kt{kernel_kind_from_name(config_string(cfg, "k_t")),
                              config_number(cfg, "sigma")};
        const double lambda = config_number(cfg, "lambda");
        Vector scores;
        for (const Fold& fold : folds) {
            const DenseFunctionalDataset train = take_inputs(data, fold.train);
            const DenseFunctionalDataset val = take_inputs(data, fold.validation);
            const FlmModel model = flm_fit(train, lambda, kt);
            const Matrix pred = flm_predict_surface(model, val.x, val.t);
            scores.push_back(pooled_error(pred, val.y, objective));
        }
        return scores;
    });
}

SearchResult tune_flm_sparse(const SparseFunctionalDataset& data, const Matrix& centers,
                             std::size_t k, std::size_t n_trials, std::uint64_t seed,
                             const std::string& objective, const SearchSpace* space) {
    const SearchSpace sp = space ? *space : default_space_flm();
    const std::vector<Fold> folds = kfold(data.n_inputs(), k, seed);
    return random_search(sp, n_trials, seed, [&](const ParamConfig& cfg) {
        const KernelConfig kt{kernel_kind_from_name(config_string(cfg, "k_t")),
                              config_number(cfg, "sigma")};
        const double lambda = config_number(cfg, "lambda");
        Vector scores;
        for (const Fold& fold : folds) {
            const SparseFunctionalDataset train = take_inputs(data, fold.train);
            const SparseFunctionalDataset val = take_inputs(data, fold.validation);
            const FlmModel model = flm_fit(train, lambda, kt, centers);
            const Vector pred = flm_predict_records(model, val);
            scores.push_back(pooled_error(pred, val.y, objective));
        }
        return scores;
    });
}

SearchResult tune_krsfd(const SparseFunctionalDataset& data, const Matrix& centers,
                        std::size_t k, std::size_t n_trials, std::uint64_t seed,
                        const std::string& objective, const SearchSpace* space) {
    const SearchSpace sp = space ? *space : default_space_krsfd();
    const std::vector<Fold> folds = kfold(data.n_inputs(), k, seed);
    return random_search(sp, n_trials, seed, [&](const ParamConfig& cfg) {
        const KrsfdHyperparams hp = krsfd_hp_from_config(cfg, centers);
        Vector scores;
        for (const Fold& fold : folds) {
            const SparseFunctionalDataset train = take_inputs(data, fold.train);
            const SparseFunctionalDataset val = take_inputs(data, fold.validation);
            const KrsfdModel model = fit_krsfd(train, hp);
            const Vector pred = predict_records(model, val);
            scores.push_back(pooled_error(pred, val.y, objective));
        }
        return scores;
    });
}

std::vector<SearchResult> tune_krr_bank(const DenseFunctionalDataset& data,
                                        std::size_t k, std::size_t n_trials,
                                        std::uint64_t seed, const std::string& objective) {
    data.validate();
    const std::size_t l = data.n_grid();
    const std::vector<Fold> folds = kfold(data.n_inputs(), k, seed);
    std::vector<SearchResult> results(l);
    parallel_for(l, [&](std::size_t j) {
        const SearchSpace sp = default_space_krr_point();
        const std::uint64_t point_seed = seed ^ fnv1a64("krr-point") ^ (j * 0x9e3779b97f4a7c15ULL);
        results[j] = random_search(sp, n_trials, point_seed, [&](const ParamConfig& cfg) {
            const KernelConfig kernel = kernel_from_gamma(
                kernel_kind_from_name(config_string(cfg, "k_x")),
                config_number(cfg, "gamma"));
            const double alpha = config_number(cfg, "alpha");
            Vector scores;
            for (const Fold& fold : folds) {
                Matrix x_train(fold.train.size(), data.x.cols());
                Vector y_train(fold.train.size());
                for (std::size_t r = 0; r < fold.train.size(); ++r) {
                    const std::size_t src = fold.train[r];
                    for (std::size_t c = 0; c < data.x.cols(); ++c) {
                        x_train(r, c) = data.x(src, c);
                    }
                    y_train[r] = data.y(src, j);
                }
                const Vector coef = sym_solve(add_diag(gram(kernel, x_train), alpha), y_train);
                Vector pred(fold.validation.size());
                Vector obs(fold.validation.size());
                for (std::size_t r = 0; r < fold.validation.size(); ++r) {
                    const std::size_t src = fold.validation[r];
                    const Vector kv = kernel_vector(kernel, x_train, data.x.row_span(src));
                    pred[r] = vec_dot(kv, coef);
                    obs[r] = data.y(src, j);
                }
                scores.push_back(pooled_error(pred, obs, objective));
            }
            return scores;
        });
    });
    return results;
}

}  // namespace krfd
