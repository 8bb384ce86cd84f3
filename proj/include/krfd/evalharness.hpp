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

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>

#include "krfd/dataset.hpp"
#include "krfd/krfd_model.hpp"
#include "krfd/krsfd_model.hpp"
#include "krfd/rng.hpp"

namespace krfd {

// =============================================================================
// Metrics
// =============================================================================

struct MetricReport {
    double mae = 0.0;
    double rmse = 0.0;
    double r2 = 0.0;
    double mean_r = 0.0;  // average per-input Pearson correlation
    std::size_t n_points = 0;
    std::size_t n_curves_skipped = 0;  // zero-variance curves excluded from mean R
};

/// Pooled MAE/RMSE/R^2 over all points plus the mean per-curve Pearson R.
/// Curves where either side has zero variance are skipped (and counted).
MetricReport metrics(const std::vector<Vector>& pred, const std::vector<Vector>& obs);

/// Per-curve Pearson correlations (NaN where undefined); histogram fodder.
Vector per_curve_r(const std::vector<Vector>& pred, const std::vector<Vector>& obs);

// =============================================================================
// K-fold cross-validation (input-level)
// =============================================================================

struct Fold {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
};

/// Deterministic partition into k folds differing in size by at most one.
std::vector<Fold> kfold(std::size_t n, std::size_t k, std::uint64_t seed);

// =============================================================================
// Random hyperparameter search
// =============================================================================

struct ParamDomain {
    enum class Kind { kLogUniform, kUniform, kCategorical } kind = Kind::kLogUniform;
    double lo = 0.0;
    double hi = 0.0;
    std::vector<std::string> categories;

    static ParamDomain log_uniform(double lo, double hi);
    static ParamDomain uniform(double lo, double hi);
    static ParamDomain categorical(std::vector<std::string> values);
};

/// Named parameter domains; sampling order is the map's (sorted) key order so
/// a config depends only on the seed and the trial index.
using SearchSpace = std::map<std::string, ParamDomain>;

using ParamValue = std::variant<double, std::string>;
using ParamConfig = std::map<std::string, ParamValue>;

struct TrialRecord {
    std::size_t index = 0;
    ParamConfig config;
    Vector fold_scores;
    double score = 0.0;  // mean over folds; lower is better
    bool failed = false;
    std::string error;
};

struct SearchResult {
    ParamConfig best;
    double best_score = 0.0;
    std::size_t best_index = 0;
    std::vector<TrialRecord> trials;
};

ParamConfig sample_config(const SearchSpace& space, Rng& rng);

/// Draws n_trials configs from the space and scores each with `evaluate`
/// (vector of per-fold objective values; lower mean is better). Trials that
/// throw are logged as failed; every trial failing raises NumericalError.
SearchResult random_search(const SearchSpace& space, std::size_t n_trials,
                           std::uint64_t seed,
                           const std::function<Vector(const ParamConfig&)>& evaluate);

// =============================================================================
// Model-kind wrappers: default spaces and k-fold objective evaluation.
// Objective: "rmse" (default) or "mae" on the validation folds.
// =============================================================================

SearchSpace default_space_krfd();
SearchSpace default_space_krsfd();
SearchSpace default_space_flm();
SearchSpace default_space_krr_point();

SearchResult tune_krfd(const DenseFunctionalDataset& data, std::size_t k,
                       std::size_t n_trials, std::uint64_t seed,
                       const std::string& objective = "rmse",
                       const SearchSpace* space = nullptr);
SearchResult tune_flm_dense(const DenseFunctionalDataset& data, std::size_t k,
                            std::size_t n_trials, std::uint64_t seed,
                            const std::string& objective = "rmse",
                            const SearchSpace* space = nullptr);
SearchResult tune_flm_sparse(const SparseFunctionalDataset& data, const Matrix& centers,
                             std::size_t k, std::size_t n_trials, std::uint64_t seed,
                             const std::string& objective = "rmse",
                             const SearchSpace* space = nullptr);
SearchResult tune_krsfd(const SparseFunctionalDataset& data, const Matrix& centers,
                        std::size_t k, std::size_t n_trials, std::uint64_t seed,
                        const std::string& objective = "rmse",
                        const SearchSpace* space = nullptr);
/// Independent per-grid-point searches; returns one result per point.
/// Points run in parallel, each with its own seeded stream.
std::vector<SearchResult> tune_krr_bank(const DenseFunctionalDataset& data,
                                        std::size_t k, std::size_t n_trials,
                                        std::uint64_t seed,
                                        const std::string& objective = "rmse");

double config_number(const ParamConfig& cfg, const std::string& key);
std::string config_string(const ParamConfig& cfg, const std::string& key);

/// Translation from sampled configs to model hyperparameters (shared by the
/// tuning objectives and the CLI's tune -> fit wiring).
KrfdHyperparams krfd_hp_from_config(const ParamConfig& cfg);
KrsfdHyperparams krsfd_hp_from_config(const ParamConfig& cfg, const Matrix& centers);

}  // namespace krfd
