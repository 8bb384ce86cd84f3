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

// Command-line front end: datagen, tune, fit, predict, sample, evaluate.
// Exit codes: 0 ok, 2 usage error, 3 data/format error, 4 numerical failure.
//
// Every command is deterministic given (config, seed): file outputs carry no
// timestamps and all numbers are written as shortest round-trip decimals.
// Wall-clock timings go to stderr only.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "krfd/baselines.hpp"
#include "krfd/datagen.hpp"
#include "krfd/evalharness.hpp"
#include "krfd/io.hpp"
#include "krfd/krfd_model.hpp"
#include "krfd/krsfd_model.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace krfd;

namespace {

constexpr const char* kToolVersion = "1.0.0";

// ---------------------------------------------------------------------------
// Config file support: a flat JSON object whose keys are long option names
// (without the leading dashes). Unknown keys are rejected; explicit
// command-line flags win over config values.
// ---------------------------------------------------------------------------

class ConfigOverlay {
public:
    void load(const fs::path& path) {
        std::ifstream in(path);
        if (!in) throw FormatError("cannot open config file " + path.string());
        doc_ = json::parse(in, nullptr, false);
        if (doc_.is_discarded() || !doc_.is_object()) {
            throw FormatError("config file " + path.string() + " is not a JSON object");
        }
    }

    // Applies config values to options the user did not pass explicitly and
    // fails on keys that match no option of the active subcommand.
    void apply(CLI::App* cmd) const {
        if (doc_.is_null()) return;
        for (const auto& [key, value] : doc_.items()) {
            CLI::Option* opt = nullptr;
            try {
                opt = cmd->get_option("--" + key);
            } catch (const CLI::OptionNotFound&) {
                throw InputError("config key '" + key + "' is not an option of command '" +
                                 cmd->get_name() + "'");
            }
            if (opt->count() > 0) continue;  // explicit flag wins
            std::string text;
            if (value.is_string()) {
                text = value.get<std::string>();
            } else if (value.is_boolean()) {
                text = value.get<bool>() ? "true" : "false";
            } else {
                text = value.dump();
            }
            opt->add_result(text);
            opt->run_callback();
        }
    }

private:
    json doc_;
};

json manifest_base(const std::string& command, std::uint64_t seed) {
    json m;
    m["format_version"] = kFileFormatVersion;
    m["tool"] = "krfd";
    m["tool_version"] = kToolVersion;
    m["command"] = command;
    m["seed"] = seed;
    return m;
}

Matrix centers_from_options(const std::string& centers_file, std::size_t center_count,
                            double t_lo, double t_hi) {
    if (!centers_file.empty()) {
        return read_csv(centers_file).values;
    }
    return linspace_grid(t_lo, t_hi, center_count);
}

std::pair<double, double> observed_t_range(const SparseFunctionalDataset& ds) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t r = 0; r < ds.t.rows(); ++r) {
        lo = std::min(lo, ds.t(r, 0));
        hi = std::max(hi, ds.t(r, 0));
    }
    return {lo, hi};
}

double elapsed_s(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---------------------------------------------------------------------------
// datagen
// ---------------------------------------------------------------------------

struct DatagenArgs {
    std::string flavor;
    std::size_t n = 1000;
    std::size_t l = 51;
    std::uint64_t ni_min = 2, ni_max = 20;
    double t_lo = 0.0, t_hi = 2.0;
    double noise_sd = 0.2;
    std::uint64_t seed = 0;
    std::string out;
    std::size_t truth_grid = 101;
    std::optional<double> train_fraction;  // also emit train/ and test/ subsets
    std::uint64_t split_seed = 0;
};

DenseGenResult subset_dense(const DenseGenResult& gen, const std::vector<std::size_t>& idx) {
    DenseGenResult out;
    out.data = take_inputs(gen.data, idx);
    out.truth = Matrix(idx.size(), gen.truth.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) {
        for (std::size_t j = 0; j < gen.truth.cols(); ++j) {
            out.truth(k, j) = gen.truth(idx[k], j);
        }
    }
    return out;
}

SparseGenResult subset_sparse(const SparseGenResult& gen, const std::vector<std::size_t>& idx) {
    SparseGenResult out;
    out.data = take_inputs(gen.data, idx);
    out.truth.reserve(out.data.n_records());
    for (const std::size_t i : idx) {
        for (std::size_t r = gen.data.records_begin(i); r < gen.data.records_end(i); ++r) {
            out.truth.push_back(gen.truth[r]);
        }
    }
    return out;
}

int run_datagen(const DatagenArgs& a) {
    if (a.out.empty()) throw InputError("datagen: --out directory is required");
    json manifest = manifest_base("datagen", a.seed);
    manifest["spec"] = {{"flavor", a.flavor}, {"n", a.n},
                        {"t_lo", a.t_lo},     {"t_hi", a.t_hi},
                        {"noise_sd", a.noise_sd}};
    if (a.train_fraction) {
        manifest["spec"]["train_fraction"] = *a.train_fraction;
        manifest["spec"]["split_seed"] = a.split_seed;
    }
    if (a.flavor == "dense") {
        DenseGenSpec spec;
        spec.n_inputs = a.n;
        spec.n_grid = a.l;
        spec.t_lo = a.t_lo;
        spec.t_hi = a.t_hi;
        spec.noise_sd = a.noise_sd;
        spec.seed = a.seed;
        manifest["spec"]["l"] = a.l;
        const DenseGenResult gen = gen_dense(spec);
        write_dense_dataset(a.out, gen, manifest.dump(1) + "\n");
        if (a.train_fraction) {
            const SplitIndices idx = make_split(a.n, *a.train_fraction, a.split_seed);
            write_dense_dataset(fs::path(a.out) / "train", subset_dense(gen, idx.train),
                                manifest.dump(1) + "\n");
            write_dense_dataset(fs::path(a.out) / "test", subset_dense(gen, idx.test),
                                manifest.dump(1) + "\n");
        }
    } else if (a.flavor == "sparse") {
        SparseGenSpec spec;
        spec.n_inputs = a.n;
        spec.n_meas_min = a.ni_min;
        spec.n_meas_max = a.ni_max;
        spec.t_lo = a.t_lo;
        spec.t_hi = a.t_hi;
        spec.noise_sd = a.noise_sd;
        spec.seed = a.seed;
        manifest["spec"]["ni_min"] = a.ni_min;
        manifest["spec"]["ni_max"] = a.ni_max;
        const SparseGenResult gen = gen_sparse(spec);
        manifest["spec"]["n_records"] = gen.data.n_records();
        const Matrix truth_grid = linspace_grid(a.t_lo, a.t_hi, a.truth_grid);
        write_sparse_dataset(a.out, gen, truth_grid, manifest.dump(1) + "\n");
        if (a.train_fraction) {
            const SplitIndices idx = make_split(a.n, *a.train_fraction, a.split_seed);
            write_sparse_dataset(fs::path(a.out) / "train", subset_sparse(gen, idx.train),
                                 truth_grid, manifest.dump(1) + "\n");
            write_sparse_dataset(fs::path(a.out) / "test", subset_sparse(gen, idx.test),
                                 truth_grid, manifest.dump(1) + "\n");
        }
    } else {
        throw InputError("datagen: flavor must be dense or sparse");
    }
    std::cerr << "datagen: wrote " << a.flavor << " dataset to " << a.out << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// tune
// ---------------------------------------------------------------------------

struct TuneArgs {
    std::string model;
    std::string data;
    std::optional<std::size_t> trials;  // default: 300, but 30 per point for krr
    std::size_t folds = 5;
    std::uint64_t seed = 0;
    std::string objective = "rmse";
    std::string out;
    std::string log;
    std::string centers_file;
    std::size_t center_count = 30;
};

int run_tune(const TuneArgs& args) {
    TuneArgs a = args;
    if (!a.trials) a.trials = a.model == "krr" ? 30 : 300;
    if (a.out.empty()) throw InputError("tune: --out file is required");
    const auto start = std::chrono::steady_clock::now();
    const std::string kind = detect_dataset_kind(a.data);

    if (a.model == "krfd") {
        if (kind != "dense") throw InputError("tune: krfd needs a dense dataset");
        const auto data = load_dense_dataset(a.data);
        const SearchResult res = tune_krfd(data, a.folds, *a.trials, a.seed, a.objective);
        write_best_config(a.out, "krfd", res.best, res.best_score, a.objective);
        if (!a.log.empty()) write_trial_log(a.log, res.trials);
    } else if (a.model == "krsfd") {
        if (kind != "sparse") throw InputError("tune: krsfd needs a sparse dataset");
        const auto data = load_sparse_dataset(a.data);
        const auto [lo, hi] = observed_t_range(data);
        const Matrix centers = centers_from_options(a.centers_file, a.center_count, lo, hi);
        const SearchResult res =
            tune_krsfd(data, centers, a.folds, *a.trials, a.seed, a.objective);
        write_best_config(a.out, "krsfd", res.best, res.best_score, a.objective);
        if (!a.log.empty()) write_trial_log(a.log, res.trials);
    } else if (a.model == "flm") {
        SearchResult res;
        if (kind == "dense") {
            const auto data = load_dense_dataset(a.data);
            res = tune_flm_dense(data, a.folds, *a.trials, a.seed, a.objective);
        } else {
            const auto data = load_sparse_dataset(a.data);
            const auto [lo, hi] = observed_t_range(data);
            const Matrix centers =
                centers_from_options(a.centers_file, a.center_count, lo, hi);
            res = tune_flm_sparse(data, centers, a.folds, *a.trials, a.seed, a.objective);
        }
        write_best_config(a.out, "flm", res.best, res.best_score, a.objective);
        if (!a.log.empty()) write_trial_log(a.log, res.trials);
    } else if (a.model == "krr") {
        if (kind != "dense") {
            throw InputError(
                "tune: krr requires a shared dense measurement grid; sparse data has "
                "per-input measurement points, so per-point regressors cannot be formed");
        }
        const auto data = load_dense_dataset(a.data);
        const std::vector<SearchResult> res =
            tune_krr_bank(data, a.folds, *a.trials, a.seed, a.objective);
        json doc;
        doc["format_version"] = kFileFormatVersion;
        doc["model"] = "krr";
        doc["objective"] = a.objective;
        json points = json::array();
        for (const auto& r : res) {
            json cfg;
            for (const auto& [k, v] : r.best) {
                if (const double* num = std::get_if<double>(&v)) {
                    cfg[k] = *num;
                } else {
                    cfg[k] = std::get<std::string>(v);
                }
            }
            points.push_back({{"config", std::move(cfg)}, {"score", r.best_score}});
        }
        doc["points"] = std::move(points);
        std::ofstream(a.out) << doc.dump(1) << '\n';
        if (!a.log.empty()) {
            std::vector<TrialRecord> all;
            for (const auto& r : res) {
                all.insert(all.end(), r.trials.begin(), r.trials.end());
            }
            write_trial_log(a.log, all);
        }
    } else {
        throw InputError("tune: unknown model kind '" + a.model + "'");
    }
    std::cerr << "tune: " << a.model << " finished in " << elapsed_s(start) << " s\n";
    return 0;
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

struct FitArgs {
    std::string model;
    std::string data;
    std::string out;
    std::string params;  // best-config file produced by tune
    // krfd
    double lambda_g = 1e-3, lambda_t = 1e-3, lambda_m = 1e-3;
    double sigma_g = 1.0, sigma_t = 1.0, sigma_m = 1.0;
    std::string k_x = "gaussian", k_t = "gaussian";
    bool no_mu = false;
    double alpha = 1e-3, beta = 1e-3;
    // krsfd / flm
    double lambda = 1e-3;
    double sigma = 1.0;
    std::optional<double> z_g;  // unset disables Gram truncation
    double cg_tol_mse = 1e-3;
    int cg_max_iters = 500;
    std::size_t dense_threshold = 4000;
    std::string centers_file;
    std::size_t center_count = 30;
    // krr (uniform settings when no --params file)
    double krr_alpha = 1e-3;
    double krr_gamma = 0.1;
};

int run_fit(const FitArgs& a) {
    if (a.out.empty()) throw InputError("fit: --out file is required");
    const auto start = std::chrono::steady_clock::now();
    const std::string kind = detect_dataset_kind(a.data);

    std::optional<ParamConfig> tuned;
    if (!a.params.empty() && a.model != "krr") {  // krr carries per-point configs
        std::string tuned_kind;
        tuned = load_best_config(a.params, &tuned_kind);
        if (tuned_kind != a.model) {
            throw InputError("fit: --params file was tuned for '" + tuned_kind +
                             "', not '" + a.model + "'");
        }
    }

    if (a.model == "krfd") {
        if (kind != "dense") throw InputError("fit: krfd needs a dense dataset");
        const auto data = load_dense_dataset(a.data);
        KrfdHyperparams hp;
        if (tuned) {
            hp = krfd_hp_from_config(*tuned);
        } else {
            hp.lambda_g = a.lambda_g;
            hp.lambda_t = a.lambda_t;
            hp.lambda_m = a.lambda_m;
            hp.kernel_g = {kernel_kind_from_name(a.k_x), a.sigma_g};
            hp.kernel_t = {kernel_kind_from_name(a.k_t), a.sigma_t};
            hp.kernel_m = {kernel_kind_from_name(a.k_x), a.sigma_m};
        }
        hp.alpha = a.alpha;
        hp.beta = a.beta;
        hp.include_mu = !a.no_mu;
        const KrfdModel model = fit_krfd(data, hp);
        save_model(a.out, model);
        std::cout << "fit krfd: N=" << model.n_inputs() << " L=" << model.n_grid()
                  << " sigma2_map=" << format_double(model.sigma2) << "\n";
    } else if (a.model == "krsfd") {
        if (kind != "sparse") throw InputError("fit: krsfd needs a sparse dataset");
        const auto data = load_sparse_dataset(a.data);
        const auto [lo, hi] = observed_t_range(data);
        const Matrix centers = centers_from_options(a.centers_file, a.center_count, lo, hi);
        KrsfdHyperparams hp;
        if (tuned) {
            hp = krsfd_hp_from_config(*tuned, centers);
        } else {
            hp.lambda = a.lambda;
            hp.kernel_g = {kernel_kind_from_name(a.k_x), a.sigma_g};
            hp.kernel_t = {kernel_kind_from_name(a.k_t), a.sigma_t};
            hp.z_g = a.z_g;
            hp.centers = centers;
        }
        hp.alpha = a.alpha;
        hp.beta = a.beta;
        hp.cg_tol_mse = a.cg_tol_mse;
        hp.cg_max_iters = a.cg_max_iters;
        hp.dense_threshold = a.dense_threshold;
        const KrsfdModel model = fit_krsfd(data, hp);
        save_model(a.out, model);
        std::cout << "fit krsfd: N=" << model.n_inputs() << " L=" << model.n_centers()
                  << " S=" << model.record_t.rows()
                  << " sigma2_map=" << format_double(model.sigma2)
                  << " cg_iters=" << model.cg.iterations
                  << " cg_residual_mse=" << format_double(model.cg.residual_mse)
                  << (model.cg.truncated ? " (truncated)" : "") << "\n";
    } else if (a.model == "flm") {
        const double lambda = tuned ? config_number(*tuned, "lambda") : a.lambda;
        const KernelConfig kt =
            tuned ? KernelConfig{kernel_kind_from_name(config_string(*tuned, "k_t")),
                                 config_number(*tuned, "sigma")}
                  : KernelConfig{kernel_kind_from_name(a.k_t), a.sigma};
        FlmModel model;
        if (kind == "dense") {
            const auto data = load_dense_dataset(a.data);
            if (!a.centers_file.empty()) {
                const Matrix centers = read_csv(a.centers_file).values;
                model = flm_fit(data, lambda, kt, &centers);
            } else {
                model = flm_fit(data, lambda, kt);
            }
        } else {
            const auto data = load_sparse_dataset(a.data);
            const auto [lo, hi] = observed_t_range(data);
            const Matrix centers =
                centers_from_options(a.centers_file, a.center_count, lo, hi);
            model = flm_fit(data, lambda, kt, centers);
        }
        save_model(a.out, model);
        std::cout << "fit flm: coefficients=" << model.theta.size() << "\n";
    } else if (a.model == "krr") {
        if (kind != "dense") {
            throw InputError(
                "fit: krr requires a shared dense measurement grid; sparse data has "
                "per-input measurement points, so per-point regressors cannot be formed");
        }
        const auto data = load_dense_dataset(a.data);
        std::vector<KrrPointConfig> configs;
        if (!a.params.empty()) {
            // Per-point config list produced by `tune --model krr`.
            std::ifstream in(a.params);
            if (!in) throw FormatError("cannot open " + a.params);
            const json doc = json::parse(in, nullptr, false);
            if (doc.is_discarded() || doc.value("model", "") != "krr") {
                throw FormatError("fit: --params is not a krr tuning result");
            }
            for (const auto& pt : doc.at("points")) {
                const json& cfg = pt.at("config");
                configs.push_back(
                    {kernel_from_gamma(kernel_kind_from_name(cfg.at("k_x").get<std::string>()),
                                       cfg.at("gamma").get<double>()),
                     cfg.at("alpha").get<double>()});
            }
        } else {
            configs.assign(data.n_grid(),
                           {kernel_from_gamma(kernel_kind_from_name(a.k_x), a.krr_gamma),
                            a.krr_alpha});
        }
        const KrrBankModel model = krr_bank_fit(data, configs);
        save_model(a.out, model);
        std::cout << "fit krr: points=" << model.configs.size() << "\n";
    } else {
        throw InputError("fit: unknown model kind '" + a.model + "'");
    }
    std::cerr << "fit: finished in " << elapsed_s(start) << " s\n";
    return 0;
}

// ---------------------------------------------------------------------------
// predict / sample / evaluate
// ---------------------------------------------------------------------------

struct PredictArgs {
    std::string model_file;
    std::string x_file;
    std::string grid_file;
    std::string out;
};

int run_predict(const PredictArgs& a) {
    if (a.out.empty()) throw InputError("predict: --out file is required");
    const LoadedModel loaded = load_model(a.model_file);
    const Matrix xq = read_csv(a.x_file).values;

    Matrix grid;
    if (!a.grid_file.empty()) grid = read_csv(a.grid_file).values;

    std::ofstream out(a.out, std::ios::binary);
    if (!out) throw Error("cannot open " + a.out);

    auto write_header = [&](std::size_t q) {
        out << "input_id";
        for (std::size_t c = 0; c < q; ++c) out << ",t_" << c;
        out << ",mean,std\n";
    };
    auto write_row = [&](std::size_t id, const double* t, std::size_t q, double mean,
                         double sd) {
        out << id;
        for (std::size_t c = 0; c < q; ++c) out << ',' << format_double(t[c]);
        out << ',' << format_double(mean) << ',' << format_double(sd) << '\n';
    };

    if (const auto* model = std::get_if<KrfdModel>(&loaded)) {
        const Matrix& g = grid.empty() ? model->t_train : grid;
        write_header(g.cols());
        for (std::size_t i = 0; i < xq.rows(); ++i) {
            const auto curve = predict_curve(*model, xq.row_span(i), g);
            for (std::size_t j = 0; j < curve.size(); ++j) {
                write_row(i, g.row(j), g.cols(), curve[j].mean,
                          std::sqrt(curve[j].variance));
            }
        }
    } else if (const auto* model = std::get_if<KrsfdModel>(&loaded)) {
        if (grid.empty()) throw InputError("predict: krsfd needs --grid");
        write_header(grid.cols());
        for (std::size_t i = 0; i < xq.rows(); ++i) {
            const auto curve = predict_curve(*model, xq.row_span(i), grid);
            for (std::size_t j = 0; j < curve.size(); ++j) {
                write_row(i, grid.row(j), grid.cols(), curve[j].mean,
                          std::sqrt(curve[j].variance));
            }
        }
    } else if (const auto* model = std::get_if<FlmModel>(&loaded)) {
        if (grid.empty()) throw InputError("predict: flm needs --grid");
        write_header(grid.cols());
        const double nan = std::numeric_limits<double>::quiet_NaN();
        for (std::size_t i = 0; i < xq.rows(); ++i) {
            for (std::size_t j = 0; j < grid.rows(); ++j) {
                write_row(i, grid.row(j), grid.cols(),
                          flm_predict(*model, xq.row_span(i), grid.row_span(j)), nan);
            }
        }
    } else {
        const auto& krr = std::get<KrrBankModel>(loaded);
        write_header(krr.t_grid.cols());
        const double nan = std::numeric_limits<double>::quiet_NaN();
        for (std::size_t i = 0; i < xq.rows(); ++i) {
            const Vector row = krr_bank_predict(krr, xq.row_span(i));
            for (std::size_t j = 0; j < row.size(); ++j) {
                write_row(i, krr.t_grid.row(j), krr.t_grid.cols(), row[j], nan);
            }
        }
    }
    return 0;
}

struct SampleArgs {
    std::string model_file;
    std::string x_file;
    std::size_t row = 0;
    std::string grid_file;
    std::size_t n_samples = 300;
    std::uint64_t seed = 0;
    std::string out;
};

int run_sample(const SampleArgs& a) {
    if (a.out.empty()) throw InputError("sample: --out file is required");
    const LoadedModel loaded = load_model(a.model_file);
    const Matrix xq = read_csv(a.x_file).values;
    if (a.row >= xq.rows()) throw InputError("sample: --row out of range");

    Matrix samples;  // n_samples x grid
    Matrix grid;
    if (const auto* model = std::get_if<KrfdModel>(&loaded)) {
        grid = a.grid_file.empty() ? model->t_train : read_csv(a.grid_file).values;
        samples = sample_functions(*model, xq.row_span(a.row), grid, a.n_samples, a.seed);
    } else if (const auto* model = std::get_if<KrsfdModel>(&loaded)) {
        if (a.grid_file.empty()) throw InputError("sample: krsfd needs --grid");
        grid = read_csv(a.grid_file).values;
        samples = sample_functions(*model, xq.row_span(a.row), grid, a.n_samples, a.seed);
    } else {
        throw InputError("sample: only krfd and krsfd models provide a predictive "
                         "distribution to sample from");
    }

    std::ofstream out(a.out, std::ios::binary);
    if (!out) throw Error("cannot open " + a.out);
    for (std::size_t c = 0; c < grid.cols(); ++c) out << (c ? "," : "") << "t_" << c;
    for (std::size_t s = 0; s < a.n_samples; ++s) out << ",sample_" << s;
    out << '\n';
    for (std::size_t j = 0; j < grid.rows(); ++j) {
        for (std::size_t c = 0; c < grid.cols(); ++c) {
            out << (c ? "," : "") << format_double(grid(j, c));
        }
        for (std::size_t s = 0; s < a.n_samples; ++s) {
            out << ',' << format_double(samples(s, j));
        }
        out << '\n';
    }
    return 0;
}

struct EvaluateArgs {
    std::string model_file;
    std::string data;
    std::string pred_file;
    std::string obs_file;
    std::string out_dir;
};

std::vector<Vector> group_by_input(const Matrix& table) {
    // columns: input_id, value
    std::vector<Vector> groups;
    std::int64_t prev = -1;
    for (std::size_t r = 0; r < table.rows(); ++r) {
        const auto id = static_cast<std::int64_t>(table(r, 0));
        if (id != prev) {
            if (id != prev + 1) throw FormatError("evaluate: input_id not contiguous");
            groups.emplace_back();
            prev = id;
        }
        groups.back().push_back(table(r, 1));
    }
    return groups;
}

int run_evaluate(const EvaluateArgs& a) {
    std::vector<Vector> pred_groups, obs_groups;

    if (!a.pred_file.empty() || !a.obs_file.empty()) {
        if (a.pred_file.empty() || a.obs_file.empty()) {
            throw InputError("evaluate: --pred and --obs must be given together");
        }
        pred_groups = group_by_input(read_csv_expecting(a.pred_file, {"input_id", "y"}));
        obs_groups = group_by_input(read_csv_expecting(a.obs_file, {"input_id", "y"}));
    } else {
        if (a.model_file.empty() || a.data.empty()) {
            throw InputError("evaluate: need --model-file and --data (or --pred/--obs)");
        }
        const LoadedModel loaded = load_model(a.model_file);
        const std::string kind = detect_dataset_kind(a.data);

        if (const auto* model = std::get_if<KrfdModel>(&loaded)) {
            if (kind != "dense") throw InputError("evaluate: krfd needs dense data");
            const auto data = load_dense_dataset(a.data);
            const Matrix pred = predict_surface(*model, data.x, data.t);
            for (std::size_t i = 0; i < data.n_inputs(); ++i) {
                pred_groups.emplace_back(pred.row(i), pred.row(i) + pred.cols());
                obs_groups.emplace_back(data.y.row(i), data.y.row(i) + data.y.cols());
            }
        } else if (const auto* model = std::get_if<KrsfdModel>(&loaded)) {
            if (kind != "sparse") throw InputError("evaluate: krsfd needs sparse data");
            const auto data = load_sparse_dataset(a.data);
            const Vector pred = predict_records(*model, data);
            for (std::size_t i = 0; i < data.n_inputs(); ++i) {
                pred_groups.emplace_back(pred.begin() + data.records_begin(i),
                                         pred.begin() + data.records_end(i));
                obs_groups.emplace_back(data.y.begin() + data.records_begin(i),
                                        data.y.begin() + data.records_end(i));
            }
        } else if (const auto* model = std::get_if<FlmModel>(&loaded)) {
            if (kind == "dense") {
                const auto data = load_dense_dataset(a.data);
                const Matrix pred = flm_predict_surface(*model, data.x, data.t);
                for (std::size_t i = 0; i < data.n_inputs(); ++i) {
                    pred_groups.emplace_back(pred.row(i), pred.row(i) + pred.cols());
                    obs_groups.emplace_back(data.y.row(i), data.y.row(i) + data.y.cols());
                }
            } else {
                const auto data = load_sparse_dataset(a.data);
                const Vector pred = flm_predict_records(*model, data);
                for (std::size_t i = 0; i < data.n_inputs(); ++i) {
                    pred_groups.emplace_back(pred.begin() + data.records_begin(i),
                                             pred.begin() + data.records_end(i));
                    obs_groups.emplace_back(data.y.begin() + data.records_begin(i),
                                            data.y.begin() + data.records_end(i));
                }
            }
        } else {
            const auto& krr = std::get<KrrBankModel>(loaded);
            if (kind != "dense") {
                throw InputError(
                    "evaluate: krr requires a shared dense measurement grid; sparse data "
                    "has per-input measurement points");
            }
            const auto data = load_dense_dataset(a.data);
            if (data.n_grid() != krr.configs.size()) {
                throw InputError("evaluate: krr model grid length does not match data");
            }
            const Matrix pred = krr_bank_predict_surface(krr, data.x);
            for (std::size_t i = 0; i < data.n_inputs(); ++i) {
                pred_groups.emplace_back(pred.row(i), pred.row(i) + pred.cols());
                obs_groups.emplace_back(data.y.row(i), data.y.row(i) + data.y.cols());
            }
        }
    }

    const MetricReport rep = metrics(pred_groups, obs_groups);
    std::cout << "mae=" << format_double(rep.mae) << " rmse=" << format_double(rep.rmse)
              << " r2=" << format_double(rep.r2)
              << " mean_r=" << format_double(rep.mean_r) << " n_points=" << rep.n_points
              << " skipped_curves=" << rep.n_curves_skipped << "\n";
    if (!a.out_dir.empty()) {
        fs::create_directories(a.out_dir);
        write_metric_report(fs::path(a.out_dir) / "metrics.csv", rep);
        write_per_curve_r(fs::path(a.out_dir) / "per_curve_r.csv",
                          per_curve_r(pred_groups, obs_groups));
    }
    return 0;
}

}  // namespace

namespace {

// Applies a value to a subcommand option the user left unset (used by the
// global --seed/--out fallbacks).
void default_option(CLI::App* cmd, const std::string& name, const std::string& value) {
    CLI::Option* opt = nullptr;
    try {
        opt = cmd->get_option(name);
    } catch (const CLI::OptionNotFound&) {
        return;
    }
    if (opt->count() > 0) return;
    opt->add_result(value);
    opt->run_callback();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"kernel regression for functional data"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "JSON config file; flags override its values");
    std::optional<std::uint64_t> global_seed;
    app.add_option("--seed", global_seed, "default seed for the chosen subcommand");
    std::optional<std::string> global_out;
    app.add_option("--out", global_out, "default output path for the chosen subcommand");

    DatagenArgs dg;
    CLI::App* datagen = app.add_subcommand("datagen", "generate a synthetic benchmark dataset");
    datagen->add_option("flavor", dg.flavor, "dense|sparse")->required();
    datagen->add_option("--n", dg.n, "number of inputs (default 1000)");
    datagen->add_option("--l", dg.l, "dense grid length (default 51)");
    datagen->add_option("--ni-min", dg.ni_min, "sparse: min records per input (default 2)");
    datagen->add_option("--ni-max", dg.ni_max, "sparse: max records per input (default 20)");
    datagen->add_option("--t-lo", dg.t_lo, "grid lower bound (default 0)");
    datagen->add_option("--t-hi", dg.t_hi, "grid upper bound (default 2)");
    datagen->add_option("--noise-sd", dg.noise_sd, "observation noise sd (default 0.2)");
    datagen->add_option("--seed", dg.seed, "RNG seed (default 0)");
    datagen->add_option("--out", dg.out, "output directory");
    datagen->add_option("--truth-grid", dg.truth_grid,
                        "sparse: evaluation grid length for truth curves (default 101)");
    datagen->add_option("--train-fraction", dg.train_fraction,
                        "also write train/ and test/ subsets at this input-level fraction");
    datagen->add_option("--split-seed", dg.split_seed, "seed for the train/test split");

    TuneArgs tn;
    CLI::App* tune = app.add_subcommand("tune", "random hyperparameter search with k-fold CV");
    tune->add_option("--model", tn.model, "krfd|krsfd|flm|krr")->required();
    tune->add_option("--data", tn.data, "dataset directory")->required();
    tune->add_option("--trials", tn.trials, "number of trials (default 300; 30 per point for krr)");
    tune->add_option("--folds", tn.folds, "CV folds (default 5)");
    tune->add_option("--seed", tn.seed, "RNG seed (default 0)");
    tune->add_option("--objective", tn.objective, "rmse|mae (default rmse)");
    tune->add_option("--out", tn.out, "best-config output file");
    tune->add_option("--log", tn.log, "trial log (JSON lines)");
    tune->add_option("--centers-file", tn.centers_file, "kernel centers CSV (krsfd/flm sparse)");
    tune->add_option("--centers", tn.center_count,
                     "kernel center count on the observed t range (default 30)");

    FitArgs ft;
    CLI::App* fit = app.add_subcommand("fit", "fit a model and write it to disk");
    fit->add_option("--model", ft.model, "krfd|krsfd|flm|krr")->required();
    fit->add_option("--data", ft.data, "dataset directory")->required();
    fit->add_option("--out", ft.out, "model output file");
    fit->add_option("--params", ft.params, "best-config file from tune");
    fit->add_option("--lambda-g", ft.lambda_g, "krfd ridge for the input Gram (default 1e-3)");
    fit->add_option("--lambda-t", ft.lambda_t, "krfd ridge for the t Gram (default 1e-3)");
    fit->add_option("--lambda-m", ft.lambda_m, "krfd ridge for the baseline Gram (default 1e-3)");
    fit->add_option("--sigma-g", ft.sigma_g, "input kernel scale (default 1)");
    fit->add_option("--sigma-t", ft.sigma_t, "t kernel scale (default 1)");
    fit->add_option("--sigma-m", ft.sigma_m, "baseline kernel scale (default 1)");
    fit->add_option("--k-x", ft.k_x, "input kernel kind: gaussian|laplacian");
    fit->add_option("--k-t", ft.k_t, "t kernel kind: gaussian|laplacian");
    fit->add_flag("--no-mu", ft.no_mu, "krfd: drop the t-independent baseline term");
    fit->add_option("--alpha", ft.alpha, "inverse-gamma shape (default 1e-3)");
    fit->add_option("--beta", ft.beta, "inverse-gamma scale (default 1e-3)");
    fit->add_option("--lambda", ft.lambda, "krsfd/flm ridge strength (default 1e-3)");
    fit->add_option("--sigma", ft.sigma, "flm t-kernel scale (default 1)");
    fit->add_option("--z-g", ft.z_g,
                    "krsfd input-Gram zero fraction in [0,0.9]; omit to disable truncation");
    fit->add_option("--cg-tol-mse", ft.cg_tol_mse, "krsfd CG residual MSE tolerance (default 1e-3)");
    fit->add_option("--cg-max-iters", ft.cg_max_iters, "krsfd CG iteration cap (default 500)");
    fit->add_option("--dense-threshold", ft.dense_threshold,
                    "krsfd: max NL for dense normal equations (default 4000)");
    fit->add_option("--centers-file", ft.centers_file, "kernel centers CSV");
    fit->add_option("--centers", ft.center_count, "kernel center count (default 30)");
    fit->add_option("--krr-alpha", ft.krr_alpha, "krr uniform ridge (default 1e-3)");
    fit->add_option("--krr-gamma", ft.krr_gamma, "krr uniform inverse scale (default 0.1)");

    PredictArgs pr;
    CLI::App* predict = app.add_subcommand("predict", "predictive mean and std on a grid");
    predict->add_option("--model-file", pr.model_file, "fitted model file")->required();
    predict->add_option("--x", pr.x_file, "query covariates CSV")->required();
    predict->add_option("--grid", pr.grid_file, "t grid CSV (defaults to the training grid)");
    predict->add_option("--out", pr.out, "output CSV");

    SampleArgs sm;
    CLI::App* sample = app.add_subcommand("sample", "draw functions from the predictive distribution");
    sample->add_option("--model-file", sm.model_file, "fitted model file")->required();
    sample->add_option("--x", sm.x_file, "query covariates CSV")->required();
    sample->add_option("--row", sm.row, "row of --x to sample at (default 0)");
    sample->add_option("--grid", sm.grid_file, "t grid CSV");
    sample->add_option("--n-samples", sm.n_samples, "number of draws (default 300)");
    sample->add_option("--seed", sm.seed, "RNG seed (default 0)");
    sample->add_option("--out", sm.out, "output CSV");

    EvaluateArgs ev;
    CLI::App* evaluate = app.add_subcommand("evaluate", "metric report for a model on a dataset");
    evaluate->add_option("--model-file", ev.model_file, "fitted model file");
    evaluate->add_option("--data", ev.data, "dataset directory");
    evaluate->add_option("--pred", ev.pred_file, "predictions CSV (input_id,y)");
    evaluate->add_option("--obs", ev.obs_file, "observations CSV (input_id,y)");
    evaluate->add_option("--out-dir", ev.out_dir, "directory for metrics.csv and per_curve_r.csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        ConfigOverlay overlay;
        if (!config_path.empty()) overlay.load(config_path);
        CLI::App* active = nullptr;
        for (CLI::App* cmd : {datagen, tune, fit, predict, sample, evaluate}) {
            if (cmd->parsed()) active = cmd;
        }
        if (active) {
            overlay.apply(active);
            if (global_seed) default_option(active, "--seed", std::to_string(*global_seed));
            if (global_out) default_option(active, "--out", *global_out);
        }
        if (datagen->parsed()) return run_datagen(dg);
        if (tune->parsed()) return run_tune(tn);
        if (fit->parsed()) return run_fit(ft);
        if (predict->parsed()) return run_predict(pr);
        if (sample->parsed()) return run_sample(sm);
        if (evaluate->parsed()) return run_evaluate(ev);
    } catch (const CapacityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
