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

#include "krfd/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace krfd {

using nlohmann::json;

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (const char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& s, const std::filesystem::path& path) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw FormatError("bad numeric field '" + s + "' in " + path.string());
    }
    return v;
}

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& j) {
    if (!j.is_array()) throw FormatError("model file: expected a matrix");
    const std::size_t rows = j.size();
    if (rows == 0) return {};
    const std::size_t cols = j[0].size();
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        if (j[i].size() != cols) throw FormatError("model file: ragged matrix");
        for (std::size_t c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
    }
    return m;
}

json kernel_to_json(const KernelConfig& k) {
    return json{{"kind", kernel_kind_name(k.kind)}, {"scale", k.scale}};
}

KernelConfig kernel_from_json(const json& j) {
    return {kernel_kind_from_name(j.at("kind").get<std::string>()),
            j.at("scale").get<double>()};
}

json parse_json(const std::filesystem::path& path) {
    json doc = json::parse(read_file(path), nullptr, false);
    if (doc.is_discarded()) throw FormatError("malformed JSON in " + path.string());
    return doc;
}

void check_version(const json& doc, const std::filesystem::path& path) {
    if (!doc.contains("format_version") ||
        doc["format_version"].get<int>() != kFileFormatVersion) {
        throw FormatError("unsupported format version in " + path.string());
    }
}

}  // namespace

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const Matrix& values) {
    if (!values.empty() && header.size() != values.cols()) {
        throw InputError("write_csv: header width does not match matrix");
    }
    std::ofstream out = open_out(path);
    for (std::size_t j = 0; j < header.size(); ++j) {
        out << (j ? "," : "") << header[j];
    }
    out << '\n';
    for (std::size_t i = 0; i < values.rows(); ++i) {
        for (std::size_t j = 0; j < values.cols(); ++j) {
            out << (j ? "," : "") << format_double(values(i, j));
        }
        out << '\n';
    }
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty CSV file " + path.string());
    CsvTable table;
    table.header = split_line(line);
    std::vector<double> data;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_line(line);
        if (fields.size() != table.header.size()) {
            throw FormatError("row " + std::to_string(rows + 1) + " of " + path.string() +
                              " has " + std::to_string(fields.size()) + " fields, expected " +
                              std::to_string(table.header.size()));
        }
        for (const auto& f : fields) data.push_back(parse_double(f, path));
        ++rows;
    }
    table.values = Matrix(rows, table.header.size());
    std::copy(data.begin(), data.end(), table.values.data());
    return table;
}

Matrix read_csv_expecting(const std::filesystem::path& path,
                          const std::vector<std::string>& expected_header) {
    CsvTable table = read_csv(path);
    if (table.header != expected_header) {
        throw FormatError("unexpected column set in " + path.string());
    }
    return std::move(table.values);
}

namespace {

std::vector<std::string> indexed_header(const std::string& stem, std::size_t n) {
    std::vector<std::string> h;
    h.reserve(n);
    for (std::size_t i = 0; i < n; ++i) h.push_back(stem + "_" + std::to_string(i));
    return h;
}

}  // namespace

void write_dense_dataset(const std::filesystem::path& dir, const DenseGenResult& gen,
                         const std::string& manifest_json) {
    std::filesystem::create_directories(dir);
    write_csv(dir / "X.csv", indexed_header("x", gen.data.x.cols()), gen.data.x);
    write_csv(dir / "t.csv", indexed_header("t", gen.data.t.cols()), gen.data.t);
    write_csv(dir / "Y.csv", indexed_header("y", gen.data.y.cols()), gen.data.y);
    write_csv(dir / "truth_Y.csv", indexed_header("y", gen.truth.cols()), gen.truth);
    open_out(dir / "manifest.json") << manifest_json;
}

void write_sparse_dataset(const std::filesystem::path& dir, const SparseGenResult& gen,
                          const Matrix& truth_grid, const std::string& manifest_json) {
    std::filesystem::create_directories(dir);
    write_csv(dir / "X.csv", indexed_header("x", gen.data.x.cols()), gen.data.x);

    const std::size_t q = gen.data.t.cols();
    std::vector<std::string> header{"input_id"};
    for (const auto& h : indexed_header("t", q)) header.push_back(h);
    header.push_back("y");
    Matrix records(gen.data.n_records(), q + 2);
    for (std::size_t i = 0; i < gen.data.n_inputs(); ++i) {
        for (std::size_t r = gen.data.records_begin(i); r < gen.data.records_end(i); ++r) {
            records(r, 0) = static_cast<double>(i);
            for (std::size_t c = 0; c < q; ++c) records(r, c + 1) = gen.data.t(r, c);
            records(r, q + 1) = gen.data.y[r];
        }
    }
    write_csv(dir / "records.csv", header, records);

    // Noiseless curves sampled on an evaluation grid, one row per (input, t).
    Matrix truth(gen.data.n_inputs() * truth_grid.rows(), q + 2);
    for (std::size_t i = 0; i < gen.data.n_inputs(); ++i) {
        const SineLineParams p = params_from_covariates(gen.data.x, i);
        for (std::size_t gidx = 0; gidx < truth_grid.rows(); ++gidx) {
            const std::size_t r = i * truth_grid.rows() + gidx;
            truth(r, 0) = static_cast<double>(i);
            for (std::size_t c = 0; c < q; ++c) truth(r, c + 1) = truth_grid(gidx, c);
            truth(r, q + 1) = sine_line_value(p, truth_grid(gidx, 0));
        }
    }
    write_csv(dir / "truth_curves.csv", header, truth);
    open_out(dir / "manifest.json") << manifest_json;
}

DenseFunctionalDataset load_dense_dataset(const std::filesystem::path& dir) {
    DenseFunctionalDataset ds;
    ds.x = read_csv(dir / "X.csv").values;
    ds.t = read_csv(dir / "t.csv").values;
    ds.y = read_csv(dir / "Y.csv").values;
    ds.validate();
    return ds;
}

SparseFunctionalDataset load_sparse_dataset(const std::filesystem::path& dir) {
    SparseFunctionalDataset ds;
    ds.x = read_csv(dir / "X.csv").values;
    const CsvTable rec = read_csv(dir / "records.csv");
    if (rec.header.size() < 3 || rec.header.front() != "input_id" ||
        rec.header.back() != "y") {
        throw FormatError("records.csv needs columns input_id, t_*, y");
    }
    const std::size_t q = rec.header.size() - 2;
    const std::size_t s = rec.values.rows();
    ds.t = Matrix(s, q);
    ds.y.resize(s);
    ds.offsets.assign(ds.x.rows() + 1, 0);
    std::int64_t prev = -1;
    for (std::size_t r = 0; r < s; ++r) {
        const auto id = static_cast<std::int64_t>(rec.values(r, 0));
        if (id < 0 || id >= static_cast<std::int64_t>(ds.x.rows())) {
            throw FormatError("records.csv: input_id out of range");
        }
        if (id < prev) {
            throw FormatError("records.csv: records must be grouped by input_id");
        }
        prev = id;
        for (std::size_t c = 0; c < q; ++c) ds.t(r, c) = rec.values(r, c + 1);
        ds.y[r] = rec.values(r, q + 1);
        ++ds.offsets[static_cast<std::size_t>(id) + 1];
    }
    for (std::size_t i = 0; i < ds.x.rows(); ++i) ds.offsets[i + 1] += ds.offsets[i];
    ds.validate();
    return ds;
}

std::string detect_dataset_kind(const std::filesystem::path& dir) {
    if (std::filesystem::exists(dir / "Y.csv")) return "dense";
    if (std::filesystem::exists(dir / "records.csv")) return "sparse";
    throw FormatError("no dataset found in " + dir.string());
}

// =============================================================================
// Models
// =============================================================================

namespace {

json krfd_hp_to_json(const KrfdHyperparams& hp) {
    return json{{"lambda_g", hp.lambda_g},      {"lambda_t", hp.lambda_t},
                {"lambda_m", hp.lambda_m},      {"kernel_g", kernel_to_json(hp.kernel_g)},
                {"kernel_t", kernel_to_json(hp.kernel_t)},
                {"kernel_m", kernel_to_json(hp.kernel_m)},
                {"alpha", hp.alpha},            {"beta", hp.beta},
                {"include_mu", hp.include_mu}};
}

KrfdHyperparams krfd_hp_from_json(const json& j) {
    KrfdHyperparams hp;
    hp.lambda_g = j.at("lambda_g").get<double>();
    hp.lambda_t = j.at("lambda_t").get<double>();
    hp.lambda_m = j.at("lambda_m").get<double>();
    hp.kernel_g = kernel_from_json(j.at("kernel_g"));
    hp.kernel_t = kernel_from_json(j.at("kernel_t"));
    hp.kernel_m = kernel_from_json(j.at("kernel_m"));
    hp.alpha = j.at("alpha").get<double>();
    hp.beta = j.at("beta").get<double>();
    hp.include_mu = j.at("include_mu").get<bool>();
    return hp;
}

}  // namespace

void rebuild_krfd_derived(KrfdModel& model) {
    model.g = gram(model.hp.kernel_g, model.x_train);
    model.t = gram(model.hp.kernel_t, model.t_train);
    auto squared = [](const Matrix& g, double lambda) {
        Matrix s = matmul(g, g);
        for (std::size_t i = 0; i < s.size(); ++i) {
            s.data()[i] += lambda * g.data()[i];
        }
        return s;
    };
    model.fac_g2 = SymFactor::cholesky(squared(model.g, model.hp.lambda_g));
    model.fac_t2 = SymFactor::cholesky(squared(model.t, model.hp.lambda_t));
    if (model.hp.include_mu) {
        model.m = gram(model.hp.kernel_m, model.x_train);
        model.fac_m2 = SymFactor::cholesky(squared(model.m, model.hp.lambda_m));
    }
}

void save_model(const std::filesystem::path& path, const KrfdModel& model) {
    json doc;
    doc["format_version"] = kFileFormatVersion;
    doc["kind"] = "krfd";
    doc["hyperparams"] = krfd_hp_to_json(model.hp);
    doc["x_train"] = matrix_to_json(model.x_train);
    doc["t_train"] = matrix_to_json(model.t_train);
    doc["theta"] = matrix_to_json(model.theta);
    doc["c"] = model.c;
    doc["sigma2"] = model.sigma2;
    open_out(path) << doc.dump(1) << '\n';
}

void save_model(const std::filesystem::path& path, const KrsfdModel& model) {
    json doc;
    doc["format_version"] = kFileFormatVersion;
    doc["kind"] = "krsfd";
    doc["hyperparams"] = {
        {"lambda", model.hp.lambda},
        {"kernel_g", kernel_to_json(model.hp.kernel_g)},
        {"kernel_t", kernel_to_json(model.hp.kernel_t)},
        {"z_g", model.hp.z_g ? json(*model.hp.z_g) : json(nullptr)},
        {"alpha", model.hp.alpha},
        {"beta", model.hp.beta},
        {"cg_tol_mse", model.hp.cg_tol_mse},
        {"cg_max_iters", model.hp.cg_max_iters},
        {"dense_threshold", model.hp.dense_threshold},
        {"ilu_drop_tol", model.hp.ilu_drop_tol},
        {"ilu_fill_factor", model.hp.ilu_fill_factor},
        {"centers", matrix_to_json(model.hp.centers)},
    };
    doc["x_train"] = matrix_to_json(model.x_train);
    // Record locations grouped by input; enough to rebuild the design.
    json offsets = json::array();
    for (const auto v : model.design.block_offsets) offsets.push_back(v);
    doc["record_offsets"] = std::move(offsets);
    doc["record_t"] = matrix_to_json(model.record_t);
    doc["theta"] = model.theta;
    doc["sigma2"] = model.sigma2;
    doc["cg_report"] = {{"iterations", model.cg.iterations},
                        {"residual_mse", model.cg.residual_mse},
                        {"truncated", model.cg.truncated}};
    doc["sparsity"] = {{"g_threshold", model.design.g_threshold},
                       {"t_threshold", model.design.t_threshold},
                       {"h_zero_fraction", model.design.h_zero_fraction}};
    open_out(path) << doc.dump(1) << '\n';
}

void save_model(const std::filesystem::path& path, const FlmModel& model) {
    json doc;
    doc["format_version"] = kFileFormatVersion;
    doc["kind"] = "flm";
    doc["theta"] = model.theta;
    doc["kernel_t"] = kernel_to_json(model.kernel_t);
    doc["centers"] = matrix_to_json(model.centers);
    doc["lambda"] = model.lambda;
    doc["input_dim"] = model.input_dim;
    open_out(path) << doc.dump(1) << '\n';
}

void save_model(const std::filesystem::path& path, const KrrBankModel& model) {
    json doc;
    doc["format_version"] = kFileFormatVersion;
    doc["kind"] = "krr";
    json configs = json::array();
    for (const auto& cfg : model.configs) {
        configs.push_back({{"kernel", kernel_to_json(cfg.kernel)}, {"alpha", cfg.alpha}});
    }
    doc["configs"] = std::move(configs);
    doc["coef"] = matrix_to_json(model.coef);
    doc["x_train"] = matrix_to_json(model.x_train);
    doc["t_grid"] = matrix_to_json(model.t_grid);
    open_out(path) << doc.dump(1) << '\n';
}

LoadedModel load_model(const std::filesystem::path& path) {
    const json doc = parse_json(path);
    check_version(doc, path);
    const std::string kind = doc.at("kind").get<std::string>();
    if (kind == "krfd") {
        KrfdModel model;
        model.hp = krfd_hp_from_json(doc.at("hyperparams"));
        model.x_train = matrix_from_json(doc.at("x_train"));
        model.t_train = matrix_from_json(doc.at("t_train"));
        model.theta = matrix_from_json(doc.at("theta"));
        model.c = doc.at("c").get<Vector>();
        model.sigma2 = doc.at("sigma2").get<double>();
        rebuild_krfd_derived(model);
        return model;
    }
    if (kind == "krsfd") {
        const json& hpj = doc.at("hyperparams");
        KrsfdHyperparams hp;
        hp.lambda = hpj.at("lambda").get<double>();
        hp.kernel_g = kernel_from_json(hpj.at("kernel_g"));
        hp.kernel_t = kernel_from_json(hpj.at("kernel_t"));
        if (!hpj.at("z_g").is_null()) hp.z_g = hpj.at("z_g").get<double>();
        hp.alpha = hpj.at("alpha").get<double>();
        hp.beta = hpj.at("beta").get<double>();
        hp.cg_tol_mse = hpj.at("cg_tol_mse").get<double>();
        hp.cg_max_iters = hpj.at("cg_max_iters").get<int>();
        hp.dense_threshold = hpj.at("dense_threshold").get<std::size_t>();
        hp.ilu_drop_tol = hpj.at("ilu_drop_tol").get<double>();
        hp.ilu_fill_factor = hpj.at("ilu_fill_factor").get<double>();
        hp.centers = matrix_from_json(hpj.at("centers"));

        SparseFunctionalDataset ds;
        ds.x = matrix_from_json(doc.at("x_train"));
        for (const auto& v : doc.at("record_offsets")) {
            ds.offsets.push_back(v.get<std::int64_t>());
        }
        ds.t = matrix_from_json(doc.at("record_t"));
        ds.y.assign(ds.t.rows(), 0.0);  // y is not needed to rebuild the design

        KrsfdModel model;
        model.hp = hp;
        model.x_train = ds.x;
        model.record_t = ds.t;
        model.design = build_design(ds, hp);
        model.cov_cache = make_covariance_cache();
        model.theta = doc.at("theta").get<Vector>();
        model.sigma2 = doc.at("sigma2").get<double>();
        model.cg.iterations = doc.at("cg_report").at("iterations").get<int>();
        model.cg.residual_mse = doc.at("cg_report").at("residual_mse").get<double>();
        model.cg.truncated = doc.at("cg_report").at("truncated").get<bool>();
        if (model.theta.size() != model.design.h.cols) {
            throw FormatError("krsfd model: theta length disagrees with design");
        }
        return model;
    }
    if (kind == "flm") {
        FlmModel model;
        model.theta = doc.at("theta").get<Vector>();
        model.kernel_t = kernel_from_json(doc.at("kernel_t"));
        model.centers = matrix_from_json(doc.at("centers"));
        model.lambda = doc.at("lambda").get<double>();
        model.input_dim = doc.at("input_dim").get<std::size_t>();
        if (model.theta.size() != (model.input_dim + 1) * model.centers.rows()) {
            throw FormatError("flm model: theta length disagrees with centers");
        }
        return model;
    }
    if (kind == "krr") {
        KrrBankModel model;
        for (const auto& cj : doc.at("configs")) {
            model.configs.push_back(
                {kernel_from_json(cj.at("kernel")), cj.at("alpha").get<double>()});
        }
        model.coef = matrix_from_json(doc.at("coef"));
        model.x_train = matrix_from_json(doc.at("x_train"));
        model.t_grid = matrix_from_json(doc.at("t_grid"));
        return model;
    }
    throw FormatError("unknown model kind '" + kind + "' in " + path.string());
}

// =============================================================================
// Search logs and reports
// =============================================================================

void write_trial_log(const std::filesystem::path& path,
                     const std::vector<TrialRecord>& trials) {
    std::ofstream out = open_out(path);
    for (const auto& t : trials) {
        json rec;
        rec["trial"] = t.index;
        json cfg;
        for (const auto& [k, v] : t.config) {
            if (const double* num = std::get_if<double>(&v)) {
                cfg[k] = *num;
            } else {
                cfg[k] = std::get<std::string>(v);
            }
        }
        rec["config"] = std::move(cfg);
        rec["fold_scores"] = t.fold_scores;
        rec["score"] = t.score;
        rec["failed"] = t.failed;
        if (t.failed) rec["error"] = t.error;
        out << rec.dump() << '\n';
    }
}

void write_best_config(const std::filesystem::path& path, const std::string& model_kind,
                       const ParamConfig& config, double score,
                       const std::string& objective) {
    json doc;
    doc["format_version"] = kFileFormatVersion;
    doc["model"] = model_kind;
    doc["objective"] = objective;
    doc["score"] = score;
    json cfg;
    for (const auto& [k, v] : config) {
        if (const double* num = std::get_if<double>(&v)) {
            cfg[k] = *num;
        } else {
            cfg[k] = std::get<std::string>(v);
        }
    }
    doc["config"] = std::move(cfg);
    open_out(path) << doc.dump(1) << '\n';
}

ParamConfig load_best_config(const std::filesystem::path& path, std::string* model_kind) {
    const json doc = parse_json(path);
    check_version(doc, path);
    if (model_kind) *model_kind = doc.at("model").get<std::string>();
    ParamConfig cfg;
    for (const auto& [k, v] : doc.at("config").items()) {
        if (v.is_number()) {
            cfg[k] = v.get<double>();
        } else {
            cfg[k] = v.get<std::string>();
        }
    }
    return cfg;
}

void write_metric_report(const std::filesystem::path& path, const MetricReport& report) {
    std::ofstream out = open_out(path);
    out << "mae,rmse,r2,mean_r,n_points,n_curves_skipped\n";
    out << format_double(report.mae) << ',' << format_double(report.rmse) << ','
        << format_double(report.r2) << ',' << format_double(report.mean_r) << ','
        << report.n_points << ',' << report.n_curves_skipped << '\n';
}

void write_per_curve_r(const std::filesystem::path& path, const Vector& r_values) {
    std::ofstream out = open_out(path);
    out << "input_id,r\n";
    for (std::size_t i = 0; i < r_values.size(); ++i) {
        out << i << ',' << format_double(r_values[i]) << '\n';
    }
}

}  // namespace krfd
