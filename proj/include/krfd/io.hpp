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

#include <filesystem>
#include <string>
#include <variant>

#include "krfd/baselines.hpp"
#include "krfd/datagen.hpp"
#include "krfd/dataset.hpp"
#include "krfd/evalharness.hpp"
#include "krfd/krfd_model.hpp"
#include "krfd/krsfd_model.hpp"

namespace krfd {

// All numeric file output goes through shortest round-trip decimal
// formatting, so a written value reloads to the identical double and seeded
// pipelines produce byte-identical files.

inline constexpr int kFileFormatVersion = 1;

std::string format_double(double v);

// ---- CSV ----

struct CsvTable {
    std::vector<std::string> header;
    Matrix values;
};

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const Matrix& values);
CsvTable read_csv(const std::filesystem::path& path);
/// read_csv + strict header check.
Matrix read_csv_expecting(const std::filesystem::path& path,
                          const std::vector<std::string>& expected_header);

// ---- dataset directories ----

void write_dense_dataset(const std::filesystem::path& dir, const DenseGenResult& gen,
                         const std::string& manifest_json);
void write_sparse_dataset(const std::filesystem::path& dir, const SparseGenResult& gen,
                          const Matrix& truth_grid, const std::string& manifest_json);

/// Loads X.csv / t.csv / Y.csv. Any dense CSV triple of matching shapes
/// works, not just generated benchmarks.
DenseFunctionalDataset load_dense_dataset(const std::filesystem::path& dir);
/// Loads X.csv / records.csv.
SparseFunctionalDataset load_sparse_dataset(const std::filesystem::path& dir);

/// "dense" or "sparse" by the files present in the directory.
std::string detect_dataset_kind(const std::filesystem::path& dir);

// ---- models ----

using LoadedModel = std::variant<KrfdModel, KrsfdModel, FlmModel, KrrBankModel>;

void save_model(const std::filesystem::path& path, const KrfdModel& model);
void save_model(const std::filesystem::path& path, const KrsfdModel& model);
void save_model(const std::filesystem::path& path, const FlmModel& model);
void save_model(const std::filesystem::path& path, const KrrBankModel& model);

/// Rejects unknown kinds and version mismatches with FormatError. Cached
/// factorizations are rebuilt from the stored training data, so a loaded
/// model predicts identically to the in-memory original.
LoadedModel load_model(const std::filesystem::path& path);

/// Recomputes the Gram matrices and variance factorizations of a model whose
/// (x_train, t_train, theta, c, sigma2) fields are already set.
void rebuild_krfd_derived(KrfdModel& model);

// ---- search logs and configs ----

void write_trial_log(const std::filesystem::path& path,
                     const std::vector<TrialRecord>& trials);
void write_best_config(const std::filesystem::path& path, const std::string& model_kind,
                       const ParamConfig& config, double score,
                       const std::string& objective);
ParamConfig load_best_config(const std::filesystem::path& path, std::string* model_kind);

// ---- metric reports ----

void write_metric_report(const std::filesystem::path& path, const MetricReport& report);
void write_per_curve_r(const std::filesystem::path& path, const Vector& r_values);

}  // namespace krfd
