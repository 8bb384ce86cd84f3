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

#include <cmath>
#include <cstdint>
#include <optional>

#include "krfd/dataset.hpp"

namespace krfd {

// Synthetic benchmark curves: y(t) = a sin(b t + c) + d t + e + noise, with
// the coefficient vector (a, b, c, d, e) doubling as the covariates.

struct SineLineParams {
    double amplitude = 0.0;  // a
    double frequency = 0.0;  // b
    double phase = 0.0;      // c
    double slope = 0.0;      // d
    double intercept = 0.0;  // e
    double noise_sd = 0.0;
};

inline double sine_line_value(const SineLineParams& p, double t) {
    return p.amplitude * std::sin(p.frequency * t + p.phase) + p.slope * t + p.intercept;
}

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

struct CoefficientRanges {
    Interval amplitude{1.0, 5.0};
    Interval frequency{1.0, 5.0};
    Interval phase{0.0, 3.0};
    Interval slope{-2.0, 2.0};
    Interval intercept{-3.0, 3.0};
};

struct DenseGenSpec {
    std::size_t n_inputs = 1000;
    std::size_t n_grid = 51;
    double t_lo = 0.0;
    double t_hi = 2.0;
    double noise_sd = 0.2;
    CoefficientRanges coeffs;
    std::uint64_t seed = 0;
    bool keep_noise = false;  // also return the raw noise draws
};

struct DenseGenResult {
    DenseFunctionalDataset data;
    Matrix truth;                 // noiseless Y, same shape
    std::optional<Matrix> noise;  // present when keep_noise
};

DenseGenResult gen_dense(const DenseGenSpec& spec);

struct SparseGenSpec {
    std::size_t n_inputs = 1000;
    std::uint64_t n_meas_min = 2;
    std::uint64_t n_meas_max = 20;
    double t_lo = 0.0;
    double t_hi = 2.0;
    double noise_sd = 0.2;
    CoefficientRanges coeffs;
    std::uint64_t seed = 0;
    bool keep_noise = false;
};

struct SparseGenResult {
    SparseFunctionalDataset data;
    Vector truth;                 // noiseless value per record
    std::optional<Vector> noise;  // present when keep_noise
};

SparseGenResult gen_sparse(const SparseGenSpec& spec);

/// Evenly spaced grid as an L x 1 matrix; lo and hi inclusive, L >= 2.
Matrix linspace_grid(double lo, double hi, std::size_t n);

/// The generating-curve parameters for covariate row i (noise_sd left 0).
SineLineParams params_from_covariates(const Matrix& x, std::size_t i);

}  // namespace krfd
