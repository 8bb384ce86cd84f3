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

#include "krfd/datagen.hpp"

#include "krfd/rng.hpp"

namespace krfd {

namespace {

void check_interval(const Interval& iv, const char* name) {
    // Degenerate lo == hi intervals are allowed so tests can pin coefficients.
    if (!(iv.lo <= iv.hi)) {
        throw InputError(std::string("datagen: interval ") + name + " has lo > hi");
    }
}

void check_ranges(const CoefficientRanges& r) {
    check_interval(r.amplitude, "amplitude");
    check_interval(r.frequency, "frequency");
    check_interval(r.phase, "phase");
    check_interval(r.slope, "slope");
    check_interval(r.intercept, "intercept");
}

double draw(Rng& rng, const Interval& iv) {
    return iv.lo == iv.hi ? iv.lo : rng.uniform(iv.lo, iv.hi);
}

// Covariate rows drawn from one stream, noise from another, so the two can
// be reproduced independently.
Matrix draw_covariates(std::size_t n, const CoefficientRanges& r, std::uint64_t seed) {
    Matrix x(n, 5);
    Rng rng = Rng::stream(seed, "covariates");
    for (std::size_t i = 0; i < n; ++i) {
        x(i, 0) = draw(rng, r.amplitude);
        x(i, 1) = draw(rng, r.frequency);
        x(i, 2) = draw(rng, r.phase);
        x(i, 3) = draw(rng, r.slope);
        x(i, 4) = draw(rng, r.intercept);
    }
    return x;
}

}  // namespace

Matrix linspace_grid(double lo, double hi, std::size_t n) {
    if (n < 2) throw InputError("grid needs at least 2 points");
    if (!(lo < hi)) throw InputError("grid bounds must satisfy lo < hi");
    Matrix t(n, 1);
    const double step = (hi - lo) / static_cast<double>(n - 1);
    for (std::size_t j = 0; j < n; ++j) t(j, 0) = lo + step * static_cast<double>(j);
    return t;
}

SineLineParams params_from_covariates(const Matrix& x, std::size_t i) {
    if (x.cols() != 5) throw InputError("covariates are not sine-line coefficients");
    SineLineParams p;
    p.amplitude = x(i, 0);
    p.frequency = x(i, 1);
    p.phase = x(i, 2);
    p.slope = x(i, 3);
    p.intercept = x(i, 4);
    return p;
}

DenseGenResult gen_dense(const DenseGenSpec& spec) {
    if (spec.n_inputs == 0) throw InputError("gen_dense: need at least one input");
    if (spec.noise_sd < 0.0) throw InputError("gen_dense: negative noise sd");
    check_ranges(spec.coeffs);

    DenseGenResult out;
    out.data.t = linspace_grid(spec.t_lo, spec.t_hi, spec.n_grid);
    out.data.x = draw_covariates(spec.n_inputs, spec.coeffs, spec.seed);
    out.data.y = Matrix(spec.n_inputs, spec.n_grid);
    out.truth = Matrix(spec.n_inputs, spec.n_grid);
    if (spec.keep_noise) out.noise = Matrix(spec.n_inputs, spec.n_grid);

    Rng noise_rng = Rng::stream(spec.seed, "dense-noise");
    for (std::size_t i = 0; i < spec.n_inputs; ++i) {
        const SineLineParams p = params_from_covariates(out.data.x, i);
        for (std::size_t j = 0; j < spec.n_grid; ++j) {
            const double clean = sine_line_value(p, out.data.t(j, 0));
            const double eps = spec.noise_sd == 0.0 ? 0.0 : noise_rng.normal(0.0, spec.noise_sd);
            out.truth(i, j) = clean;
            out.data.y(i, j) = clean + eps;
            if (out.noise) (*out.noise)(i, j) = eps;
        }
    }
    return out;
}

SparseGenResult gen_sparse(const SparseGenSpec& spec) {
    if (spec.n_inputs == 0) throw InputError("gen_sparse: need at least one input");
    if (spec.n_meas_min < 1 || spec.n_meas_min > spec.n_meas_max) {
        throw InputError("gen_sparse: bad record-count range");
    }
    if (!(spec.t_lo < spec.t_hi)) throw InputError("gen_sparse: bad t range");
    if (spec.noise_sd < 0.0) throw InputError("gen_sparse: negative noise sd");
    check_ranges(spec.coeffs);

    SparseGenResult out;
    out.data.x = draw_covariates(spec.n_inputs, spec.coeffs, spec.seed);

    Rng count_rng = Rng::stream(spec.seed, "sparse-counts");
    out.data.offsets.assign(spec.n_inputs + 1, 0);
    for (std::size_t i = 0; i < spec.n_inputs; ++i) {
        const std::uint64_t ni = count_rng.uniform_int(spec.n_meas_min, spec.n_meas_max);
        out.data.offsets[i + 1] = out.data.offsets[i] + static_cast<std::int64_t>(ni);
    }
    const auto total = static_cast<std::size_t>(out.data.offsets.back());
    out.data.t = Matrix(total, 1);
    out.data.y.resize(total);
    out.truth.resize(total);
    if (spec.keep_noise) out.noise = Vector(total);

    Rng loc_rng = Rng::stream(spec.seed, "sparse-locations");
    Rng noise_rng = Rng::stream(spec.seed, "sparse-noise");
    for (std::size_t i = 0; i < spec.n_inputs; ++i) {
        const SineLineParams p = params_from_covariates(out.data.x, i);
        for (std::size_t r = out.data.records_begin(i); r < out.data.records_end(i); ++r) {
            const double loc = loc_rng.uniform(spec.t_lo, spec.t_hi);
            const double clean = sine_line_value(p, loc);
            const double eps = spec.noise_sd == 0.0 ? 0.0 : noise_rng.normal(0.0, spec.noise_sd);
            out.data.t(r, 0) = loc;
            out.truth[r] = clean;
            out.data.y[r] = clean + eps;
            if (out.noise) (*out.noise)[r] = eps;
        }
    }
    return out;
}

}  // namespace krfd
