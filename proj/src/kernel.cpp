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

#include "krfd/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "krfd/simd.hpp"

namespace krfd {

std::string kernel_kind_name(KernelKind kind) {
    return kind == KernelKind::kGaussian ? "gaussian" : "laplacian";
}

KernelKind kernel_kind_from_name(const std::string& name) {
    if (name == "gaussian") return KernelKind::kGaussian;
    if (name == "laplacian") return KernelKind::kLaplacian;
    throw InputError("unknown kernel kind '" + name + "' (expected gaussian|laplacian)");
}

namespace {

void check_config(const KernelConfig& cfg) {
    if (!(cfg.scale > 0.0)) throw InputError("kernel scale must be positive");
}

inline double eval_from_points(const KernelConfig& cfg, const double* a,
                               const double* b, std::size_t dim) {
    if (cfg.kind == KernelKind::kGaussian) {
        return std::exp(-simd::sq_dist(a, b, dim) / (2.0 * cfg.scale * cfg.scale));
    }
    return std::exp(-simd::l1_dist(a, b, dim) / cfg.scale);
}

}  // namespace

double eval_kernel(const KernelConfig& cfg, std::span<const double> a,
                   std::span<const double> b) {
    check_config(cfg);
    if (a.size() != b.size()) {
        throw InputError("eval_kernel: point dimensions disagree");
    }
    return eval_from_points(cfg, a.data(), b.data(), a.size());
}

Matrix gram(const KernelConfig& cfg, const Matrix& row_points, const Matrix& col_points) {
    check_config(cfg);
    if (row_points.rows() == 0 || col_points.rows() == 0) {
        throw InputError("gram: empty point set");
    }
    if (row_points.cols() != col_points.cols()) {
        throw InputError("gram: point dimensions disagree");
    }
    const std::size_t dim = row_points.cols();
    Matrix g(row_points.rows(), col_points.rows());
    parallel_for(row_points.rows(), [&](std::size_t i) {
        const double* pi = row_points.row(i);
        double* gi = g.row(i);
        for (std::size_t j = 0; j < col_points.rows(); ++j) {
            gi[j] = eval_from_points(cfg, pi, col_points.row(j), dim);
        }
    });
    return g;
}

Matrix gram(const KernelConfig& cfg, const Matrix& points) {
    check_config(cfg);
    if (points.rows() == 0) throw InputError("gram: empty point set");
    const std::size_t n = points.rows();
    const std::size_t dim = points.cols();
    Matrix g(n, n);
    // Upper triangle only, mirrored, so symmetry is structural.
    parallel_for(n, [&](std::size_t i) {
        const double* pi = points.row(i);
        g(i, i) = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = eval_from_points(cfg, pi, points.row(j), dim);
            g(i, j) = v;
        }
    });
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) g(j, i) = g(i, j);
    }
    return g;
}

SparseGram truncate(const Matrix& gm, double target_zero_fraction, bool diagonal_exempt) {
    if (!(target_zero_fraction >= 0.0) || target_zero_fraction >= 1.0) {
        throw InputError("truncate: target zero fraction must lie in [0, 1)");
    }
    const std::size_t total = gm.rows() * gm.cols();
    if (total == 0) throw InputError("truncate: empty matrix");
    const bool square = diagonal_exempt && gm.rows() == gm.cols();

    // Candidates for removal: everything except a square matrix's diagonal.
    std::vector<double> candidates;
    candidates.reserve(total);
    for (std::size_t i = 0; i < gm.rows(); ++i) {
        for (std::size_t j = 0; j < gm.cols(); ++j) {
            if (!square || i != j) candidates.push_back(gm(i, j));
        }
    }

    const auto want_zero =
        static_cast<std::size_t>(std::ceil(target_zero_fraction * static_cast<double>(total)));

    double threshold;
    if (want_zero == 0) {
        threshold = 0.0;  // kernel values are positive, so nothing drops
    } else if (want_zero >= candidates.size()) {
        threshold = std::numeric_limits<double>::infinity();
    } else {
        // Drop values strictly below the (want_zero+1)-th smallest candidate;
        // equal values at the cut survive (fraction may undershoot on ties).
        std::nth_element(candidates.begin(), candidates.begin() + want_zero,
                         candidates.end());
        threshold = candidates[want_zero];
    }

    SparseGram out;
    out.threshold = threshold;
    out.matrix = SparseMatrix(gm.rows(), gm.cols());
    std::size_t dropped = 0;
    for (std::size_t i = 0; i < gm.rows(); ++i) {
        for (std::size_t j = 0; j < gm.cols(); ++j) {
            const double v = gm(i, j);
            const bool keep = (square && i == j) || v >= threshold;
            if (keep && v != 0.0) {
                out.matrix.col_idx.push_back(static_cast<std::int32_t>(j));
                out.matrix.values.push_back(v);
            } else {
                ++dropped;
            }
        }
        out.matrix.row_ptr[i + 1] = static_cast<std::int64_t>(out.matrix.values.size());
    }
    out.zero_fraction = static_cast<double>(dropped) / static_cast<double>(total);
    return out;
}

double z_t_from_z_g(double z_g) {
    if (!(z_g >= 0.0) || z_g > 0.9) {
        throw InputError("z_t_from_z_g: z_G must lie in [0, 0.9]");
    }
    return (0.9 - z_g) / (1.0 - z_g);
}

}  // namespace krfd
