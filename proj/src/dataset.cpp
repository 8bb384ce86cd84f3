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

#include "krfd/dataset.hpp"

#include <cmath>

#include "krfd/rng.hpp"

namespace krfd {

void DenseFunctionalDataset::validate() const {
    if (x.rows() == 0 || t.rows() == 0) throw FormatError("dense dataset: empty");
    if (y.rows() != x.rows()) {
        throw FormatError("dense dataset: Y row count does not match X");
    }
    if (y.cols() != t.rows()) {
        throw FormatError("dense dataset: Y column count does not match grid length");
    }
    if (!all_finite(x) || !all_finite(t) || !all_finite(y)) {
        throw FormatError("dense dataset: non-finite values");
    }
}

void SparseFunctionalDataset::validate() const {
    if (x.rows() == 0) throw FormatError("sparse dataset: empty");
    if (offsets.size() != x.rows() + 1 || offsets.front() != 0) {
        throw FormatError("sparse dataset: bad offsets");
    }
    if (offsets.back() != static_cast<std::int64_t>(y.size()) || t.rows() != y.size()) {
        throw FormatError("sparse dataset: record counts disagree");
    }
    for (std::size_t i = 0; i < x.rows(); ++i) {
        if (offsets[i + 1] < offsets[i]) throw FormatError("sparse dataset: bad offsets");
        if (offsets[i + 1] == offsets[i]) {
            throw FormatError("sparse dataset: input without records");
        }
    }
    if (!all_finite(x) || !all_finite(t) || !all_finite(y)) {
        throw FormatError("sparse dataset: non-finite values");
    }
}

SplitIndices make_split(std::size_t n, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0) || !(train_fraction < 1.0)) {
        throw InputError("split: train fraction must lie strictly in (0, 1)");
    }
    const auto n_train =
        static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(n)));
    if (n_train == 0 || n_train == n) {
        throw InputError("split: a side of the split would be empty");
    }
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng = Rng::stream(seed, "split");
    for (std::size_t i = n; i-- > 1;) {
        const auto j = static_cast<std::size_t>(rng.uniform_int(0, i));
        std::swap(order[i], order[j]);
    }
    SplitIndices out;
    out.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    return out;
}

DenseFunctionalDataset take_inputs(const DenseFunctionalDataset& ds,
                                   const std::vector<std::size_t>& indices) {
    DenseFunctionalDataset out;
    out.t = ds.t;
    out.x = Matrix(indices.size(), ds.x.cols());
    out.y = Matrix(indices.size(), ds.y.cols());
    for (std::size_t k = 0; k < indices.size(); ++k) {
        const std::size_t i = indices[k];
        for (std::size_t j = 0; j < ds.x.cols(); ++j) out.x(k, j) = ds.x(i, j);
        for (std::size_t j = 0; j < ds.y.cols(); ++j) out.y(k, j) = ds.y(i, j);
    }
    return out;
}

SparseFunctionalDataset take_inputs(const SparseFunctionalDataset& ds,
                                    const std::vector<std::size_t>& indices) {
    SparseFunctionalDataset out;
    out.x = Matrix(indices.size(), ds.x.cols());
    out.offsets.assign(indices.size() + 1, 0);
    std::size_t total = 0;
    for (std::size_t k = 0; k < indices.size(); ++k) {
        total += ds.records_end(indices[k]) - ds.records_begin(indices[k]);
        out.offsets[k + 1] = static_cast<std::int64_t>(total);
    }
    out.t = Matrix(total, ds.t.cols());
    out.y.resize(total);
    for (std::size_t k = 0; k < indices.size(); ++k) {
        const std::size_t i = indices[k];
        for (std::size_t j = 0; j < ds.x.cols(); ++j) out.x(k, j) = ds.x(i, j);
        std::size_t dst = static_cast<std::size_t>(out.offsets[k]);
        for (std::size_t r = ds.records_begin(i); r < ds.records_end(i); ++r, ++dst) {
            for (std::size_t j = 0; j < ds.t.cols(); ++j) out.t(dst, j) = ds.t(r, j);
            out.y[dst] = ds.y[r];
        }
    }
    return out;
}

std::pair<DenseFunctionalDataset, DenseFunctionalDataset> split(
    const DenseFunctionalDataset& ds, double train_fraction, std::uint64_t seed) {
    const SplitIndices idx = make_split(ds.n_inputs(), train_fraction, seed);
    return {take_inputs(ds, idx.train), take_inputs(ds, idx.test)};
}

std::pair<SparseFunctionalDataset, SparseFunctionalDataset> split(
    const SparseFunctionalDataset& ds, double train_fraction, std::uint64_t seed) {
    const SplitIndices idx = make_split(ds.n_inputs(), train_fraction, seed);
    return {take_inputs(ds, idx.train), take_inputs(ds, idx.test)};
}

}  // namespace krfd
