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

#include "krfd/matrix.hpp"

namespace krfd {

/// Functional observations on a shared measurement grid: every input row of
/// x has a function value at every grid row of t.
struct DenseFunctionalDataset {
    Matrix x;  // N x p covariates
    Matrix t;  // L x q measurement grid
    Matrix y;  // N x L observations

    std::size_t n_inputs() const { return x.rows(); }
    std::size_t n_grid() const { return t.rows(); }

    void validate() const;
};

/// Ragged functional observations: input i owns records
/// [offsets[i], offsets[i+1]) of (t, y). Records stay grouped by input.
struct SparseFunctionalDataset {
    Matrix x;                          // N x p covariates
    std::vector<std::int64_t> offsets; // N + 1
    Matrix t;                          // S x q measurement locations
    Vector y;                          // S observations

    std::size_t n_inputs() const { return x.rows(); }
    std::size_t n_records() const { return y.size(); }
    std::size_t records_begin(std::size_t i) const {
        return static_cast<std::size_t>(offsets[i]);
    }
    std::size_t records_end(std::size_t i) const {
        return static_cast<std::size_t>(offsets[i + 1]);
    }

    void validate() const;
};

/// Deterministic input-level split. Index lists are in shuffled draw order.
struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

SplitIndices make_split(std::size_t n, double train_fraction, std::uint64_t seed);

DenseFunctionalDataset take_inputs(const DenseFunctionalDataset& ds,
                                   const std::vector<std::size_t>& indices);
SparseFunctionalDataset take_inputs(const SparseFunctionalDataset& ds,
                                    const std::vector<std::size_t>& indices);

std::pair<DenseFunctionalDataset, DenseFunctionalDataset> split(
    const DenseFunctionalDataset& ds, double train_fraction, std::uint64_t seed);
std::pair<SparseFunctionalDataset, SparseFunctionalDataset> split(
    const SparseFunctionalDataset& ds, double train_fraction, std::uint64_t seed);

}  // namespace krfd
