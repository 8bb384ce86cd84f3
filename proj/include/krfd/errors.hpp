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

#include <stdexcept>
#include <string>

namespace krfd {

// Error taxonomy. The CLI maps these onto exit codes:
//   InputError (and subclasses) -> 2, FormatError -> 3, NumericalError -> 4.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid arguments, shape mismatches, violated preconditions.
class InputError : public Error {
public:
    using Error::Error;
};

// A requested problem size exceeds a configured resource cap.
class CapacityError : public InputError {
public:
    using InputError::InputError;
};

// Malformed or version-incompatible files.
class FormatError : public Error {
public:
    using Error::Error;
};

// Solver breakdowns: singular systems, NaN/Inf, non-convergence.
class NumericalError : public Error {
public:
    using Error::Error;
};

// Zero pivot during incomplete factorization; callers may retry with a
// different drop tolerance or fall back to a dense solve.
class ZeroPivotError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace krfd
