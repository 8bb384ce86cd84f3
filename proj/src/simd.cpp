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

#include "krfd/simd.hpp"

#include <cstdlib>
#include <cstring>

namespace krfd::simd {

#if defined(__x86_64__) || defined(_M_X64)
const Ops* avx2_ops_impl();
#endif
#if defined(__aarch64__)
const Ops* neon_ops_impl();
#endif

const Ops* avx2_ops() {
#if defined(__x86_64__) || defined(_M_X64)
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
        return avx2_ops_impl();
    }
#endif
    return nullptr;
}

const Ops* neon_ops() {
#if defined(__aarch64__)
    return neon_ops_impl();
#else
    return nullptr;
#endif
}

namespace {

const Ops& select_backend() {
    if (const char* wanted = std::getenv("KRFD_SIMD")) {
        if (std::strcmp(wanted, "scalar") == 0) return scalar_ops();
        if (std::strcmp(wanted, "avx2") == 0 && avx2_ops()) return *avx2_ops();
        if (std::strcmp(wanted, "neon") == 0 && neon_ops()) return *neon_ops();
        // Unknown or unsupported request: fall through to auto-detection.
    }
    if (const Ops* ops = avx2_ops()) return *ops;
    if (const Ops* ops = neon_ops()) return *ops;
    return scalar_ops();
}

}  // namespace

const Ops& active() {
    static const Ops& chosen = select_backend();
    return chosen;
}

}  // namespace krfd::simd
