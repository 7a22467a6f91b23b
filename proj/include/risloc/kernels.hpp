// Copyright 2026-present the ris-locate project
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

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

// Data-parallel inner loops behind the simulator and estimator. Each kernel
// has a scalar reference implementation plus SIMD variants selected once at
// startup from CPU capabilities. Variants may reassociate the reduction, so
// cross-variant agreement is to rounding, not bit-exact; a fixed variant is
// bit-stable run to run.

namespace risloc::kernels {

using cplx = std::complex<double>;

struct Ops {
    const char* name;
    // sum_i a[i] * b[i]
    cplx (*cdotu)(const cplx* a, const cplx* b, std::size_t n);
    // sum_i conj(a[i]) * b[i]
    cplx (*cdotc)(const cplx* a, const cplx* b, std::size_t n);
    // sum_i |a[i]|^2
    double (*cnorm2)(const cplx* a, std::size_t n);
    // dst[i] += |src[i]|^2
    void (*cabs2_accum)(double* dst, const cplx* src, std::size_t n);
};

// Variant selected for this process (AVX2 when the CPU supports it).
const Ops& active();

// Scalar reference; equivalence tests compare every variant against it.
const Ops& scalar();

// All variants compiled in and runnable on this machine.
const std::vector<const Ops*>& available();

// Overrides the active variant by name ("scalar", "avx2"); returns false if
// the variant is unavailable. Intended for tests and benchmarks.
bool force_variant(const std::string& name);

inline cplx cdotu(const cplx* a, const cplx* b, std::size_t n) {
    return active().cdotu(a, b, n);
}
inline cplx cdotc(const cplx* a, const cplx* b, std::size_t n) {
    return active().cdotc(a, b, n);
}
inline double cnorm2(const cplx* a, std::size_t n) { return active().cnorm2(a, n); }
inline void cabs2_accum(double* dst, const cplx* src, std::size_t n) {
    active().cabs2_accum(dst, src, n);
}

}  // namespace risloc::kernels
