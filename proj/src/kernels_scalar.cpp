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

#include "risloc/kernels.hpp"

namespace risloc::kernels {
namespace {

// Accumulate on raw doubles; std::complex operator* checks for NaN edge
// cases we never hit and the optimizer does not always remove them.

cplx scalar_cdotu(const cplx* a, const cplx* b, std::size_t n) {
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ar = a[i].real(), ai = a[i].imag();
        const double br = b[i].real(), bi = b[i].imag();
        re += ar * br - ai * bi;
        im += ar * bi + ai * br;
    }
    return {re, im};
}

cplx scalar_cdotc(const cplx* a, const cplx* b, std::size_t n) {
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ar = a[i].real(), ai = a[i].imag();
        const double br = b[i].real(), bi = b[i].imag();
        re += ar * br + ai * bi;
        im += ar * bi - ai * br;
    }
    return {re, im};
}

double scalar_cnorm2(const cplx* a, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        s += a[i].real() * a[i].real() + a[i].imag() * a[i].imag();
    }
    return s;
}

void scalar_cabs2_accum(double* dst, const cplx* src, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        dst[i] += src[i].real() * src[i].real() + src[i].imag() * src[i].imag();
    }
}

}  // namespace

const Ops kScalarOps = {"scalar", scalar_cdotu, scalar_cdotc, scalar_cnorm2,
                        scalar_cabs2_accum};

}  // namespace risloc::kernels
