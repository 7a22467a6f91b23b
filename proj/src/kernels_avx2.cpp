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

// Compiled with -mavx2 -mfma; only dispatched to when the CPU reports both.

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include "risloc/kernels.hpp"

namespace risloc::kernels {
namespace {

// Lanes hold two packed complex doubles: [re0, im0, re1, im1].

inline __m256d cmul_accum_u(__m256d acc, __m256d a, __m256d b) {
    const __m256d ar = _mm256_movedup_pd(a);           // [ar0, ar0, ar1, ar1]
    const __m256d ai = _mm256_permute_pd(a, 0xF);      // [ai0, ai0, ai1, ai1]
    const __m256d bswap = _mm256_permute_pd(b, 0x5);   // [bi0, br0, bi1, br1]
    // even lanes ar*br - ai*bi, odd lanes ar*bi + ai*br
    return _mm256_add_pd(acc, _mm256_fmaddsub_pd(ar, b, _mm256_mul_pd(ai, bswap)));
}

inline __m256d cmul_accum_c(__m256d acc, __m256d a, __m256d b) {
    const __m256d ar = _mm256_movedup_pd(a);
    const __m256d ai = _mm256_permute_pd(a, 0xF);
    const __m256d bswap = _mm256_permute_pd(b, 0x5);
    // even lanes ar*br + ai*bi, odd lanes ar*bi - ai*br
    return _mm256_add_pd(acc, _mm256_fmsubadd_pd(ar, b, _mm256_mul_pd(ai, bswap)));
}

inline cplx hsum_c(__m256d v) {
    alignas(32) double lane[4];
    _mm256_store_pd(lane, v);
    return {lane[0] + lane[2], lane[1] + lane[3]};
}

cplx avx2_cdotu(const cplx* a, const cplx* b, std::size_t n) {
    const double* pa = reinterpret_cast<const double*>(a);
    const double* pb = reinterpret_cast<const double*>(b);
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = cmul_accum_u(acc0, _mm256_loadu_pd(pa + 2 * i),
                            _mm256_loadu_pd(pb + 2 * i));
        acc1 = cmul_accum_u(acc1, _mm256_loadu_pd(pa + 2 * i + 4),
                            _mm256_loadu_pd(pb + 2 * i + 4));
    }
    for (; i + 2 <= n; i += 2) {
        acc0 = cmul_accum_u(acc0, _mm256_loadu_pd(pa + 2 * i),
                            _mm256_loadu_pd(pb + 2 * i));
    }
    cplx s = hsum_c(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) {
        const double ar = a[i].real(), ai = a[i].imag();
        const double br = b[i].real(), bi = b[i].imag();
        s += cplx{ar * br - ai * bi, ar * bi + ai * br};
    }
    return s;
}

cplx avx2_cdotc(const cplx* a, const cplx* b, std::size_t n) {
    const double* pa = reinterpret_cast<const double*>(a);
    const double* pb = reinterpret_cast<const double*>(b);
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = cmul_accum_c(acc0, _mm256_loadu_pd(pa + 2 * i),
                            _mm256_loadu_pd(pb + 2 * i));
        acc1 = cmul_accum_c(acc1, _mm256_loadu_pd(pa + 2 * i + 4),
                            _mm256_loadu_pd(pb + 2 * i + 4));
    }
    for (; i + 2 <= n; i += 2) {
        acc0 = cmul_accum_c(acc0, _mm256_loadu_pd(pa + 2 * i),
                            _mm256_loadu_pd(pb + 2 * i));
    }
    cplx s = hsum_c(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) {
        const double ar = a[i].real(), ai = a[i].imag();
        const double br = b[i].real(), bi = b[i].imag();
        s += cplx{ar * br + ai * bi, ar * bi - ai * br};
    }
    return s;
}

double avx2_cnorm2(const cplx* a, std::size_t n) {
    const double* pa = reinterpret_cast<const double*>(a);
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v0 = _mm256_loadu_pd(pa + 2 * i);
        const __m256d v1 = _mm256_loadu_pd(pa + 2 * i + 4);
        acc0 = _mm256_fmadd_pd(v0, v0, acc0);
        acc1 = _mm256_fmadd_pd(v1, v1, acc1);
    }
    for (; i + 2 <= n; i += 2) {
        const __m256d v = _mm256_loadu_pd(pa + 2 * i);
        acc0 = _mm256_fmadd_pd(v, v, acc0);
    }
    alignas(32) double lane[4];
    _mm256_store_pd(lane, _mm256_add_pd(acc0, acc1));
    double s = lane[0] + lane[1] + lane[2] + lane[3];
    for (; i < n; ++i) {
        s += a[i].real() * a[i].real() + a[i].imag() * a[i].imag();
    }
    return s;
}

void avx2_cabs2_accum(double* dst, const cplx* src, std::size_t n) {
    const double* ps = reinterpret_cast<const double*>(src);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const __m256d v = _mm256_loadu_pd(ps + 2 * i);
        const __m256d sq = _mm256_mul_pd(v, v);
        const __m256d h = _mm256_hadd_pd(sq, sq);  // [s0, s0, s1, s1]
        const __m128d lo = _mm256_castpd256_pd128(h);
        const __m128d hi = _mm256_extractf128_pd(h, 1);
        const __m128d pair = _mm_shuffle_pd(lo, hi, 0);  // [s0, s1]
        _mm_storeu_pd(dst + i, _mm_add_pd(_mm_loadu_pd(dst + i), pair));
    }
    for (; i < n; ++i) {
        dst[i] += src[i].real() * src[i].real() + src[i].imag() * src[i].imag();
    }
}

}  // namespace

const Ops kAvx2Ops = {"avx2", avx2_cdotu, avx2_cdotc, avx2_cnorm2,
                      avx2_cabs2_accum};

}  // namespace risloc::kernels

#endif  // x86_64
