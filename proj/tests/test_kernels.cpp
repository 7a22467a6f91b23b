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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <complex>
#include <vector>

#include "risloc/kernels.hpp"
#include "risloc/rng.hpp"

using risloc::Rng;
namespace kernels = risloc::kernels;
using kernels::cplx;

namespace {

std::vector<cplx> random_vector(Rng& rng, std::size_t n) {
    std::vector<cplx> v(n);
    for (auto& z : v) z = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    return v;
}

}  // namespace

TEST_CASE("every compiled variant matches the scalar reference") {
    Rng rng(20260810);
    const auto& scalar = kernels::scalar();
    // odd lengths exercise the SIMD tails
    for (std::size_t n : {1u, 2u, 3u, 7u, 8u, 64u, 500u, 501u, 1023u}) {
        const auto a = random_vector(rng, n);
        const auto b = random_vector(rng, n);
        const cplx du = scalar.cdotu(a.data(), b.data(), n);
        const cplx dc = scalar.cdotc(a.data(), b.data(), n);
        const double n2 = scalar.cnorm2(a.data(), n);
        for (const kernels::Ops* ops : kernels::available()) {
            CAPTURE(ops->name);
            CAPTURE(n);
            const cplx du_v = ops->cdotu(a.data(), b.data(), n);
            const cplx dc_v = ops->cdotc(a.data(), b.data(), n);
            const double n2_v = ops->cnorm2(a.data(), n);
            const double scale = std::max(1.0, std::abs(du));
            CHECK(std::abs(du_v - du) / scale < 1e-12);
            CHECK(std::abs(dc_v - dc) / std::max(1.0, std::abs(dc)) < 1e-12);
            CHECK(std::abs(n2_v - n2) / std::max(1.0, n2) < 1e-12);

            std::vector<double> acc_ref(n, 0.5), acc_v(n, 0.5);
            scalar.cabs2_accum(acc_ref.data(), a.data(), n);
            ops->cabs2_accum(acc_v.data(), a.data(), n);
            for (std::size_t i = 0; i < n; ++i) {
                CHECK(acc_v[i] == doctest::Approx(acc_ref[i]).epsilon(1e-13));
            }
        }
    }
}

TEST_CASE("dot products agree with hand-computed values") {
    const std::vector<cplx> a{{1.0, 2.0}, {-3.0, 0.5}};
    const std::vector<cplx> b{{0.5, -1.0}, {2.0, 4.0}};
    for (const kernels::Ops* ops : kernels::available()) {
        CAPTURE(ops->name);
        // (1+2j)(0.5-1j) + (-3+0.5j)(2+4j) = (2.5+0j) + (-8-11j)
        const cplx du = ops->cdotu(a.data(), b.data(), 2);
        CHECK(du.real() == doctest::Approx(-5.5));
        CHECK(du.imag() == doctest::Approx(-11.0));
        // conj(a).b = (1-2j)(0.5-1j) + (-3-0.5j)(2+4j) = (-1.5-2j) + (-4-13j)
        const cplx dc = ops->cdotc(a.data(), b.data(), 2);
        CHECK(dc.real() == doctest::Approx(-5.5));
        CHECK(dc.imag() == doctest::Approx(-15.0));
        CHECK(ops->cnorm2(a.data(), 2) == doctest::Approx(14.25));
    }
}

TEST_CASE("variant forcing") {
    REQUIRE(kernels::force_variant("scalar"));
    CHECK(std::string(kernels::active().name) == "scalar");
    CHECK_FALSE(kernels::force_variant("no-such-variant"));
    // restore the widest variant for other tests in this process
    kernels::force_variant(kernels::available().back()->name);
}
