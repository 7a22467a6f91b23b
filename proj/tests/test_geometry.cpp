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

#include <cmath>
#include <numbers>

#include "risloc/errors.hpp"
#include "risloc/geometry.hpp"
#include "risloc/rng.hpp"

using namespace risloc;
namespace geom = risloc::geom;
constexpr double kPi = std::numbers::pi;

// Table I scene: anchors at (0,2) and (2,2), surface at the origin, alpha=pi/6.
namespace {
const Vec2 kTx{0.0, 2.0};
const Vec2 kRx{2.0, 2.0};
const Vec2 kRis{0.0, 0.0};
constexpr double kAlpha = kPi / 6.0;
constexpr double kC = 3.0e8;
constexpr double kTau = 1.60947570824873e-08;       // (2 + sqrt 8)/c
constexpr double kOmega = 0.2411809548974792;       // sin(pi/6) + sin(-pi/12)
}  // namespace

TEST_CASE("rotation matrix special values") {
    const geom::Mat2 identity = geom::rotation_matrix(0.0);
    CHECK(identity.isApprox(geom::Mat2::Identity(), 1e-15));

    const geom::Mat2 quarter = geom::rotation_matrix(kPi / 2.0);
    CHECK(quarter(0, 0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(quarter(0, 1) == doctest::Approx(-1.0));
    CHECK(quarter(1, 0) == doctest::Approx(1.0));
    CHECK(quarter(1, 1) == doctest::Approx(0.0).epsilon(1e-12));

    const geom::Mat2 sixth = geom::rotation_matrix(kPi / 6.0);
    CHECK(sixth(0, 0) == doctest::Approx(0.86603).epsilon(1e-5));
    CHECK(sixth(0, 1) == doctest::Approx(-0.5));
    CHECK(sixth(1, 0) == doctest::Approx(0.5));
    CHECK(sixth(1, 1) == doctest::Approx(0.86603).epsilon(1e-5));
}

TEST_CASE("rotation matrix orthonormality over random angles") {
    Rng rng(42);
    for (int i = 0; i < 1000; ++i) {
        const double alpha = rng.uniform(-10.0, 10.0);
        const geom::Mat2 r = geom::rotation_matrix(alpha);
        CHECK((r.transpose() * r - geom::Mat2::Identity()).norm() < 1e-14);
        CHECK(r.determinant() == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("element positions: centered unrotated") {
    const auto elems = geom::element_positions({{0.0, 0.0}, 0.0}, 0.005, 3);
    REQUIRE(elems.size() == 3);
    CHECK(elems[0].x == doctest::Approx(-0.005));
    CHECK(elems[1].x == doctest::Approx(0.0));
    CHECK(elems[2].x == doctest::Approx(0.005));
    for (const auto& p : elems) CHECK(p.y == doctest::Approx(0.0));
}

TEST_CASE("element positions: single element at the center") {
    const auto elems = geom::element_positions({{1.5, -2.0}, 0.7}, 0.01, 1);
    REQUIRE(elems.size() == 1);
    CHECK(elems[0].x == doctest::Approx(1.5));
    CHECK(elems[0].y == doctest::Approx(-2.0));
}

TEST_CASE("element positions: rotated end element") {
    // oracle: offset -31.5 * 0.005 along the axis (cos a, -sin a)
    const auto elems = geom::element_positions({{0.0, 0.0}, kAlpha}, 0.005, 64);
    REQUIRE(elems.size() == 64);
    const double offset = -31.5 * 0.005;
    CHECK(elems[0].x == doctest::Approx(offset * std::cos(kAlpha)).epsilon(1e-12));
    CHECK(elems[0].y == doctest::Approx(-offset * std::sin(kAlpha)).epsilon(1e-12));
    CHECK(elems[0].x == doctest::Approx(-0.1363990010960491).epsilon(1e-12));
    CHECK(elems[0].y == doctest::Approx(0.07875).epsilon(1e-12));
}

TEST_CASE("element centroid equals the center for random poses") {
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        const geom::RisPose pose{{rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)},
                                 rng.uniform(-kPi, kPi)};
        const int m = (i % 2 == 0) ? 63 : 64;  // odd and even counts
        const auto elems = geom::element_positions(pose, 0.005, m);
        Vec2 centroid{0.0, 0.0};
        for (const auto& p : elems) centroid += p;
        centroid = centroid / static_cast<double>(m);
        CHECK(std::abs(centroid.x - pose.center.x) < 1e-12);
        CHECK(std::abs(centroid.y - pose.center.y) < 1e-12);
    }
}

TEST_CASE("path delay") {
    CHECK(geom::path_delay(kTx, kRx, kRis, kC) ==
          doctest::Approx(kTau).epsilon(1e-13));
    // collinear midpoint, anchors 2 m apart
    CHECK(geom::path_delay({-1.0, 0.0}, {1.0, 0.0}, {0.0, 0.0}, kC) ==
          doctest::Approx(2.0 / kC).epsilon(1e-15));
    // homogeneity: doubling all positions doubles tau
    const double t1 = geom::path_delay(kTx, kRx, {0.3, -0.4}, kC);
    const double t2 = geom::path_delay(kTx * 2.0, kRx * 2.0, {0.6, -0.8}, kC);
    CHECK(t2 == doctest::Approx(2.0 * t1).epsilon(1e-14));
    CHECK_THROWS_AS(geom::path_delay(kTx, kRx, kTx, kC), DegenerateGeometryError);
}

TEST_CASE("anchor angles") {
    const auto ang = geom::anchor_angles(kTx, kRx, kRis);
    CHECK(ang.theta_tx == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(ang.theta_rx == doctest::Approx(-kPi / 4.0).epsilon(1e-14));
    // boresight: anchor straight above
    CHECK(geom::anchor_angles({0.0, 5.0}, kRx, kRis).theta_tx ==
          doctest::Approx(0.0).epsilon(1e-14));
    // anchor along +x
    CHECK(geom::anchor_angles({3.0, 0.0}, kRx, kRis).theta_tx ==
          doctest::Approx(-kPi / 2.0).epsilon(1e-14));
    CHECK_THROWS_AS(geom::anchor_angles(kTx, kRx, kRx), DegenerateGeometryError);
}

TEST_CASE("anchor angles stay wrapped") {
    Rng rng(11);
    for (int i = 0; i < 500; ++i) {
        const Vec2 p{rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0)};
        const auto ang = geom::anchor_angles(kTx, kRx, p);
        CHECK(ang.theta_tx > -kPi);
        CHECK(ang.theta_tx <= kPi);
        CHECK(ang.theta_rx > -kPi);
        CHECK(ang.theta_rx <= kPi);
    }
}

TEST_CASE("omega") {
    CHECK(geom::omega_of(0.0, -kPi / 4.0, kAlpha) ==
          doctest::Approx(kOmega).epsilon(1e-14));
    CHECK(geom::omega_of(0.0, 0.0, 0.0) == doctest::Approx(0.0));
    const double a = 0.3;
    CHECK(geom::omega_of(kPi / 2.0 - a, kPi / 2.0 - a, a) == doctest::Approx(2.0));
}

TEST_CASE("ellipse from TOA") {
    const auto e = geom::ellipse_from_toa(kTx, kRx, kTau, kC);
    CHECK(e.center.x == doctest::Approx(1.0));
    CHECK(e.center.y == doctest::Approx(2.0));
    CHECK(e.beta == doctest::Approx(0.0));
    CHECK(e.semi_major == doctest::Approx(2.414213562373095).epsilon(1e-14));
    CHECK(e.semi_minor == doctest::Approx(2.19736822693562).epsilon(1e-14));

    // coincident anchors give a circle
    const auto circle = geom::ellipse_from_toa({1.0, 1.0}, {1.0, 1.0}, 1e-8, kC);
    CHECK(circle.semi_major == doctest::Approx(circle.semi_minor));
    CHECK(circle.semi_major == doctest::Approx(1.5));

    // boundary: c*tau equal to the separation
    CHECK_THROWS_AS(geom::ellipse_from_toa(kTx, kRx, 2.0 / kC, kC),
                    InfeasibleToaError);
}

TEST_CASE("ellipse point basics") {
    const auto e = geom::ellipse_from_toa(kTx, kRx, kTau, kC);
    const Vec2 vertex = geom::ellipse_point(e, 0.0);
    CHECK(vertex.x == doctest::Approx(1.0 + e.semi_major));
    CHECK(vertex.y == doctest::Approx(2.0));

    // the true pose sits on the ellipse at nu = atan2(-2/b, -1/a)
    const double nu_true = std::atan2(-2.0 / e.semi_minor, -1.0 / e.semi_major);
    CHECK(nu_true == doctest::Approx(-1.9978749131873728).epsilon(1e-12));
    const Vec2 p = geom::ellipse_point(e, nu_true);
    CHECK(std::abs(p.x) < 1e-9);
    CHECK(std::abs(p.y) < 1e-9);
}

TEST_CASE("ellipse points satisfy the range-sum identity") {
    Rng rng(99);
    for (int i = 0; i < 1000; ++i) {
        const Vec2 tx{rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)};
        const Vec2 rx{rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)};
        const double extra = rng.uniform(0.1, 10.0);
        const double tau = ((tx - rx).norm() + extra) / kC;
        const auto e = geom::ellipse_from_toa(tx, rx, tau, kC);
        const double nu = rng.uniform(0.0, 2.0 * kPi);
        const Vec2 p = geom::ellipse_point(e, nu);
        const double range_sum = (p - tx).norm() + (p - rx).norm();
        CHECK(range_sum ==
              doctest::Approx(2.0 * e.semi_major).epsilon(1e-12));
    }
}

TEST_CASE("alpha from nu at the Table I scene") {
    const auto e = geom::ellipse_from_toa(kTx, kRx, kTau, kC);
    const double nu_true = std::atan2(-2.0 / e.semi_minor, -1.0 / e.semi_major);
    const auto alpha = geom::alpha_from_nu(nu_true, kOmega, e, kTx, kRx);
    REQUIRE(alpha.has_value());
    CHECK(*alpha == doctest::Approx(kAlpha).epsilon(1e-9));
}

TEST_CASE("alpha from nu symmetric case") {
    // anchors mirror-symmetric about the vertical through the surface:
    // theta_tx = -theta_rx, so omega = 0 maps to alpha = 0
    const Vec2 tx{-1.0, 2.0}, rx{1.0, 2.0};
    const double tau = geom::path_delay(tx, rx, {0.0, 0.0}, kC);
    const auto e = geom::ellipse_from_toa(tx, rx, tau, kC);
    const double nu_true =
        std::atan2(-2.0 / e.semi_minor, 0.0);  // bottom of the ellipse
    const auto alpha = geom::alpha_from_nu(nu_true, 0.0, e, tx, rx);
    REQUIRE(alpha.has_value());
    CHECK(std::abs(*alpha) < 1e-12);
}

TEST_CASE("alpha from nu infeasible when omega exceeds 2") {
    const auto e = geom::ellipse_from_toa(kTx, kRx, kTau, kC);
    CHECK_FALSE(geom::alpha_from_nu(1.0, 2.5, e, kTx, kRx).has_value());
}

TEST_CASE("omega/alpha round trip over random feasible scenes") {
    Rng rng(2026);
    int checked = 0;
    while (checked < 300) {
        const Vec2 p{rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
        const double alpha = rng.uniform(-kPi / 2.0, kPi / 2.0);
        if ((p - kTx).norm() < 0.2 || (p - kRx).norm() < 0.2) continue;
        const auto ang = geom::anchor_angles(kTx, kRx, p);
        const double omega = geom::omega_of(ang.theta_tx, ang.theta_rx, alpha);
        const double tau = geom::path_delay(kTx, kRx, p, kC);
        const auto e = geom::ellipse_from_toa(kTx, kRx, tau, kC);
        // invert the ellipse parameterization for the true nu
        const double cb = std::cos(e.beta), sb = std::sin(e.beta);
        const Vec2 rel = p - e.center;
        const double nu = std::atan2((-sb * rel.x + cb * rel.y) / e.semi_minor,
                                     (cb * rel.x + sb * rel.y) / e.semi_major);
        const auto recovered = geom::alpha_from_nu(nu, omega, e, kTx, kRx);
        REQUIRE(recovered.has_value());
        // identity: the recovered orientation reproduces omega exactly
        const double omega_back =
            geom::omega_of(ang.theta_tx, ang.theta_rx, *recovered);
        CHECK(std::abs(omega_back - omega) < 1e-10);
        // exact recovery holds on the principal branch
        const double half_sum = 0.5 * (ang.theta_tx + ang.theta_rx);
        if (std::abs(half_sum + alpha) < kPi / 2.0 - 1e-6) {
            CHECK(std::abs(*recovered - alpha) < 1e-9);
        }
        ++checked;
    }
}

TEST_CASE("fraunhofer distance") {
    CHECK(geom::fraunhofer_distance(64, 0.005, 0.01) == doctest::Approx(20.48));
    CHECK(geom::fraunhofer_distance(1, 0.005, 0.01) ==
          doctest::Approx(2.0 * 0.005 * 0.005 / 0.01));
    // doubling M quadruples the distance
    CHECK(geom::fraunhofer_distance(128, 0.005, 0.01) ==
          doctest::Approx(4.0 * geom::fraunhofer_distance(64, 0.005, 0.01)));
}

TEST_CASE("wrap angle range") {
    CHECK(geom::wrap_angle(kPi) == doctest::Approx(kPi));
    CHECK(geom::wrap_angle(-kPi) == doctest::Approx(kPi));
    CHECK(geom::wrap_angle(3.0 * kPi) == doctest::Approx(kPi));
    CHECK(geom::wrap_angle(2.0 * kPi) == doctest::Approx(0.0).epsilon(1e-12));
    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
        const double w = geom::wrap_angle(rng.uniform(-50.0, 50.0));
        CHECK(w > -kPi);
        CHECK(w <= kPi);
    }
}
