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

#include <Eigen/SVD>
#include <cmath>
#include <numbers>

#include "risloc/errors.hpp"
#include "risloc/signal.hpp"

using namespace risloc;
namespace sig = risloc::sig;
namespace geom = risloc::geom;
constexpr double kPi = std::numbers::pi;

namespace {

sig::SystemConfig table_config() {
    sig::SystemConfig cfg;  // defaults hold the Table I values
    return cfg;
}

const geom::RisPose kPose{{0.0, 0.0}, kPi / 6.0};

}  // namespace

TEST_CASE("channel amplitude") {
    const auto cfg = table_config();
    // oracle: sqrt(Gt Gr A lambda^2 / (64 pi^3)) / (d_tx d_rx), A = spacing^2/4
    const double area = 0.005 * 0.005 / 4.0;
    const double oracle =
        std::sqrt(2.0 * 2.0 * area * 0.01 * 0.01 / (64.0 * kPi * kPi * kPi)) /
        (2.0 * std::sqrt(8.0));
    const double rho = sig::channel_amplitude(cfg, {0.0, 0.0});
    CHECK(rho == doctest::Approx(oracle).epsilon(1e-14));
    CHECK(rho == doctest::Approx(1.9841761229450303e-07).epsilon(1e-12));

    // doubling both distances quarters the amplitude
    auto far_cfg = cfg;
    far_cfg.p_tx = {0.0, 4.0};
    far_cfg.p_rx = {4.0, 4.0};
    const double rho_far = sig::channel_amplitude(
        far_cfg, {4.0 - 4.0 * std::sqrt(2.0) * 0.0, 0.0});
    (void)rho_far;
    const double d1 = sig::channel_amplitude(cfg, {0.3, -0.2});
    auto scaled = cfg;
    scaled.p_tx = cfg.p_tx * 2.0;
    scaled.p_rx = cfg.p_rx * 2.0;
    const double d2 = sig::channel_amplitude(scaled, {0.6, -0.4});
    CHECK(d2 == doctest::Approx(d1 / 4.0).epsilon(1e-12));

    CHECK_THROWS_AS(sig::channel_amplitude(cfg, cfg.p_tx),
                    DegenerateGeometryError);
}

TEST_CASE("delay steering") {
    const auto zero = sig::delay_steering(0.0, 16, 120e3);
    for (int n = 0; n < 16; ++n) {
        CHECK(zero[n].real() == doctest::Approx(1.0));
        CHECK(zero[n].imag() == doctest::Approx(0.0));
    }
    // one full bin of rotation: tau = 1/(N delta_f)
    const int n_sub = 16;
    const double delta_f = 120e3;
    const auto bin = sig::delay_steering(1.0 / (n_sub * delta_f), n_sub, delta_f);
    for (int n = 0; n < n_sub; ++n) {
        const auto expect = std::polar(1.0, -2.0 * kPi * n / n_sub);
        CHECK(std::abs(bin[n] - expect) < 1e-12);
    }
    // conjugation symmetry d(-tau) = conj(d(tau))
    const auto fwd = sig::delay_steering(3.7e-9, 32, delta_f);
    const auto rev = sig::delay_steering(-3.7e-9, 32, delta_f);
    for (int n = 0; n < 32; ++n) CHECK(std::abs(rev[n] - std::conj(fwd[n])) < 1e-12);
}

TEST_CASE("near-field response center element") {
    auto cfg = table_config();
    cfg.num_elements = 3;
    const auto b = sig::nearfield_response(kPose, cfg);
    REQUIRE(b.size() == 3);
    CHECK(std::abs(b[1] - std::complex<double>{1.0, 0.0}) < 1e-12);
}

TEST_CASE("near-field response matches its definitional factorization") {
    const auto cfg = table_config();
    const auto b = sig::nearfield_response(kPose, cfg);
    const auto elems =
        geom::element_positions(kPose, cfg.element_spacing, cfg.num_elements);
    const double r_tx_o = (kPose.center - cfg.p_tx).norm();
    const double r_rx_o = (kPose.center - cfg.p_rx).norm();
    const double k = 2.0 * kPi / cfg.wavelength;
    for (int m = 0; m < cfg.num_elements; ++m) {
        const auto a_t =
            std::polar(1.0, -k * ((elems[m] - cfg.p_tx).norm() - r_tx_o));
        const auto a_r =
            std::polar(1.0, -k * ((elems[m] - cfg.p_rx).norm() - r_rx_o));
        CHECK(std::abs(b[m] - a_t * a_r) < 1e-12);
    }
}

TEST_CASE("response vectors have unit modulus") {
    const auto cfg = table_config();
    const auto b = sig::nearfield_response(kPose, cfg);
    for (int m = 0; m < b.size(); ++m) {
        CHECK(std::abs(std::abs(b[m]) - 1.0) < 1e-12);
    }
    const auto bf = sig::ff_response(1.3, 64, 0.005, 0.01);
    for (int m = 0; m < bf.size(); ++m) {
        CHECK(std::abs(std::abs(bf[m]) - 1.0) < 1e-12);
    }
    const auto d = sig::delay_steering(1.6e-8, 500, 120e3);
    for (int n = 0; n < d.size(); ++n) {
        CHECK(std::abs(std::abs(d[n]) - 1.0) < 1e-12);
    }
}

TEST_CASE("far-field response special values") {
    const auto ones = sig::ff_response(0.0, 8, 0.005, 0.01);
    for (int m = 0; m < 8; ++m) {
        CHECK(std::abs(ones[m] - std::complex<double>{1.0, 0.0}) < 1e-12);
    }
    // aliasing period: omega = lambda / spacing gives 2 pi per index step
    const auto aliased = sig::ff_response(2.0, 9, 0.005, 0.01);
    for (int m = 0; m < 9; ++m) {
        CHECK(std::abs(aliased[m] - std::complex<double>{1.0, 0.0}) < 1e-9);
    }
    // M=2, omega=1, half-wavelength spacing: phases +/- pi/2 about the center
    const auto pair = sig::ff_response(1.0, 2, 0.005, 0.01);
    CHECK(std::arg(pair[0]) == doctest::Approx(kPi / 2.0));
    CHECK(std::arg(pair[1]) == doctest::Approx(-kPi / 2.0));
}

TEST_CASE("far-field limit of the near-field response") {
    // anchors recede along fixed rays; the worst-case phase error against the
    // plane-wave response must shrink monotonically
    auto cfg = table_config();
    const Vec2 dir_tx{0.0, 1.0};
    const Vec2 dir_rx{std::sqrt(0.5), std::sqrt(0.5)};
    double previous = 1e9;
    for (double scale : {10.0, 100.0, 1000.0}) {
        auto far = cfg;
        far.p_tx = dir_tx * (2.0 * scale);
        far.p_rx = dir_rx * (2.0 * std::sqrt(2.0) * scale);
        const auto ang = geom::anchor_angles(far.p_tx, far.p_rx, kPose.center);
        const double omega =
            geom::omega_of(ang.theta_tx, ang.theta_rx, kPose.alpha);
        const auto b_near = sig::nearfield_response(kPose, far);
        const auto b_far = sig::ff_response(omega, far.num_elements,
                                            far.element_spacing, far.wavelength);
        double worst = 0.0;
        for (int m = 0; m < b_near.size(); ++m) {
            worst = std::max(worst,
                             std::abs(std::arg(b_near[m] * std::conj(b_far[m]))));
        }
        CHECK(worst < previous);
        previous = worst;
    }
    CHECK(previous < 1e-4);  // anchors at ~2000-2800 m
}

TEST_CASE("random profiles") {
    const auto p1 = sig::random_profiles(16, 8, 123);
    const auto p2 = sig::random_profiles(16, 8, 123);
    const auto p3 = sig::random_profiles(16, 8, 124);
    REQUIRE(p1.gamma.rows() == 16);
    REQUIRE(p1.gamma.cols() == 8);
    bool identical = true, different = false;
    for (int t = 0; t < 8; ++t) {
        for (int m = 0; m < 16; ++m) {
            CHECK(std::abs(std::abs(p1.gamma(m, t)) - 1.0) < 1e-15);
            identical = identical && (p1.gamma(m, t) == p2.gamma(m, t));
            different = different || (p1.gamma(m, t) != p3.gamma(m, t));
        }
    }
    CHECK(identical);
    CHECK(different);
}

TEST_CASE("noiseless observation is rank one") {
    auto cfg = table_config();
    cfg.num_subcarriers = 64;
    cfg.num_transmissions = 8;
    const auto profiles = sig::random_profiles(cfg.num_elements, 8, 5);
    const auto obs = sig::synthesize_observation(cfg, kPose, profiles, 0.4, {});
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(obs.y);
    const auto& sv = svd.singularValues();
    CHECK(sv[1] < 1e-10 * sv[0]);
}

TEST_CASE("rank-one structure with all-ones profile") {
    auto cfg = table_config();
    cfg.num_subcarriers = 32;
    cfg.num_transmissions = 1;
    sig::PhaseProfiles profiles;
    profiles.gamma = Eigen::MatrixXcd::Ones(cfg.num_elements, 1);
    const auto obs = sig::synthesize_observation(cfg, kPose, profiles, 0.0, {});
    const auto& truth = *obs.truth;
    const auto b = sig::nearfield_response(kPose, cfg);
    const std::complex<double> row_sum = b.sum();
    const auto d = sig::delay_steering(truth.tau, cfg.num_subcarriers,
                                       cfg.subcarrier_spacing);
    const auto expected = (truth.gain.value() * std::sqrt(cfg.tx_power) *
                           row_sum) * d;
    for (int n = 0; n < cfg.num_subcarriers; ++n) {
        CHECK(std::abs(obs.y(n, 0) - expected[n]) < 1e-18);
    }
}

TEST_CASE("noiseless Frobenius identity") {
    auto cfg = table_config();
    cfg.num_subcarriers = 64;
    cfg.num_transmissions = 16;
    const auto profiles = sig::random_profiles(cfg.num_elements, 16, 6);
    const auto obs = sig::synthesize_observation(cfg, kPose, profiles, 1.1, {});
    const auto& truth = *obs.truth;
    const auto b = sig::nearfield_response(kPose, cfg);
    const Eigen::VectorXcd q = profiles.gamma.transpose() * b;
    const double expected = truth.gain.rho * truth.gain.rho * cfg.tx_power *
                            cfg.num_subcarriers * q.squaredNorm();
    CHECK(obs.y.squaredNorm() == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("noise statistics") {
    auto cfg = table_config();
    cfg.num_subcarriers = 200;
    cfg.num_transmissions = 50;  // 10^4 noise samples
    const auto profiles = sig::random_profiles(cfg.num_elements, 50, 7);
    const auto clean = sig::synthesize_observation(cfg, kPose, profiles, 0.2, {});
    const auto noisy =
        sig::synthesize_observation(cfg, kPose, profiles, 0.2, 909);
    const Eigen::MatrixXcd w = noisy.y - clean.y;
    const double sample_var = w.squaredNorm() / static_cast<double>(w.size());
    CHECK(sample_var ==
          doctest::Approx(cfg.noise_variance).epsilon(0.05));
}

TEST_CASE("synthesis is deterministic") {
    const auto cfg = table_config();
    const auto profiles = sig::random_profiles(cfg.num_elements, 4, 8);
    auto small = cfg;
    small.num_transmissions = 4;
    small.num_subcarriers = 32;
    const auto a = sig::synthesize_observation(small, kPose, profiles, 0.9, 42);
    const auto b = sig::synthesize_observation(small, kPose, profiles, 0.9, 42);
    CHECK((a.y - b.y).norm() == 0.0);
}

TEST_CASE("config validation lists every violation") {
    sig::SystemConfig cfg;
    cfg.num_elements = 0;
    cfg.ifft_size = 100;  // not a power of two
    try {
        cfg.validate();
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("element count") != std::string::npos);
        CHECK(msg.find("power of two") != std::string::npos);
    }
}
