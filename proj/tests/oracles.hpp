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

// Test-only numerical oracles. Everything here differentiates the forward
// model sig::model_mean directly and never touches the analytic derivative
// code it is used to check.

#pragma once

#include <Eigen/Core>
#include <array>
#include <cmath>
#include <numbers>

#include "risloc/crb.hpp"
#include "risloc/signal.hpp"

namespace risloc::testing {

inline Eigen::MatrixXcd mean_of_eta(const sig::SystemConfig& cfg,
                                    const crb::EtaParams& eta,
                                    const sig::PhaseProfiles& profiles) {
    return sig::model_mean(cfg, eta.rho, eta.phi, eta.tau, eta.pose, profiles);
}

inline crb::EtaParams shift_eta(const crb::EtaParams& eta, int index,
                                double step) {
    crb::EtaParams out = eta;
    switch (index) {
        case 0: out.rho += step; break;
        case 1: out.phi += step; break;
        case 2: out.tau += step; break;
        case 3: out.pose.center.x += step; break;
        case 4: out.pose.center.y += step; break;
        case 5: out.pose.alpha += step; break;
    }
    return out;
}

// Central-difference steps adapted to each parameter's curvature scale.
inline std::array<double, 6> fd_steps(const sig::SystemConfig& cfg,
                                      const crb::EtaParams& eta) {
    const double tau_scale =
        1.0 / (2.0 * std::numbers::pi * cfg.num_subcarriers *
               cfg.subcarrier_spacing);
    return {1e-5 * eta.rho, 1e-5, 5e-6 * tau_scale, 1e-7, 1e-7, 1e-6};
}

// Rows: d mu / d eta_l via central differences, flattened over (t, n_c) with
// column index t * N_c + n.
inline Eigen::MatrixXcd fd_mu_derivatives(const sig::SystemConfig& cfg,
                                          const crb::EtaParams& eta,
                                          const sig::PhaseProfiles& profiles) {
    const auto steps = fd_steps(cfg, eta);
    const Eigen::Index cols =
        static_cast<Eigen::Index>(cfg.num_subcarriers) * cfg.num_transmissions;
    Eigen::MatrixXcd rows(6, cols);
    for (int l = 0; l < 6; ++l) {
        const auto hi = mean_of_eta(cfg, shift_eta(eta, l, steps[l]), profiles);
        const auto lo = mean_of_eta(cfg, shift_eta(eta, l, -steps[l]), profiles);
        const Eigen::MatrixXcd diff = (hi - lo) / (2.0 * steps[l]);
        for (int t = 0; t < cfg.num_transmissions; ++t) {
            for (int n = 0; n < cfg.num_subcarriers; ++n) {
                rows(l, static_cast<Eigen::Index>(t) * cfg.num_subcarriers + n) =
                    diff(n, t);
            }
        }
    }
    return rows;
}

// Fisher information assembled from the finite-difference derivative rows.
inline crb::Mat6 fd_fim_eta(const sig::SystemConfig& cfg,
                            const crb::EtaParams& eta,
                            const sig::PhaseProfiles& profiles) {
    const Eigen::MatrixXcd rows = fd_mu_derivatives(cfg, eta, profiles);
    const Eigen::Matrix<std::complex<double>, 6, 6> gram = rows * rows.adjoint();
    return (2.0 / cfg.noise_variance) * gram.real();
}

// Finite-difference Fisher information directly over zeta = [rho, phi, p,
// alpha], with tau re-derived from the position inside the model.
inline crb::Mat5 fd_fim_zeta(const sig::SystemConfig& cfg,
                             const geom::RisPose& pose, double rho, double phi,
                             const sig::PhaseProfiles& profiles) {
    auto mean_of_zeta = [&](const Eigen::Matrix<double, 5, 1>& z) {
        const geom::RisPose p{{z[2], z[3]}, z[4]};
        const double tau =
            geom::path_delay(cfg.p_tx, cfg.p_rx, p.center, cfg.speed_of_light);
        return sig::model_mean(cfg, z[0], z[1], tau, p, profiles);
    };
    Eigen::Matrix<double, 5, 1> z;
    z << rho, phi, pose.center.x, pose.center.y, pose.alpha;
    const double tau_scale = 1.0 / (2.0 * std::numbers::pi *
                                    cfg.num_subcarriers * cfg.subcarrier_spacing);
    (void)tau_scale;
    const std::array<double, 5> steps{1e-5 * rho, 1e-5, 1e-7, 1e-7, 1e-6};

    const Eigen::Index cols =
        static_cast<Eigen::Index>(cfg.num_subcarriers) * cfg.num_transmissions;
    Eigen::MatrixXcd rows(5, cols);
    for (int l = 0; l < 5; ++l) {
        auto zh = z, zl = z;
        zh[l] += steps[l];
        zl[l] -= steps[l];
        const Eigen::MatrixXcd diff =
            (mean_of_zeta(zh) - mean_of_zeta(zl)) / (2.0 * steps[l]);
        for (int t = 0; t < cfg.num_transmissions; ++t) {
            for (int n = 0; n < cfg.num_subcarriers; ++n) {
                rows(l, static_cast<Eigen::Index>(t) * cfg.num_subcarriers + n) =
                    diff(n, t);
            }
        }
    }
    const Eigen::Matrix<std::complex<double>, 5, 5> gram = rows * rows.adjoint();
    return (2.0 / cfg.noise_variance) * gram.real();
}

// Reduced instance used by the derivative-oracle checks.
inline sig::SystemConfig reduced_config() {
    sig::SystemConfig cfg;
    cfg.num_elements = 8;
    cfg.num_subcarriers = 16;
    cfg.num_transmissions = 4;
    return cfg;
}

}  // namespace risloc::testing
