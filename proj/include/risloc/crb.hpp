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

#include <Eigen/Core>

#include "risloc/signal.hpp"

namespace risloc::crb {

using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat5 = Eigen::Matrix<double, 5, 5>;
using Mat65 = Eigen::Matrix<double, 6, 5>;

// Channel-level parameter vector, ordered [rho, phi, tau, p_x, p_y, alpha].
// tau is free here, not tied to the pose; the geometric coupling enters via
// the Jacobian when reparameterizing.
struct EtaParams {
    double rho = 0.0;
    double phi = 0.0;
    double tau = 0.0;
    geom::RisPose pose;

    Eigen::Matrix<double, 6, 1> vector() const {
        Eigen::Matrix<double, 6, 1> v;
        v << rho, phi, tau, pose.center.x, pose.center.y, pose.alpha;
        return v;
    }
};

struct Bounds {
    double teb = 0.0;  // s
    double peb = 0.0;  // m
    double oeb = 0.0;  // rad
};

struct CrbReport {
    Mat6 j_eta = Mat6::Zero();
    Mat5 j_zeta = Mat5::Zero();
    double teb = 0.0;
    double peb = 0.0;
    double oeb = 0.0;
    double cond_eta = 0.0;
    double cond_zeta = 0.0;
    bool eta_singular = false;
    bool zeta_singular = false;
};

// Condition-number guard for the information-matrix inversions.
inline constexpr double kConditionLimit = 1e12;

// Parameters matching a simulated scene: amplitude from the propagation
// model, delay from the geometry.
EtaParams eta_from_scene(const sig::SystemConfig& cfg, const geom::RisPose& pose,
                         double phi);

// Analytic derivative of the noiseless mean with respect to eta. Row l holds
// d mu / d eta_l flattened over transmissions and subcarriers (column index
// t * N_c + n).
Eigen::MatrixXcd mu_derivatives(const sig::SystemConfig& cfg, const EtaParams& eta,
                                const sig::PhaseProfiles& profiles);

// Fisher information in the eta parameterization. The inner subcarrier sum
// is accumulated in closed form; no derivative matrix is materialized.
Mat6 fim_eta(const sig::SystemConfig& cfg, const EtaParams& eta,
             const sig::PhaseProfiles& profiles);

// d eta / d zeta for zeta = [rho, phi, p_x, p_y, alpha]; identity blocks plus
// the delay gradient row.
Mat65 jacobian_T(const Vec2& p_ris, const Vec2& p_tx, const Vec2& p_rx, double c);

Mat5 fim_zeta(const Mat6& j_eta, const Mat65& t);

// Error bounds from the information-matrix inverses. Throws SingularFimError
// (with the condition estimate) when either matrix fails the guard.
Bounds bounds(const Mat6& j_eta, const Mat5& j_zeta);

// Convenience wrapper: assembles both matrices and the bounds, reporting
// infinities with flags instead of throwing when a matrix is singular.
CrbReport crb_report(const sig::SystemConfig& cfg, const geom::RisPose& pose,
                     const sig::PhaseProfiles& profiles);

}  // namespace risloc::crb
