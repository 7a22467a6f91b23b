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

#include "risloc/crb.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <numbers>

#include "risloc/errors.hpp"
#include "risloc/kernels.hpp"

namespace risloc::crb {

namespace {

constexpr double kPi = std::numbers::pi;
using cplx = std::complex<double>;
using Vec6c = Eigen::Matrix<cplx, 6, 1>;

// Per-element derivative data for the response vector b:
//   (d_px, d_py)[m] = d b_m / d p_ris
//   d_alpha[m]      = d b_m / d alpha
struct ResponseDerivatives {
    Eigen::VectorXcd b;
    Eigen::VectorXcd d_px;
    Eigen::VectorXcd d_py;
    Eigen::VectorXcd d_alpha;
};

ResponseDerivatives response_derivatives(const sig::SystemConfig& cfg,
                                         const geom::RisPose& pose) {
    const int m_count = cfg.num_elements;
    ResponseDerivatives out;
    out.b = sig::nearfield_response(pose, cfg);
    out.d_px.resize(m_count);
    out.d_py.resize(m_count);
    out.d_alpha.resize(m_count);

    const auto elems =
        geom::element_positions(pose, cfg.element_spacing, cfg.num_elements);
    const double k = 2.0 * kPi / cfg.wavelength;
    const Vec2 axis_d = geom::array_axis_deriv(pose.alpha);
    const double center = 0.5 * static_cast<double>(m_count - 1);

    const double r_tx_o = (pose.center - cfg.p_tx).norm();
    const double r_rx_o = (pose.center - cfg.p_rx).norm();
    const Vec2 kappa_tx_o = (pose.center - cfg.p_tx) / r_tx_o;
    const Vec2 kappa_rx_o = (pose.center - cfg.p_rx) / r_rx_o;

    for (int m = 0; m < m_count; ++m) {
        const double r_tx = (elems[m] - cfg.p_tx).norm();
        const double r_rx = (elems[m] - cfg.p_rx).norm();
        const Vec2 kappa_tx = (elems[m] - cfg.p_tx) / r_tx;
        const Vec2 kappa_rx = (elems[m] - cfg.p_rx) / r_rx;
        const Vec2 grad_p = kappa_tx + kappa_rx - kappa_tx_o - kappa_rx_o;
        const cplx factor = cplx{0.0, -k} * out.b[m];
        out.d_px[m] = factor * grad_p.x;
        out.d_py[m] = factor * grad_p.y;
        // element m moves along d(axis)/d(alpha) scaled by its offset
        const double offset = (static_cast<double>(m) - center) * cfg.element_spacing;
        const double psi = offset * (kappa_tx.dot(axis_d) + kappa_rx.dot(axis_d));
        out.d_alpha[m] = factor * psi;
    }
    return out;
}

// Factors of the per-sample derivative vector: g_{t,n} = s_n * (a_t + n * b_t)
// with |s_n| = sqrt(P_t). Only the delay component carries the extra n.
struct PerTransmission {
    Vec6c a;
    Vec6c b;
};

PerTransmission per_transmission_vectors(const sig::SystemConfig& cfg,
                                         const EtaParams& eta,
                                         const ResponseDerivatives& rd,
                                         const Eigen::MatrixXcd& gamma, int t) {
    const cplx* gcol = gamma.col(t).data();
    const int m_count = cfg.num_elements;
    const cplx c_t = kernels::cdotu(rd.b.data(), gcol, m_count);
    const cplx u_x = kernels::cdotu(rd.d_px.data(), gcol, m_count);
    const cplx u_y = kernels::cdotu(rd.d_py.data(), gcol, m_count);
    const cplx w_t = kernels::cdotu(rd.d_alpha.data(), gcol, m_count);

    const cplx jay{0.0, 1.0};
    PerTransmission out;
    out.a << c_t, jay * eta.rho * c_t, cplx{0.0, 0.0}, eta.rho * u_x,
        eta.rho * u_y, eta.rho * w_t;
    out.b << cplx{0.0, 0.0}, cplx{0.0, 0.0},
        -jay * 2.0 * kPi * cfg.subcarrier_spacing * eta.rho * c_t, cplx{0.0, 0.0},
        cplx{0.0, 0.0}, cplx{0.0, 0.0};
    return out;
}

struct InverseResult {
    bool singular = false;
    double condition = std::numeric_limits<double>::infinity();
    Eigen::MatrixXd inverse;
};

InverseResult guarded_inverse(const Eigen::MatrixXd& m) {
    InverseResult out;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    const auto& vals = es.eigenvalues();
    const double vmax = vals.maxCoeff();
    const double vmin = vals.minCoeff();
    if (!(vmax > 0.0) || !(vmin > 0.0)) {
        out.singular = true;
        return out;
    }
    out.condition = vmax / vmin;
    if (out.condition > kConditionLimit) {
        out.singular = true;
        return out;
    }
    out.inverse = es.eigenvectors() * vals.cwiseInverse().asDiagonal() *
                  es.eigenvectors().transpose();
    return out;
}

}  // namespace

EtaParams eta_from_scene(const sig::SystemConfig& cfg, const geom::RisPose& pose,
                         double phi) {
    EtaParams eta;
    eta.rho = sig::channel_amplitude(cfg, pose.center);
    eta.phi = phi;
    eta.tau = geom::path_delay(cfg.p_tx, cfg.p_rx, pose.center, cfg.speed_of_light);
    eta.pose = pose;
    return eta;
}

Eigen::MatrixXcd mu_derivatives(const sig::SystemConfig& cfg, const EtaParams& eta,
                                const sig::PhaseProfiles& profiles) {
    const int n_sub = cfg.num_subcarriers;
    const int n_tx = cfg.num_transmissions;
    const ResponseDerivatives rd = response_derivatives(cfg, eta.pose);
    Eigen::MatrixXcd rows(6, static_cast<Eigen::Index>(n_sub) * n_tx);

    const cplx base = std::polar(1.0, eta.phi) * std::sqrt(cfg.tx_power);
    for (int t = 0; t < n_tx; ++t) {
        const PerTransmission pt =
            per_transmission_vectors(cfg, eta, rd, profiles.gamma, t);
        for (int n = 0; n < n_sub; ++n) {
            const cplx dn = std::polar(
                1.0, -2.0 * kPi * eta.tau * cfg.subcarrier_spacing * n);
            const cplx s = base * dn;
            const Vec6c g = s * (pt.a + static_cast<double>(n) * pt.b);
            rows.col(static_cast<Eigen::Index>(t) * n_sub + n) = g;
        }
    }
    return rows;
}

Mat6 fim_eta(const sig::SystemConfig& cfg, const EtaParams& eta,
             const sig::PhaseProfiles& profiles) {
    const double n_sub = static_cast<double>(cfg.num_subcarriers);
    // sum n and sum n^2 over n = 0..N_c-1
    const double s1 = n_sub * (n_sub - 1.0) / 2.0;
    const double s2 = (n_sub - 1.0) * n_sub * (2.0 * n_sub - 1.0) / 6.0;

    Eigen::Matrix<cplx, 6, 6> acc = Eigen::Matrix<cplx, 6, 6>::Zero();
    const ResponseDerivatives rd = response_derivatives(cfg, eta.pose);
    for (int t = 0; t < cfg.num_transmissions; ++t) {
        const PerTransmission pt =
            per_transmission_vectors(cfg, eta, rd, profiles.gamma, t);
        acc += n_sub * (pt.a * pt.a.adjoint());
        acc += s1 * (pt.a * pt.b.adjoint() + pt.b * pt.a.adjoint());
        acc += s2 * (pt.b * pt.b.adjoint());
    }
    const double prefactor = 2.0 * cfg.tx_power / cfg.noise_variance;
    Mat6 j = prefactor * acc.real();
    // enforce exact symmetry against accumulation round-off
    j = 0.5 * (j + j.transpose()).eval();
    return j;
}

Mat65 jacobian_T(const Vec2& p_ris, const Vec2& p_tx, const Vec2& p_rx, double c) {
    const double r_tx = (p_ris - p_tx).norm();
    const double r_rx = (p_ris - p_rx).norm();
    if (!(r_tx > 0.0) || !(r_rx > 0.0)) {
        throw DegenerateGeometryError("surface position coincides with an anchor");
    }
    const Vec2 grad = ((p_ris - p_tx) / r_tx + (p_ris - p_rx) / r_rx) / c;
    Mat65 t = Mat65::Zero();
    t(0, 0) = 1.0;
    t(1, 1) = 1.0;
    t(2, 2) = grad.x;
    t(2, 3) = grad.y;
    t(3, 2) = 1.0;
    t(4, 3) = 1.0;
    t(5, 4) = 1.0;
    return t;
}

Mat5 fim_zeta(const Mat6& j_eta, const Mat65& t) {
    Mat5 j = t.transpose() * j_eta * t;
    j = 0.5 * (j + j.transpose()).eval();
    return j;
}

Bounds bounds(const Mat6& j_eta, const Mat5& j_zeta) {
    const InverseResult inv_eta = guarded_inverse(j_eta);
    if (inv_eta.singular) {
        throw SingularFimError("eta information matrix is singular or ill-conditioned",
                               inv_eta.condition);
    }
    const InverseResult inv_zeta = guarded_inverse(j_zeta);
    if (inv_zeta.singular) {
        throw SingularFimError(
            "zeta information matrix is singular or ill-conditioned",
            inv_zeta.condition);
    }
    Bounds b;
    b.teb = std::sqrt(inv_eta.inverse(2, 2));
    b.peb = std::sqrt(inv_zeta.inverse(2, 2) + inv_zeta.inverse(3, 3));
    b.oeb = std::sqrt(inv_zeta.inverse(4, 4));
    return b;
}

CrbReport crb_report(const sig::SystemConfig& cfg, const geom::RisPose& pose,
                     const sig::PhaseProfiles& profiles) {
    CrbReport report;
    // information matrices carry no phase dependence, any phi works
    const EtaParams eta = eta_from_scene(cfg, pose, 0.0);
    report.j_eta = fim_eta(cfg, eta, profiles);
    const Mat65 t =
        jacobian_T(pose.center, cfg.p_tx, cfg.p_rx, cfg.speed_of_light);
    report.j_zeta = fim_zeta(report.j_eta, t);

    const InverseResult inv_eta = guarded_inverse(report.j_eta);
    report.cond_eta = inv_eta.condition;
    report.eta_singular = inv_eta.singular;
    report.teb = inv_eta.singular ? std::numeric_limits<double>::infinity()
                                  : std::sqrt(inv_eta.inverse(2, 2));

    const InverseResult inv_zeta = guarded_inverse(report.j_zeta);
    report.cond_zeta = inv_zeta.condition;
    report.zeta_singular = inv_zeta.singular;
    if (inv_zeta.singular) {
        report.peb = std::numeric_limits<double>::infinity();
        report.oeb = std::numeric_limits<double>::infinity();
    } else {
        report.peb = std::sqrt(inv_zeta.inverse(2, 2) + inv_zeta.inverse(3, 3));
        report.oeb = std::sqrt(inv_zeta.inverse(4, 4));
    }
    return report;
}

}  // namespace risloc::crb
