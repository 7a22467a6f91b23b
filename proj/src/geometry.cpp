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

#include "risloc/geometry.hpp"

#include <cmath>
#include <numbers>

#include "risloc/errors.hpp"

namespace risloc::geom {

namespace {
constexpr double kPi = std::numbers::pi;

void require_separated(const Vec2& a, const Vec2& b, const char* what) {
    if (!((a - b).squared_norm() > 0.0)) {
        throw DegenerateGeometryError(what);
    }
}
}  // namespace

double wrap_angle(double a) {
    double w = std::remainder(a, 2.0 * kPi);
    if (w <= -kPi) w += 2.0 * kPi;
    return w;
}

Mat2 rotation_matrix(double alpha) {
    const double c = std::cos(alpha), s = std::sin(alpha);
    Mat2 r;
    r << c, -s, s, c;
    return r;
}

Mat2 rotation_matrix_deriv(double alpha) {
    const double c = std::cos(alpha), s = std::sin(alpha);
    Mat2 r;
    r << -s, -c, c, -s;
    return r;
}

Vec2 array_axis(double alpha) { return {std::cos(alpha), -std::sin(alpha)}; }

Vec2 array_axis_deriv(double alpha) { return {-std::sin(alpha), -std::cos(alpha)}; }

std::vector<Vec2> element_positions(const RisPose& pose, double delta, int m_count) {
    if (m_count < 1) throw DegenerateGeometryError("element count must be >= 1");
    if (!(delta > 0.0)) throw DegenerateGeometryError("element spacing must be > 0");
    const Vec2 axis = array_axis(pose.alpha);
    std::vector<Vec2> out;
    out.reserve(static_cast<std::size_t>(m_count));
    const double center = 0.5 * static_cast<double>(m_count - 1);
    for (int m = 0; m < m_count; ++m) {
        const double offset = (static_cast<double>(m) - center) * delta;
        out.push_back(pose.center + offset * axis);
    }
    return out;
}

double path_delay(const Vec2& p_tx, const Vec2& p_rx, const Vec2& p_ris, double c) {
    require_separated(p_tx, p_ris, "surface position coincides with the tx anchor");
    require_separated(p_rx, p_ris, "surface position coincides with the rx anchor");
    return ((p_tx - p_ris).norm() + (p_rx - p_ris).norm()) / c;
}

AnchorAngles anchor_angles(const Vec2& p_tx, const Vec2& p_rx, const Vec2& p_ris) {
    require_separated(p_tx, p_ris, "surface position coincides with the tx anchor");
    require_separated(p_rx, p_ris, "surface position coincides with the rx anchor");
    const Vec2 dt = p_tx - p_ris;
    const Vec2 dr = p_rx - p_ris;
    return {wrap_angle(std::atan2(dt.y, dt.x) - kPi / 2.0),
            wrap_angle(std::atan2(dr.y, dr.x) - kPi / 2.0)};
}

double omega_of(double theta_tx, double theta_rx, double alpha) {
    return std::sin(theta_tx + alpha) + std::sin(theta_rx + alpha);
}

EllipseParam ellipse_from_toa(const Vec2& p_tx, const Vec2& p_rx, double tau_hat,
                              double c) {
    const double range_sum = c * tau_hat;
    const Vec2 baseline = p_rx - p_tx;
    const double separation = baseline.norm();
    if (!(range_sum > separation)) {
        throw InfeasibleToaError("c*tau must exceed the anchor separation");
    }
    EllipseParam e;
    e.center = (p_tx + p_rx) * 0.5;
    e.beta = separation > 0.0 ? std::atan2(baseline.y, baseline.x) : 0.0;
    e.semi_major = range_sum / 2.0;
    e.semi_minor = std::sqrt(e.semi_major * e.semi_major -
                             (p_tx - e.center).squared_norm());
    return e;
}

Vec2 ellipse_point(const EllipseParam& e, double nu) {
    const double cb = std::cos(e.beta), sb = std::sin(e.beta);
    const double ex = e.semi_major * std::cos(nu);
    const double ey = e.semi_minor * std::sin(nu);
    return {e.center.x + cb * ex - sb * ey, e.center.y + sb * ex + cb * ey};
}

std::optional<double> alpha_from_nu(double nu, double omega_hat,
                                    const EllipseParam& e, const Vec2& p_tx,
                                    const Vec2& p_rx) {
    const Vec2 p = ellipse_point(e, nu);
    if (!((p - p_tx).squared_norm() > 0.0) || !((p - p_rx).squared_norm() > 0.0)) {
        return std::nullopt;
    }
    const AnchorAngles ang = anchor_angles(p_tx, p_rx, p);
    const double half_sum = 0.5 * (ang.theta_tx + ang.theta_rx);
    const double half_diff = 0.5 * (ang.theta_tx - ang.theta_rx);
    const double denom = 2.0 * std::cos(half_diff);
    if (denom == 0.0) return std::nullopt;
    double s = omega_hat / denom;
    if (std::abs(s) > 1.0 + 1e-12) return std::nullopt;
    s = std::clamp(s, -1.0, 1.0);
    return wrap_angle(std::asin(s) - half_sum);
}

double fraunhofer_distance(int m_count, double delta, double lambda) {
    const double aperture = static_cast<double>(m_count) * delta;
    return 2.0 * aperture * aperture / lambda;
}

}  // namespace risloc::geom
