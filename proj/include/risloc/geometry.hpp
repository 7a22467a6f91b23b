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
#include <optional>
#include <vector>

#include "risloc/vec2.hpp"

namespace risloc::geom {

using Mat2 = Eigen::Matrix2d;

// Surface pose: center position plus in-plane orientation.
//
// Angle conventions used throughout:
//  * anchor bearings are measured from the +y boresight,
//    theta = atan2(dy, dx) - pi/2, wrapped to (-pi, pi];
//  * alpha turns the array axis clockwise from +x, axis(alpha) =
//    (cos alpha, -sin alpha). With these two choices the far-field spatial
//    frequency of the two-hop response is exactly
//    omega = sin(theta_tx + alpha) + sin(theta_rx + alpha).
struct RisPose {
    Vec2 center;
    double alpha = 0.0;  // radians, wrapped to (-pi, pi]
};

// TOA ellipse with anchors as foci: p(nu) = R_beta * (a cos nu, b sin nu) + c.
struct EllipseParam {
    Vec2 center;            // midpoint of the anchors
    double beta = 0.0;      // angle of the anchor baseline against +x
    double semi_major = 0.0;  // c*tau/2
    double semi_minor = 0.0;
};

struct AnchorAngles {
    double theta_tx = 0.0;
    double theta_rx = 0.0;
};

// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

// Counterclockwise 2D rotation by alpha.
Mat2 rotation_matrix(double alpha);

// d/dalpha of rotation_matrix.
Mat2 rotation_matrix_deriv(double alpha);

// Unit direction of the array axis for a given orientation, and its
// derivative in alpha. See the convention note on RisPose.
Vec2 array_axis(double alpha);
Vec2 array_axis_deriv(double alpha);

// Global positions of the M elements, spacing delta, centered on the pose.
std::vector<Vec2> element_positions(const RisPose& pose, double delta, int m_count);

// Two-hop propagation delay tx -> ris -> rx. Throws DegenerateGeometryError
// if the surface coincides with an anchor.
double path_delay(const Vec2& p_tx, const Vec2& p_rx, const Vec2& p_ris, double c);

// Boresight-referenced bearings of both anchors as seen from p_ris.
AnchorAngles anchor_angles(const Vec2& p_tx, const Vec2& p_rx, const Vec2& p_ris);

// omega = sin(theta_tx + alpha) + sin(theta_rx + alpha), in [-2, 2].
double omega_of(double theta_tx, double theta_rx, double alpha);

// Ellipse of all positions consistent with a TOA. Throws InfeasibleToaError
// when c*tau does not exceed the anchor separation.
EllipseParam ellipse_from_toa(const Vec2& p_tx, const Vec2& p_rx, double tau_hat,
                              double c);

Vec2 ellipse_point(const EllipseParam& e, double nu);

// Orientation that reproduces omega_hat at the ellipse point nu (principal
// arcsin branch). Empty when |omega_hat / (2 cos theta-)| exceeds 1 beyond a
// 1e-12 clamp band, or the half-difference angle hits pi/2.
std::optional<double> alpha_from_nu(double nu, double omega_hat,
                                    const EllipseParam& e, const Vec2& p_tx,
                                    const Vec2& p_rx);

// 2 * (M*delta)^2 / lambda.
double fraunhofer_distance(int m_count, double delta, double lambda);

}  // namespace risloc::geom
