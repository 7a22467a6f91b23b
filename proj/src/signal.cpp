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

#include "risloc/signal.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "risloc/errors.hpp"
#include "risloc/rng.hpp"

namespace risloc::sig {

namespace {
constexpr double kPi = std::numbers::pi;

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }
}  // namespace

void SystemConfig::validate() const {
    std::ostringstream bad;
    auto complain = [&bad](const char* msg) { bad << "\n  - " << msg; };
    if (!(wavelength > 0.0)) complain("wavelength must be > 0");
    if (!(element_spacing > 0.0)) complain("element spacing must be > 0");
    if (num_elements < 1) complain("element count must be >= 1");
    if (num_subcarriers < 1) complain("subcarrier count must be >= 1");
    if (num_transmissions < 1) complain("transmission count must be >= 1");
    if (!(subcarrier_spacing > 0.0)) complain("subcarrier spacing must be > 0");
    if (!(tx_power > 0.0)) complain("tx power must be > 0");
    if (!(tx_gain > 0.0)) complain("tx gain must be > 0");
    if (!(rx_gain > 0.0)) complain("rx gain must be > 0");
    if (!(noise_variance > 0.0)) complain("noise variance must be > 0");
    if (!(noise_figure > 0.0)) complain("noise figure must be > 0");
    if (!(noise_psd > 0.0)) complain("noise PSD must be > 0");
    if (!is_power_of_two(ifft_size)) complain("IFFT size must be a power of two");
    if (ifft_size < num_subcarriers) complain("IFFT size must be >= subcarrier count");
    if (!(speed_of_light > 0.0)) complain("speed of light must be > 0");
    if (!std::isfinite(p_tx.x) || !std::isfinite(p_tx.y)) complain("tx position must be finite");
    if (!std::isfinite(p_rx.x) || !std::isfinite(p_rx.y)) complain("rx position must be finite");
    const std::string msg = bad.str();
    if (!msg.empty()) throw ConfigError("invalid system configuration:" + msg);
}

double channel_amplitude(const SystemConfig& cfg, const Vec2& p_ris) {
    const double dist_tx = (cfg.p_tx - p_ris).norm();
    const double dist_rx = (cfg.p_rx - p_ris).norm();
    if (!(dist_tx > 0.0) || !(dist_rx > 0.0)) {
        throw DegenerateGeometryError("surface position coincides with an anchor");
    }
    const double area = cfg.element_spacing * cfg.element_spacing / 4.0;
    const double num = cfg.tx_gain * cfg.rx_gain * area * cfg.wavelength *
                       cfg.wavelength / (64.0 * kPi * kPi * kPi);
    return std::sqrt(num) / (dist_tx * dist_rx);
}

Eigen::VectorXcd delay_steering(double tau, int n_subcarriers, double delta_f) {
    Eigen::VectorXcd d(n_subcarriers);
    const double step = -2.0 * kPi * tau * delta_f;
    for (int n = 0; n < n_subcarriers; ++n) {
        d[n] = std::polar(1.0, step * static_cast<double>(n));
    }
    return d;
}

Eigen::VectorXcd nearfield_response(const geom::RisPose& pose,
                                    const SystemConfig& cfg) {
    const double dist_tx = (cfg.p_tx - pose.center).norm();
    const double dist_rx = (cfg.p_rx - pose.center).norm();
    if (!(dist_tx > 0.0) || !(dist_rx > 0.0)) {
        throw DegenerateGeometryError("surface position coincides with an anchor");
    }
    const auto elems =
        geom::element_positions(pose, cfg.element_spacing, cfg.num_elements);
    const double k = 2.0 * kPi / cfg.wavelength;
    Eigen::VectorXcd b(cfg.num_elements);
    for (int m = 0; m < cfg.num_elements; ++m) {
        const double excess = ((elems[m] - cfg.p_tx).norm() - dist_tx) +
                              ((elems[m] - cfg.p_rx).norm() - dist_rx);
        b[m] = std::polar(1.0, -k * excess);
    }
    return b;
}

Eigen::VectorXcd ff_response(double omega, int m_count, double delta,
                             double lambda) {
    Eigen::VectorXcd b(m_count);
    const double k = 2.0 * kPi / lambda;
    const double center = 0.5 * static_cast<double>(m_count - 1);
    for (int m = 0; m < m_count; ++m) {
        const double offset = (static_cast<double>(m) - center) * delta;
        b[m] = std::polar(1.0, -k * offset * omega);
    }
    return b;
}

PhaseProfiles random_profiles(int m_count, int t_count, std::uint64_t seed) {
    PhaseProfiles p;
    p.seed = seed;
    p.gamma.resize(m_count, t_count);
    Rng rng(seed);
    for (int t = 0; t < t_count; ++t) {
        for (int m = 0; m < m_count; ++m) {
            p.gamma(m, t) = std::polar(1.0, rng.uniform(0.0, 2.0 * kPi));
        }
    }
    return p;
}

Eigen::MatrixXcd model_mean(const SystemConfig& cfg, double rho, double phi,
                            double tau, const geom::RisPose& pose,
                            const PhaseProfiles& profiles) {
    const Eigen::VectorXcd b = nearfield_response(pose, cfg);
    const Eigen::VectorXcd d =
        delay_steering(tau, cfg.num_subcarriers, cfg.subcarrier_spacing);
    const Eigen::RowVectorXcd row = (profiles.gamma.transpose() * b).transpose();
    const cplx scale = std::polar(rho, phi) * std::sqrt(cfg.tx_power);
    return scale * (d * row);
}

Observation synthesize_observation(const SystemConfig& cfg,
                                   const geom::RisPose& pose,
                                   const PhaseProfiles& profiles, double phi,
                                   std::optional<std::uint64_t> noise_seed) {
    Observation obs;
    obs.profiles = profiles;
    const double rho = channel_amplitude(cfg, pose.center);
    const double tau =
        geom::path_delay(cfg.p_tx, cfg.p_rx, pose.center, cfg.speed_of_light);
    obs.y = model_mean(cfg, rho, phi, tau, pose, profiles);
    if (noise_seed) {
        Rng rng(*noise_seed);
        const double scale = std::sqrt(cfg.noise_variance / 2.0);
        for (int t = 0; t < obs.y.cols(); ++t) {
            for (int n = 0; n < obs.y.rows(); ++n) {
                obs.y(n, t) += cplx{scale * rng.gaussian(), scale * rng.gaussian()};
            }
        }
    }
    obs.truth = ObservationTruth{pose, ChannelGain{rho, phi}, tau};
    return obs;
}

}  // namespace risloc::sig
