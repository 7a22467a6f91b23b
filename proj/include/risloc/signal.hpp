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
#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "risloc/geometry.hpp"
#include "risloc/vec2.hpp"

namespace risloc::sig {

using cplx = std::complex<double>;

// Fixed physical and system parameters. Linear units throughout: meters,
// Hz, watts; angles in radians. dB/dBm conversions happen at config parse.
struct SystemConfig {
    double wavelength = 0.01;          // m
    double element_spacing = 0.005;    // m
    int num_elements = 64;             // M
    int num_subcarriers = 500;         // N_c
    int num_transmissions = 50;        // T
    double subcarrier_spacing = 120e3; // Hz
    double tx_power = 0.01;            // W
    double tx_gain = 2.0;              // linear
    double rx_gain = 2.0;              // linear
    double noise_variance = 1.585e-12; // W, per complex sample
    double noise_figure = 6.3096;      // linear (8 dB)
    double noise_psd = 3.981e-21;      // W/Hz (-174 dBm/Hz)
    int ifft_size = 4096;              // N_F
    Vec2 p_tx{0.0, 2.0};
    Vec2 p_rx{2.0, 2.0};
    double speed_of_light = 3.0e8;     // m/s

    // Throws ConfigError listing every violated invariant.
    void validate() const;
};

// Complex path gain rho * e^{j phi}.
struct ChannelGain {
    double rho = 0.0;  // > 0
    double phi = 0.0;  // [0, 2pi)

    cplx value() const { return std::polar(rho, phi); }
};

// Per-transmission phase profiles; column t holds the M unit-modulus
// coefficients applied during transmission t.
struct PhaseProfiles {
    Eigen::MatrixXcd gamma;  // M x T
    std::uint64_t seed = 0;
};

struct ObservationTruth {
    geom::RisPose pose;
    ChannelGain gain;
    double tau = 0.0;
};

// Received N_c x T matrix plus the profiles that produced it.
struct Observation {
    Eigen::MatrixXcd y;  // N_c x T, column per transmission
    PhaseProfiles profiles;
    std::optional<ObservationTruth> truth;
};

// Free-space two-bounce amplitude for an element of area (spacing/2)^2.
double channel_amplitude(const SystemConfig& cfg, const Vec2& p_ris);

// d(tau)[n] = e^{-j 2 pi tau n delta_f}, n = 0..n_subcarriers-1.
Eigen::VectorXcd delay_steering(double tau, int n_subcarriers, double delta_f);

// Element-wise product of the tx- and rx-side near-field responses,
// referenced to the surface center.
Eigen::VectorXcd nearfield_response(const geom::RisPose& pose,
                                    const SystemConfig& cfg);

// Plane-wave limit with centered element index:
// b[m] = e^{-j (2 pi / lambda) (m - (M-1)/2) delta omega}.
Eigen::VectorXcd ff_response(double omega, int m_count, double delta,
                             double lambda);

// Seeded i.i.d. uniform-phase profiles; identical seed gives an identical
// matrix bit for bit.
PhaseProfiles random_profiles(int m_count, int t_count, std::uint64_t seed);

// Noiseless mean with every model parameter free (tau not tied to the pose).
Eigen::MatrixXcd model_mean(const SystemConfig& cfg, double rho, double phi,
                            double tau, const geom::RisPose& pose,
                            const PhaseProfiles& profiles);

// Full forward model: gain and delay derived from the pose, plus optional
// circularly-symmetric Gaussian noise of per-sample variance noise_variance.
Observation synthesize_observation(const SystemConfig& cfg,
                                   const geom::RisPose& pose,
                                   const PhaseProfiles& profiles, double phi,
                                   std::optional<std::uint64_t> noise_seed);

}  // namespace risloc::sig
