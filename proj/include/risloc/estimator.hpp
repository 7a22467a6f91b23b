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

#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "risloc/signal.hpp"

namespace risloc::est {

using cplx = std::complex<double>;

// Grid resolutions and iteration caps for the line searches and the
// quasi-Newton refinement.
struct SearchSettings {
    int delta_grid = 64;       // TOA sub-bin grid points per IFFT bin
    int omega_grid = 1024;     // spatial-frequency grid over [-2, 2]
    int nu_grid = 720;         // ellipse-parameter grid over [0, 2pi)
    int refine_iters_1d = 40;  // golden-section iterations per 1D refinement
    int qn_max_iters = 200;
    double qn_grad_tol = 1e-9;

    void validate() const;
};

// The observed field is invariant under reflecting the pose across the
// anchor baseline, so the estimator cannot distinguish the two half-planes
// from data alone. A hint pins the deployment side; kNone returns whichever
// twin fits marginally better.
enum class SideHint { kNone, kPositive, kNegative };

// Side of the baseline a point lies on: sign of cross(p_rx - p_tx, p - p_tx).
SideHint side_of(const Vec2& p, const Vec2& p_tx, const Vec2& p_rx);

struct ToaEstimate {
    int k_coarse = 0;        // IFFT bin, 0 <= k < ifft_size
    double delta_fine = 0.0; // sub-bin correction, in [0, 1/(N_F delta_f)]
    double tau_hat = 0.0;    // k_coarse/(N_F delta_f) - delta_fine
};

struct OmegaEstimate {
    double omega_hat = 0.0;  // canonical representative in [-2, 2]
    cplx g_r_hat{0.0, 0.0};
    double residual = 0.0;   // normalized plane-wave fit residual
};

// One initialization candidate on the TOA ellipse.
struct NuCandidate {
    double nu = 0.0;
    geom::RisPose pose;
    double cost = 0.0;  // normalized data-fit residual
};

struct NuEstimate {
    double nu_hat = 0.0;
    geom::RisPose initial_pose;
    double cost = 0.0;
    // best-first; near-degenerate twins land here for the refinement stage
    std::vector<NuCandidate> candidates;
};

struct RefineResult {
    geom::RisPose pose;
    cplx g_r_hat{0.0, 0.0};
    double residual = 0.0;  // normalized maximum-likelihood cost
    bool converged = false;
    int iterations = 0;
};

struct RisEstimate {
    ToaEstimate toa;
    double omega_hat = 0.0;
    double nu_hat = 0.0;
    geom::RisPose initial_pose;
    geom::RisPose refined_pose;
    cplx g_r_hat{0.0, 0.0};
    bool converged = false;
    std::vector<std::pair<std::string, double>> cost_trace;
};

// Index of the IFFT row (zero-padded column transforms) with the largest
// energy across transmissions. Ties break toward the lowest index.
int coarse_toa(const sig::Observation& obs, const sig::SystemConfig& cfg);

// Sub-bin delay refinement via the delay-matched filter around the coarse
// bin. The reported bin may move up by one so that the fine correction stays
// nonnegative.
ToaEstimate refine_toa(const sig::Observation& obs, int k_coarse,
                       const sig::SystemConfig& cfg, const SearchSettings& s);

// Plane-wave fit of the delay-compensated, subcarrier-summed observation,
// followed by a local refit that also models the quadratic wavefront term.
// The curvature is a nuisance parameter; modeling it removes the bias the
// pure plane-wave fit picks up at short range. The fit is periodic in omega
// with period lambda/spacing, so the minimal-|omega| representative is
// returned; the ellipse stage re-expands the aliases.
OmegaEstimate estimate_omega(const sig::Observation& obs, double tau_hat,
                             const sig::SystemConfig& cfg,
                             const SearchSettings& s);

// Line search over the TOA ellipse. Each candidate position gets its
// orientation from the omega constraint (both arcsin branches, every omega
// alias), the feasible grid minima are polished, and the ranked candidates
// are kept so the caller can refine more than one basin.
NuEstimate estimate_nu(const sig::Observation& obs, double tau_hat,
                       double omega_hat, const sig::SystemConfig& cfg,
                       const SearchSettings& s,
                       SideHint side = SideHint::kNone);

// Quasi-Newton minimization of the maximum-likelihood cost over position and
// orientation, gain profiled out in closed form and the delay re-derived
// from the candidate position. Falls back to the initial pose if it scored
// better.
RefineResult refine_ml(const sig::Observation& obs,
                       const geom::RisPose& initial_pose,
                       const sig::SystemConfig& cfg, const SearchSettings& s);

// Full pipeline: TOA, spatial frequency, ellipse search, then quasi-Newton
// refinement of the leading candidates; the best refined fit wins.
RisEstimate estimate_pipeline(const sig::Observation& obs,
                              const sig::SystemConfig& cfg,
                              const SearchSettings& s,
                              SideHint side = SideHint::kNone);

}  // namespace risloc::est
