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

#include <cstdint>
#include <vector>

#include "risloc/crb.hpp"
#include "risloc/estimator.hpp"
#include "risloc/signal.hpp"

namespace risloc::mc {

struct TrialOptions {
    bool noiseless = false;
    // keep one profile across trials (contour-style studies) instead of
    // redrawing per trial
    bool fix_profiles = false;
    int threads = 1;
    // pin the estimator to the half-plane the configured pose lies in;
    // the reflection twin is indistinguishable from data alone
    bool use_side_hint = true;
};

struct TrialStats {
    int n_trials = 0;
    int failures = 0;
    double rmse_pos = 0.0;    // m
    double rmse_alpha = 0.0;  // rad
    double rmse_tau = 0.0;    // s
    double peb = 0.0;         // m, averaged over the per-trial profiles
    double oeb = 0.0;         // rad
    double teb = 0.0;         // s
};

struct SweepRow {
    double axis_value = 0.0;
    TrialStats stats;
};

struct ContourGrid {
    std::vector<double> x_axis;  // m
    std::vector<double> y_axis;  // m
    // row-major [iy * nx + ix]; +inf marks singular or excluded cells
    std::vector<double> peb_db;
    std::vector<double> oeb_db;
    double alpha = 0.0;
};

// Runs seeded estimation trials against one true pose. Per-trial seeds are
// derived from master_seed; trials whose pipeline throws a toolkit error are
// counted as failures and excluded from the RMS averages, which use pairwise
// summation so results do not depend on thread scheduling.
TrialStats run_trials(const sig::SystemConfig& cfg, const geom::RisPose& pose,
                      int n_trials, std::uint64_t master_seed,
                      const est::SearchSettings& s,
                      const TrialOptions& opts = {});

// One run_trials row per transmit power (dBm axis, strictly increasing).
std::vector<SweepRow> sweep_power(const sig::SystemConfig& cfg,
                                  const geom::RisPose& pose,
                                  const std::vector<double>& p_t_values_dbm,
                                  int n_trials, std::uint64_t seed,
                                  const est::SearchSettings& s,
                                  const TrialOptions& opts = {});

// One row per subcarrier count; the noise variance is re-derived from the
// PSD model (noise_figure * noise_psd * N_c * delta_f) for every row.
std::vector<SweepRow> sweep_bandwidth(const sig::SystemConfig& cfg,
                                      const geom::RisPose& pose,
                                      const std::vector<int>& n_c_values,
                                      int n_trials, std::uint64_t seed,
                                      const est::SearchSettings& s,
                                      const TrialOptions& opts = {});

// One row per element count.
std::vector<SweepRow> sweep_ris_size(const sig::SystemConfig& cfg,
                                     const geom::RisPose& pose,
                                     const std::vector<int>& m_values,
                                     int n_trials, std::uint64_t seed,
                                     const est::SearchSettings& s,
                                     const TrialOptions& opts = {});

// Bound maps over candidate surface positions at a fixed orientation with
// one fixed profile. Cells at an anchor or with a singular information
// matrix record +inf.
ContourGrid contour_grid(const sig::SystemConfig& cfg, double alpha,
                         double x_min, double x_max, double y_min, double y_max,
                         int resolution, std::uint64_t profile_seed,
                         int threads = 1);

// Helpers shared with the CLI.
double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);
double db_to_linear(double db);

}  // namespace risloc::mc
