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

#include "risloc/montecarlo.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "risloc/errors.hpp"
#include "risloc/rng.hpp"
#include "risloc/threading.hpp"

namespace risloc::mc {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct TrialSlot {
    bool ok = false;
    double pos_sq = 0.0;
    double alpha_sq = 0.0;
    double tau_sq = 0.0;
    double peb = 0.0;
    double oeb = 0.0;
    double teb = 0.0;
};

void require_strictly_increasing(const std::vector<double>& axis,
                                 const char* what) {
    if (axis.empty()) throw ConfigError(std::string(what) + ": axis is empty");
    for (std::size_t i = 1; i < axis.size(); ++i) {
        if (!(axis[i] > axis[i - 1])) {
            throw ConfigError(std::string(what) +
                              ": axis values must be strictly increasing");
        }
    }
}

}  // namespace

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

TrialStats run_trials(const sig::SystemConfig& cfg, const geom::RisPose& pose,
                      int n_trials, std::uint64_t master_seed,
                      const est::SearchSettings& s, const TrialOptions& opts) {
    if (n_trials < 1) throw ConfigError("trial count must be >= 1");
    cfg.validate();
    s.validate();

    const est::SideHint side =
        opts.use_side_hint ? est::side_of(pose.center, cfg.p_tx, cfg.p_rx)
                           : est::SideHint::kNone;

    std::vector<TrialSlot> slots(static_cast<std::size_t>(n_trials));
    parallel_for(static_cast<std::size_t>(n_trials), opts.threads, [&](std::size_t i) {
        TrialSlot& slot = slots[i];
        const std::uint64_t profile_seed =
            opts.fix_profiles
                ? derive_seed(master_seed, 0, seed_stream::kProfile)
                : derive_seed(master_seed, i, seed_stream::kProfile);
        const std::uint64_t noise_seed =
            derive_seed(master_seed, i, seed_stream::kNoise);
        const std::uint64_t phase_seed =
            derive_seed(master_seed, i, seed_stream::kPhase);

        const sig::PhaseProfiles profiles = sig::random_profiles(
            cfg.num_elements, cfg.num_transmissions, profile_seed);
        Rng phase_rng(phase_seed);
        const double phi = phase_rng.uniform(0.0, 2.0 * kPi);

        const sig::Observation obs = sig::synthesize_observation(
            cfg, pose, profiles, phi,
            opts.noiseless ? std::nullopt : std::optional<std::uint64_t>(noise_seed));

        const crb::CrbReport report = crb::crb_report(cfg, pose, profiles);
        slot.peb = report.peb;
        slot.oeb = report.oeb;
        slot.teb = report.teb;

        try {
            const est::RisEstimate estimate = est::estimate_pipeline(obs, cfg, s, side);
            const double tau_true = obs.truth->tau;
            slot.pos_sq = (estimate.refined_pose.center - pose.center).squared_norm();
            const double alpha_err =
                geom::wrap_angle(estimate.refined_pose.alpha - pose.alpha);
            slot.alpha_sq = alpha_err * alpha_err;
            const double tau_err = estimate.toa.tau_hat - tau_true;
            slot.tau_sq = tau_err * tau_err;
            slot.ok = true;
        } catch (const Error&) {
            slot.ok = false;
        }
    });

    TrialStats stats;
    stats.n_trials = n_trials;
    std::vector<double> pos_sq, alpha_sq, tau_sq, peb, oeb, teb;
    pos_sq.reserve(slots.size());
    for (const TrialSlot& slot : slots) {
        peb.push_back(slot.peb);
        oeb.push_back(slot.oeb);
        teb.push_back(slot.teb);
        if (!slot.ok) {
            ++stats.failures;
            continue;
        }
        pos_sq.push_back(slot.pos_sq);
        alpha_sq.push_back(slot.alpha_sq);
        tau_sq.push_back(slot.tau_sq);
    }
    const double n_ok = static_cast<double>(pos_sq.size());
    if (n_ok > 0.0) {
        stats.rmse_pos = std::sqrt(pairwise_sum(pos_sq) / n_ok);
        stats.rmse_alpha = std::sqrt(pairwise_sum(alpha_sq) / n_ok);
        stats.rmse_tau = std::sqrt(pairwise_sum(tau_sq) / n_ok);
    }
    const double n_all = static_cast<double>(n_trials);
    stats.peb = pairwise_sum(peb) / n_all;
    stats.oeb = pairwise_sum(oeb) / n_all;
    stats.teb = pairwise_sum(teb) / n_all;
    return stats;
}

std::vector<SweepRow> sweep_power(const sig::SystemConfig& cfg,
                                  const geom::RisPose& pose,
                                  const std::vector<double>& p_t_values_dbm,
                                  int n_trials, std::uint64_t seed,
                                  const est::SearchSettings& s,
                                  const TrialOptions& opts) {
    require_strictly_increasing(p_t_values_dbm, "power sweep");
    std::vector<SweepRow> rows;
    rows.reserve(p_t_values_dbm.size());
    for (double dbm : p_t_values_dbm) {
        sig::SystemConfig row_cfg = cfg;
        row_cfg.tx_power = dbm_to_watts(dbm);
        SweepRow row;
        row.axis_value = dbm;
        row.stats = run_trials(row_cfg, pose, n_trials, seed, s, opts);
        rows.push_back(row);
    }
    return rows;
}

std::vector<SweepRow> sweep_bandwidth(const sig::SystemConfig& cfg,
                                      const geom::RisPose& pose,
                                      const std::vector<int>& n_c_values,
                                      int n_trials, std::uint64_t seed,
                                      const est::SearchSettings& s,
                                      const TrialOptions& opts) {
    std::vector<double> axis(n_c_values.begin(), n_c_values.end());
    require_strictly_increasing(axis, "bandwidth sweep");
    std::vector<SweepRow> rows;
    rows.reserve(n_c_values.size());
    for (int n_c : n_c_values) {
        sig::SystemConfig row_cfg = cfg;
        row_cfg.num_subcarriers = n_c;
        if (n_c > row_cfg.ifft_size) {
            throw ConfigError("bandwidth sweep: subcarrier count exceeds IFFT size");
        }
        row_cfg.noise_variance = row_cfg.noise_figure * row_cfg.noise_psd *
                                 static_cast<double>(n_c) *
                                 row_cfg.subcarrier_spacing;
        SweepRow row;
        row.axis_value = static_cast<double>(n_c);
        row.stats = run_trials(row_cfg, pose, n_trials, seed, s, opts);
        rows.push_back(row);
    }
    return rows;
}

std::vector<SweepRow> sweep_ris_size(const sig::SystemConfig& cfg,
                                     const geom::RisPose& pose,
                                     const std::vector<int>& m_values,
                                     int n_trials, std::uint64_t seed,
                                     const est::SearchSettings& s,
                                     const TrialOptions& opts) {
    std::vector<double> axis(m_values.begin(), m_values.end());
    require_strictly_increasing(axis, "size sweep");
    std::vector<SweepRow> rows;
    rows.reserve(m_values.size());
    for (int m : m_values) {
        sig::SystemConfig row_cfg = cfg;
        row_cfg.num_elements = m;
        SweepRow row;
        row.axis_value = static_cast<double>(m);
        row.stats = run_trials(row_cfg, pose, n_trials, seed, s, opts);
        rows.push_back(row);
    }
    return rows;
}

ContourGrid contour_grid(const sig::SystemConfig& cfg, double alpha,
                         double x_min, double x_max, double y_min, double y_max,
                         int resolution, std::uint64_t profile_seed,
                         int threads) {
    if (resolution < 2) throw ConfigError("contour resolution must be >= 2");
    if (!(x_max > x_min) || !(y_max > y_min)) {
        throw ConfigError("contour ranges must be nonempty");
    }
    cfg.validate();

    ContourGrid grid;
    grid.alpha = alpha;
    grid.x_axis.resize(static_cast<std::size_t>(resolution));
    grid.y_axis.resize(static_cast<std::size_t>(resolution));
    for (int i = 0; i < resolution; ++i) {
        const double f = static_cast<double>(i) / static_cast<double>(resolution - 1);
        grid.x_axis[static_cast<std::size_t>(i)] = x_min + f * (x_max - x_min);
        grid.y_axis[static_cast<std::size_t>(i)] = y_min + f * (y_max - y_min);
    }
    const std::size_t n_cells = grid.x_axis.size() * grid.y_axis.size();
    grid.peb_db.assign(n_cells, kInf);
    grid.oeb_db.assign(n_cells, kInf);

    const sig::PhaseProfiles profiles = sig::random_profiles(
        cfg.num_elements, cfg.num_transmissions, profile_seed);

    const std::size_t nx = grid.x_axis.size();
    parallel_for(n_cells, threads, [&](std::size_t cell) {
        const std::size_t ix = cell % nx;
        const std::size_t iy = cell / nx;
        const Vec2 p{grid.x_axis[ix], grid.y_axis[iy]};
        if (!((p - cfg.p_tx).squared_norm() > 0.0) ||
            !((p - cfg.p_rx).squared_norm() > 0.0)) {
            return;  // anchor cell stays +inf
        }
        const crb::CrbReport report =
            crb::crb_report(cfg, geom::RisPose{p, alpha}, profiles);
        grid.peb_db[cell] = std::isfinite(report.peb)
                                ? 10.0 * std::log10(report.peb)
                                : kInf;
        grid.oeb_db[cell] = std::isfinite(report.oeb)
                                ? 10.0 * std::log10(report.oeb)
                                : kInf;
    });
    return grid;
}

}  // namespace risloc::mc
