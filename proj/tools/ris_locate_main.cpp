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

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "risloc/errors.hpp"
#include "risloc/io.hpp"
#include "risloc/montecarlo.hpp"
#include "risloc/rng.hpp"

namespace {

using namespace risloc;

struct GlobalArgs {
    std::string config_path;
    std::string out_path;
    std::uint64_t seed = 1;
    int threads = 0;  // 0: use RIS_LOCATE_THREADS or 1
};

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("RIS_LOCATE_THREADS")) {
        const int parsed = std::atoi(env);
        if (parsed > 0) return parsed;
    }
    return 1;
}

io::RunManifest make_manifest(const std::string& command, const GlobalArgs& args,
                              const io::ParsedConfig& cfg, int threads) {
    io::RunManifest m;
    m.command = command;
    m.config_path = args.config_path;
    m.output_path = args.out_path;
    m.seed = args.seed;
    m.threads = threads;
    m.resolved_config = io::serialize_config(cfg);
    return m;
}

std::vector<std::string> trial_stat_columns() {
    return {"n_trials", "failures", "rmse_pos_m", "rmse_alpha_rad",
            "rmse_tau_s", "peb_m",    "oeb_rad",    "teb_s"};
}

std::vector<double> trial_stat_values(const mc::TrialStats& st) {
    return {static_cast<double>(st.n_trials),
            static_cast<double>(st.failures),
            st.rmse_pos,
            st.rmse_alpha,
            st.rmse_tau,
            st.peb,
            st.oeb,
            st.teb};
}

int run_bounds(const GlobalArgs& args, const io::ParsedConfig& cfg,
               std::uint64_t profile_seed, int threads) {
    const sig::PhaseProfiles profiles = sig::random_profiles(
        cfg.system.num_elements, cfg.system.num_transmissions, profile_seed);
    const crb::CrbReport report = crb::crb_report(cfg.system, cfg.pose, profiles);

    io::CsvWriter csv(args.out_path,
                      {"p_t_dbm", "profile_seed", "teb_s", "peb_m", "oeb_rad",
                       "cond_eta", "cond_zeta"});
    csv.row({mc::watts_to_dbm(cfg.system.tx_power),
             static_cast<double>(profile_seed), report.teb, report.peb,
             report.oeb, report.cond_eta, report.cond_zeta});
    csv.write();

    io::RunManifest m = make_manifest("bounds", args, cfg, threads);
    m.flags["profile_seed"] = profile_seed;
    m.write(args.out_path);
    std::cout << "teb_s=" << io::format_double(report.teb)
              << " peb_m=" << io::format_double(report.peb)
              << " oeb_rad=" << io::format_double(report.oeb) << "\n";
    return 0;
}

int run_estimate(const GlobalArgs& args, const io::ParsedConfig& cfg,
                 bool noiseless, int threads) {
    const std::uint64_t profile_seed =
        derive_seed(args.seed, 0, seed_stream::kProfile);
    const std::uint64_t noise_seed = derive_seed(args.seed, 0, seed_stream::kNoise);
    const std::uint64_t phase_seed = derive_seed(args.seed, 0, seed_stream::kPhase);
    const sig::PhaseProfiles profiles = sig::random_profiles(
        cfg.system.num_elements, cfg.system.num_transmissions, profile_seed);
    Rng phase_rng(phase_seed);
    const double phi = phase_rng.uniform(0.0, 2.0 * std::numbers::pi);
    const sig::Observation obs = sig::synthesize_observation(
        cfg.system, cfg.pose, profiles, phi,
        noiseless ? std::nullopt : std::optional<std::uint64_t>(noise_seed));

    const est::RisEstimate estimate = est::estimate_pipeline(
        obs, cfg.system, cfg.search, cfg.resolve_side_hint());

    const auto& truth = *obs.truth;
    double cost_toa = 0.0, cost_omega = 0.0, cost_nu = 0.0, cost_refine = 0.0;
    for (const auto& [stage, value] : estimate.cost_trace) {
        if (stage == "toa") cost_toa = value;
        if (stage == "omega") cost_omega = value;
        if (stage == "nu") cost_nu = value;
        if (stage == "refine") cost_refine = value;
    }

    io::CsvWriter csv(
        args.out_path,
        {"noiseless",     "tau_true_s",    "tau_hat_s",     "k_coarse",
         "delta_fine_s",  "omega_hat",     "nu_hat_rad",    "px_init_m",
         "py_init_m",     "alpha_init_rad", "px_hat_m",     "py_hat_m",
         "alpha_hat_rad", "px_true_m",     "py_true_m",     "alpha_true_rad",
         "pos_err_m",     "alpha_err_rad", "tau_err_s",     "g_r_re",
         "g_r_im",        "cost_toa",      "cost_omega",    "cost_nu",
         "cost_refine"});
    csv.row({noiseless ? 1.0 : 0.0,
             truth.tau,
             estimate.toa.tau_hat,
             static_cast<double>(estimate.toa.k_coarse),
             estimate.toa.delta_fine,
             estimate.omega_hat,
             estimate.nu_hat,
             estimate.initial_pose.center.x,
             estimate.initial_pose.center.y,
             estimate.initial_pose.alpha,
             estimate.refined_pose.center.x,
             estimate.refined_pose.center.y,
             estimate.refined_pose.alpha,
             cfg.pose.center.x,
             cfg.pose.center.y,
             cfg.pose.alpha,
             (estimate.refined_pose.center - cfg.pose.center).norm(),
             std::abs(geom::wrap_angle(estimate.refined_pose.alpha - cfg.pose.alpha)),
             estimate.toa.tau_hat - truth.tau,
             estimate.g_r_hat.real(),
             estimate.g_r_hat.imag(),
             cost_toa,
             cost_omega,
             cost_nu,
             cost_refine});
    csv.write();

    io::RunManifest m = make_manifest("estimate", args, cfg, threads);
    m.flags["noiseless"] = noiseless;
    m.write(args.out_path);
    std::cout << "pos_err_m="
              << io::format_double(
                     (estimate.refined_pose.center - cfg.pose.center).norm())
              << " alpha_err_rad="
              << io::format_double(std::abs(geom::wrap_angle(
                     estimate.refined_pose.alpha - cfg.pose.alpha)))
              << "\n";
    return 0;
}

int run_trials_cmd(const GlobalArgs& args, const io::ParsedConfig& cfg, int n,
                   bool noiseless, bool fix_profiles, int threads) {
    mc::TrialOptions opts;
    opts.noiseless = noiseless;
    opts.fix_profiles = fix_profiles;
    opts.threads = threads;
    opts.use_side_hint = cfg.side_hint != io::SideHintMode::kNone;
    const mc::TrialStats stats =
        mc::run_trials(cfg.system, cfg.pose, n, args.seed, cfg.search, opts);

    io::CsvWriter csv(args.out_path, trial_stat_columns());
    csv.row(trial_stat_values(stats));
    csv.write();

    io::RunManifest m = make_manifest("trials", args, cfg, threads);
    m.flags["n"] = n;
    m.flags["noiseless"] = noiseless;
    m.flags["fix_profiles"] = fix_profiles;
    m.write(args.out_path);
    std::cout << "rmse_pos_m=" << io::format_double(stats.rmse_pos)
              << " peb_m=" << io::format_double(stats.peb)
              << " failures=" << stats.failures << "\n";
    return 0;
}

int write_sweep(const GlobalArgs& args, const io::ParsedConfig& cfg,
                const std::string& command, const std::string& axis_column,
                const std::vector<mc::SweepRow>& rows,
                const nlohmann::json& flags, int threads,
                const sig::SystemConfig* base_for_noise = nullptr) {
    std::vector<std::string> header{axis_column};
    if (command == "sweep-bw") {
        header.push_back("bandwidth_hz");
        header.push_back("noise_variance_w");
    }
    for (const auto& col : trial_stat_columns()) header.push_back(col);

    io::CsvWriter csv(args.out_path, header);
    for (const auto& row : rows) {
        std::vector<double> values{row.axis_value};
        if (command == "sweep-bw") {
            values.push_back(row.axis_value * base_for_noise->subcarrier_spacing);
            values.push_back(base_for_noise->noise_figure *
                             base_for_noise->noise_psd * row.axis_value *
                             base_for_noise->subcarrier_spacing);
        }
        for (double v : trial_stat_values(row.stats)) values.push_back(v);
        csv.row(values);
    }
    csv.write();

    io::RunManifest m = make_manifest(command, args, cfg, threads);
    m.flags = flags;
    m.write(args.out_path);
    std::cout << command << ": " << rows.size() << " rows -> " << args.out_path
              << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Near-field surface localization toolkit"};
    app.require_subcommand(1);

    GlobalArgs args;
    int threads_flag = 0;

    auto add_common = [&](CLI::App* sub, const std::string& default_out) {
        sub->add_option("--config", args.config_path, "JSON config path")
            ->required();
        sub->add_option("--out", args.out_path, "output CSV path")
            ->default_val(default_out);
        sub->add_option("--seed", args.seed, "master seed")->default_val(1);
        sub->add_option("--threads", threads_flag,
                        "worker threads (default: RIS_LOCATE_THREADS or 1)")
            ->default_val(0);
    };

    // bounds
    auto* bounds_cmd = app.add_subcommand("bounds", "error bounds at one pose");
    std::uint64_t profile_seed_flag = 0;
    bool profile_seed_set = false;
    add_common(bounds_cmd, "bounds.csv");
    bounds_cmd
        ->add_option("--profile-seed", profile_seed_flag,
                     "phase-profile seed (default: derived from --seed)")
        ->each([&](const std::string&) { profile_seed_set = true; });

    // estimate
    auto* estimate_cmd =
        app.add_subcommand("estimate", "one synthesized trial end to end");
    bool est_noiseless = false;
    add_common(estimate_cmd, "estimate.csv");
    estimate_cmd->add_flag("--noiseless", est_noiseless, "disable noise");

    // trials
    auto* trials_cmd = app.add_subcommand("trials", "Monte-Carlo RMSE vs bounds");
    int trials_n = 100;
    bool trials_noiseless = false;
    bool trials_fix_profiles = false;
    add_common(trials_cmd, "trials.csv");
    trials_cmd->add_option("--n", trials_n, "trial count")->default_val(100);
    trials_cmd->add_flag("--noiseless", trials_noiseless, "disable noise");
    trials_cmd->add_flag("--fix-profiles", trials_fix_profiles,
                         "reuse one profile across trials");

    // sweep-power
    auto* sweep_power_cmd =
        app.add_subcommand("sweep-power", "RMSE/bounds vs transmit power");
    double sp_from = -20.0, sp_to = 20.0, sp_step = 5.0;
    int sp_n = 100;
    add_common(sweep_power_cmd, "sweep_power.csv");
    sweep_power_cmd->add_option("--from", sp_from, "start dBm")->default_val(-20.0);
    sweep_power_cmd->add_option("--to", sp_to, "end dBm")->default_val(20.0);
    sweep_power_cmd->add_option("--step", sp_step, "step dB")->default_val(5.0);
    sweep_power_cmd->add_option("--n", sp_n, "trials per row")->default_val(100);

    // sweep-bw
    auto* sweep_bw_cmd =
        app.add_subcommand("sweep-bw", "RMSE/bounds vs subcarrier count");
    std::vector<int> bw_values{125, 250, 500, 1000};
    int bw_n = 100;
    add_common(sweep_bw_cmd, "sweep_bw.csv");
    sweep_bw_cmd->add_option("--n-c", bw_values, "subcarrier counts");
    sweep_bw_cmd->add_option("--n", bw_n, "trials per row")->default_val(100);

    // sweep-size
    auto* sweep_size_cmd =
        app.add_subcommand("sweep-size", "RMSE/bounds vs element count");
    std::vector<int> size_values{16, 32, 64, 128};
    int size_n = 100;
    add_common(sweep_size_cmd, "sweep_size.csv");
    sweep_size_cmd->add_option("--m", size_values, "element counts");
    sweep_size_cmd->add_option("--n", size_n, "trials per row")->default_val(100);

    // contour
    auto* contour_cmd =
        app.add_subcommand("contour", "bound maps vs surface position");
    double cx_min = -6.0, cx_max = 6.0, cy_min = -6.0, cy_max = 6.0;
    int c_res = 41;
    double c_alpha = 0.0;
    std::uint64_t c_profile_seed = 0;
    bool c_profile_seed_set = false;
    add_common(contour_cmd, "contour.csv");
    contour_cmd->add_option("--x-min", cx_min)->default_val(-6.0);
    contour_cmd->add_option("--x-max", cx_max)->default_val(6.0);
    contour_cmd->add_option("--y-min", cy_min)->default_val(-6.0);
    contour_cmd->add_option("--y-max", cy_max)->default_val(6.0);
    contour_cmd->add_option("--res", c_res, "grid points per axis")
        ->default_val(41);
    contour_cmd->add_option("--alpha-rad", c_alpha, "fixed orientation")
        ->default_val(0.0);
    contour_cmd
        ->add_option("--profile-seed", c_profile_seed,
                     "phase-profile seed (default: derived from --seed)")
        ->each([&](const std::string&) { c_profile_seed_set = true; });

    CLI11_PARSE(app, argc, argv);

    try {
        const io::ParsedConfig cfg = io::parse_config(args.config_path);
        const int threads = resolve_threads(threads_flag);

        if (bounds_cmd->parsed()) {
            const std::uint64_t pseed =
                profile_seed_set
                    ? profile_seed_flag
                    : derive_seed(args.seed, 0, seed_stream::kProfile);
            return run_bounds(args, cfg, pseed, threads);
        }
        if (estimate_cmd->parsed()) {
            return run_estimate(args, cfg, est_noiseless, threads);
        }
        if (trials_cmd->parsed()) {
            return run_trials_cmd(args, cfg, trials_n, trials_noiseless,
                                  trials_fix_profiles, threads);
        }

        mc::TrialOptions opts;
        opts.threads = threads;
        opts.use_side_hint = cfg.side_hint != io::SideHintMode::kNone;

        if (sweep_power_cmd->parsed()) {
            std::vector<double> axis;
            for (double v = sp_from; v <= sp_to + 1e-9; v += sp_step) {
                axis.push_back(v);
            }
            const auto rows = mc::sweep_power(cfg.system, cfg.pose, axis, sp_n,
                                              args.seed, cfg.search, opts);
            nlohmann::json flags{{"from", sp_from},
                                 {"to", sp_to},
                                 {"step", sp_step},
                                 {"n", sp_n}};
            return write_sweep(args, cfg, "sweep-power", "p_t_dbm", rows, flags,
                               threads);
        }
        if (sweep_bw_cmd->parsed()) {
            const auto rows = mc::sweep_bandwidth(cfg.system, cfg.pose, bw_values,
                                                  bw_n, args.seed, cfg.search,
                                                  opts);
            nlohmann::json flags{{"n_c", bw_values}, {"n", bw_n}};
            return write_sweep(args, cfg, "sweep-bw", "n_c", rows, flags, threads,
                               &cfg.system);
        }
        if (sweep_size_cmd->parsed()) {
            const auto rows = mc::sweep_ris_size(cfg.system, cfg.pose, size_values,
                                                 size_n, args.seed, cfg.search,
                                                 opts);
            nlohmann::json flags{{"m", size_values}, {"n", size_n}};
            return write_sweep(args, cfg, "sweep-size", "m_elements", rows, flags,
                               threads);
        }
        if (contour_cmd->parsed()) {
            const std::uint64_t pseed =
                c_profile_seed_set
                    ? c_profile_seed
                    : derive_seed(args.seed, 0, seed_stream::kProfile);
            const mc::ContourGrid grid =
                mc::contour_grid(cfg.system, c_alpha, cx_min, cx_max, cy_min,
                                 cy_max, c_res, pseed, threads);
            io::CsvWriter csv(args.out_path, {"x_m", "y_m", "peb_db", "oeb_db"});
            for (std::size_t iy = 0; iy < grid.y_axis.size(); ++iy) {
                for (std::size_t ix = 0; ix < grid.x_axis.size(); ++ix) {
                    const std::size_t cell = iy * grid.x_axis.size() + ix;
                    csv.row({grid.x_axis[ix], grid.y_axis[iy], grid.peb_db[cell],
                             grid.oeb_db[cell]});
                }
            }
            csv.write();
            io::RunManifest m = make_manifest("contour", args, cfg, threads);
            m.flags = nlohmann::json{{"x_min", cx_min},   {"x_max", cx_max},
                                     {"y_min", cy_min},   {"y_max", cy_max},
                                     {"res", c_res},      {"alpha_rad", c_alpha},
                                     {"profile_seed", pseed}};
            m.write(args.out_path);
            std::cout << "contour: " << grid.x_axis.size() * grid.y_axis.size()
                      << " cells -> " << args.out_path << "\n";
            return 0;
        }
        std::cerr << "unknown command\n";
        return 2;
    } catch (const risloc::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
}
