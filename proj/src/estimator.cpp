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

#include "risloc/estimator.hpp"

#include <Eigen/Cholesky>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "risloc/errors.hpp"
#include "risloc/kernels.hpp"

namespace risloc::est {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Golden-section search for the minimum of fn on [lo, hi].
template <typename Fn>
double golden_min(Fn&& fn, double lo, double hi, int iters) {
    constexpr double kRatio = 0.6180339887498949;
    double x1 = hi - kRatio * (hi - lo);
    double x2 = lo + kRatio * (hi - lo);
    double f1 = fn(x1);
    double f2 = fn(x2);
    for (int i = 0; i < iters; ++i) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - kRatio * (hi - lo);
            f1 = fn(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + kRatio * (hi - lo);
            f2 = fn(x2);
        }
    }
    return 0.5 * (lo + hi);
}

template <typename Fn>
double golden_max(Fn&& fn, double lo, double hi, int iters) {
    return golden_min([&fn](double x) { return -fn(x); }, lo, hi, iters);
}

// Energy of the delay-matched filter d(tau)^H Y across transmissions.
double matched_filter_energy(const Eigen::MatrixXcd& y, double tau,
                             double delta_f) {
    const int n_sub = static_cast<int>(y.rows());
    const Eigen::VectorXcd d = sig::delay_steering(tau, n_sub, delta_f);
    double acc = 0.0;
    for (int t = 0; t < y.cols(); ++t) {
        const cplx s = kernels::cdotc(d.data(), y.col(t).data(),
                                      static_cast<std::size_t>(n_sub));
        acc += std::norm(s);
    }
    return acc;
}

// Delay-compensated observation summed over subcarriers, one entry per
// transmission.
Eigen::VectorXcd compensated_sum(const Eigen::MatrixXcd& y, double tau,
                                 double delta_f) {
    const int n_sub = static_cast<int>(y.rows());
    const Eigen::VectorXcd d = sig::delay_steering(tau, n_sub, delta_f);
    Eigen::VectorXcd out(y.cols());
    for (int t = 0; t < y.cols(); ++t) {
        out[t] = kernels::cdotc(d.data(), y.col(t).data(),
                                static_cast<std::size_t>(n_sub));
    }
    return out;
}

// Aliases of omega within [-2, 2]; the fit is exactly periodic with period
// lambda/spacing because the alias shift is a per-element global phase.
std::vector<double> omega_aliases(double omega, double period) {
    std::vector<double> out;
    const int kmin = static_cast<int>(std::floor((-2.0 - omega) / period)) - 1;
    const int kmax = static_cast<int>(std::ceil((2.0 - omega) / period)) + 1;
    for (int k = kmin; k <= kmax; ++k) {
        const double cand = omega + k * period;
        if (cand >= -2.0 - 1e-9 && cand <= 2.0 + 1e-9) {
            out.push_back(std::clamp(cand, -2.0, 2.0));
        }
    }
    return out;
}

// Shared context for the ellipse-search and refinement costs.
struct FitContext {
    const sig::SystemConfig* cfg = nullptr;
    const Eigen::MatrixXcd* y = nullptr;
    const Eigen::MatrixXcd* gamma = nullptr;
    double y_norm2 = 0.0;
    // delay-matched per-transmission statistics at the fixed tau_hat
    Eigen::VectorXcd zeta;      // d(tau)^H Y
    Eigen::VectorXcd col_sums;  // Y^T 1
    cplx d_sum{0.0, 0.0};       // 1^T d(tau)
};

FitContext make_context(const sig::Observation& obs,
                        const sig::SystemConfig& cfg, double tau_hat) {
    FitContext ctx;
    ctx.cfg = &cfg;
    ctx.y = &obs.y;
    ctx.gamma = &obs.profiles.gamma;
    ctx.y_norm2 = kernels::cnorm2(obs.y.data(),
                                  static_cast<std::size_t>(obs.y.size()));
    ctx.zeta = compensated_sum(obs.y, tau_hat, cfg.subcarrier_spacing);
    ctx.col_sums = obs.y.colwise().sum();
    const Eigen::VectorXcd d = sig::delay_steering(
        tau_hat, cfg.num_subcarriers, cfg.subcarrier_spacing);
    ctx.d_sum = d.sum();
    return ctx;
}

Eigen::VectorXcd profile_projection(const FitContext& ctx,
                                    const Eigen::VectorXcd& b) {
    const int t_count = static_cast<int>(ctx.gamma->cols());
    Eigen::VectorXcd q(t_count);
    for (int t = 0; t < t_count; ++t) {
        q[t] = kernels::cdotu(ctx.gamma->col(t).data(), b.data(),
                              static_cast<std::size_t>(b.size()));
    }
    return q;
}

// Normalized fit residual of the model g sqrt(P) d(tau) b^T Gamma with the
// gain estimated from the subcarrier-summed statistics.
double pose_fit_cost(const FitContext& ctx, const geom::RisPose& pose) {
    const Eigen::VectorXcd b = sig::nearfield_response(pose, *ctx.cfg);
    const Eigen::VectorXcd q = profile_projection(ctx, b);
    const std::size_t t_count = static_cast<std::size_t>(q.size());
    // h = d_sum * q; gain = h^H y_sum / (sqrt(P) |h|^2)
    const double h_norm2 = std::norm(ctx.d_sum) *
                           kernels::cnorm2(q.data(), t_count);
    if (!(h_norm2 > 0.0)) return kInf;
    const cplx hy = std::conj(ctx.d_sum) *
                    kernels::cdotc(q.data(), ctx.col_sums.data(), t_count);
    const double sqrt_p = std::sqrt(ctx.cfg->tx_power);
    const cplx scaled_gain = hy / h_norm2;  // g * sqrt(P), the LS gain
    (void)sqrt_p;
    const cplx m1 = kernels::cdotc(q.data(), ctx.zeta.data(), t_count);
    const double n_sub = static_cast<double>(ctx.cfg->num_subcarriers);
    const double cost = ctx.y_norm2 - 2.0 * std::real(std::conj(scaled_gain) * m1) +
                        std::norm(scaled_gain) * n_sub *
                            kernels::cnorm2(q.data(), t_count);
    return cost / ctx.y_norm2;
}

// Exact profile of the maximum-likelihood cost over the complex gain, with
// the delay re-derived from the candidate position.
struct MlCost {
    double cost = kInf;
    cplx g_r{0.0, 0.0};
};

MlCost ml_profile_cost(const sig::Observation& obs, const sig::SystemConfig& cfg,
                       double y_norm2, const geom::RisPose& pose) {
    MlCost out;
    double tau;
    try {
        tau = geom::path_delay(cfg.p_tx, cfg.p_rx, pose.center, cfg.speed_of_light);
    } catch (const DegenerateGeometryError&) {
        return out;
    }
    const Eigen::VectorXcd d =
        sig::delay_steering(tau, cfg.num_subcarriers, cfg.subcarrier_spacing);
    const Eigen::VectorXcd b = sig::nearfield_response(pose, cfg);
    const int t_count = cfg.num_transmissions;
    Eigen::VectorXcd q(t_count);
    for (int t = 0; t < t_count; ++t) {
        q[t] = kernels::cdotu(obs.profiles.gamma.col(t).data(), b.data(),
                              static_cast<std::size_t>(b.size()));
    }
    cplx num{0.0, 0.0};
    for (int t = 0; t < t_count; ++t) {
        const cplx zt = kernels::cdotc(d.data(), obs.y.col(t).data(),
                                       static_cast<std::size_t>(obs.y.rows()));
        num += std::conj(q[t]) * zt;
    }
    const double q_norm2 =
        kernels::cnorm2(q.data(), static_cast<std::size_t>(t_count));
    if (!(q_norm2 > 0.0)) return out;
    const double n_sub = static_cast<double>(cfg.num_subcarriers);
    out.cost = (y_norm2 - std::norm(num) / (n_sub * q_norm2)) / y_norm2;
    out.g_r = num / (std::sqrt(cfg.tx_power) * n_sub * q_norm2);
    return out;
}

bool side_matches(SideHint hint, const Vec2& p, const sig::SystemConfig& cfg) {
    if (hint == SideHint::kNone) return true;
    return side_of(p, cfg.p_tx, cfg.p_rx) == hint;
}

}  // namespace

void SearchSettings::validate() const {
    std::ostringstream bad;
    auto complain = [&bad](const char* msg) { bad << "\n  - " << msg; };
    if (delta_grid < 2) complain("delta grid must have >= 2 points");
    if (omega_grid < 2) complain("omega grid must have >= 2 points");
    if (nu_grid < 2) complain("nu grid must have >= 2 points");
    if (refine_iters_1d < 2) complain("1D refinement must run >= 2 iterations");
    if (qn_max_iters < 2) complain("quasi-Newton cap must be >= 2 iterations");
    if (!(qn_grad_tol > 0.0)) complain("gradient tolerance must be > 0");
    const std::string msg = bad.str();
    if (!msg.empty()) throw ConfigError("invalid search settings:" + msg);
}

SideHint side_of(const Vec2& p, const Vec2& p_tx, const Vec2& p_rx) {
    const double c = (p_rx - p_tx).cross(p - p_tx);
    if (c > 0.0) return SideHint::kPositive;
    if (c < 0.0) return SideHint::kNegative;
    return SideHint::kNone;
}

int coarse_toa(const sig::Observation& obs, const sig::SystemConfig& cfg) {
    const int n_fft = cfg.ifft_size;
    const int n_sub = static_cast<int>(obs.y.rows());
    if (n_fft < n_sub) throw ConfigError("IFFT size smaller than subcarrier count");
    Eigen::FFT<double> fft;
    std::vector<cplx> padded(static_cast<std::size_t>(n_fft), cplx{0.0, 0.0});
    std::vector<cplx> transformed(static_cast<std::size_t>(n_fft));
    std::vector<double> row_energy(static_cast<std::size_t>(n_fft), 0.0);
    for (int t = 0; t < obs.y.cols(); ++t) {
        std::copy_n(obs.y.col(t).data(), n_sub, padded.begin());
        fft.inv(transformed, padded);
        kernels::cabs2_accum(row_energy.data(), transformed.data(),
                             static_cast<std::size_t>(n_fft));
    }
    return static_cast<int>(std::max_element(row_energy.begin(), row_energy.end()) -
                            row_energy.begin());
}

ToaEstimate refine_toa(const sig::Observation& obs, int k_coarse,
                       const sig::SystemConfig& cfg, const SearchSettings& s) {
    const double bin = 1.0 / (static_cast<double>(cfg.ifft_size) *
                              cfg.subcarrier_spacing);
    auto objective = [&](double tau) {
        return matched_filter_energy(obs.y, tau, cfg.subcarrier_spacing);
    };
    // search one bin to each side of the coarse peak; the coarse bin may
    // round either way
    const double lo = std::max(0.0, (static_cast<double>(k_coarse) - 1.0) * bin);
    const double hi = (static_cast<double>(k_coarse) + 1.0) * bin;
    const int grid_points = 2 * s.delta_grid + 1;
    double best_tau = lo;
    double best_val = -kInf;
    for (int i = 0; i < grid_points; ++i) {
        const double tau = lo + (hi - lo) * static_cast<double>(i) /
                                    static_cast<double>(grid_points - 1);
        const double val = objective(tau);
        if (val > best_val) {
            best_val = val;
            best_tau = tau;
        }
    }
    const double step = (hi - lo) / static_cast<double>(grid_points - 1);
    const double tau_hat =
        golden_max(objective, std::max(lo, best_tau - step),
                   std::min(hi, best_tau + step), s.refine_iters_1d);

    ToaEstimate out;
    const double bins = tau_hat / bin;
    int k = static_cast<int>(std::ceil(bins - 1e-9));
    k = std::clamp(k, 0, cfg.ifft_size - 1);
    double delta = static_cast<double>(k) * bin - tau_hat;
    if (delta < 0.0) delta = 0.0;
    out.k_coarse = k;
    out.delta_fine = delta;
    out.tau_hat = static_cast<double>(k) * bin - delta;
    return out;
}

OmegaEstimate estimate_omega(const sig::Observation& obs, double tau_hat,
                             const sig::SystemConfig& cfg,
                             const SearchSettings& s) {
    const Eigen::VectorXcd y_r =
        compensated_sum(obs.y, tau_hat, cfg.subcarrier_spacing);
    const std::size_t t_count = static_cast<std::size_t>(y_r.size());
    const double y_r_norm2 = kernels::cnorm2(y_r.data(), t_count);
    const double n_sub = static_cast<double>(cfg.num_subcarriers);
    const double sqrt_p = std::sqrt(cfg.tx_power);
    const double wavenumber = 2.0 * kPi / cfg.wavelength;
    const double center = 0.5 * static_cast<double>(cfg.num_elements - 1);

    // plane-wave response with an optional quadratic wavefront term
    Eigen::VectorXcd b(cfg.num_elements);
    auto fit_cost = [&](double omega, double curvature) {
        for (int m = 0; m < cfg.num_elements; ++m) {
            const double offset =
                (static_cast<double>(m) - center) * cfg.element_spacing;
            b[m] = std::polar(
                1.0, -wavenumber * (offset * omega +
                                    0.5 * offset * offset * curvature));
        }
        Eigen::VectorXcd h(y_r.size());
        for (int t = 0; t < y_r.size(); ++t) {
            h[t] = kernels::cdotu(obs.profiles.gamma.col(t).data(), b.data(),
                                  static_cast<std::size_t>(b.size()));
        }
        const double h_norm2 = kernels::cnorm2(h.data(), t_count);
        if (!(h_norm2 > 0.0)) return y_r_norm2;
        const cplx gain = kernels::cdotc(h.data(), y_r.data(), t_count) /
                          (n_sub * sqrt_p * h_norm2);
        double cost = 0.0;
        for (std::size_t t = 0; t < t_count; ++t) {
            cost += std::norm(y_r[static_cast<Eigen::Index>(t)] -
                              n_sub * sqrt_p * gain *
                                  h[static_cast<Eigen::Index>(t)]);
        }
        return cost;
    };

    // stage 1: plane-wave grid + golden refinement
    double best_omega = -2.0;
    double best_val = kInf;
    for (int i = 0; i < s.omega_grid; ++i) {
        const double omega = -2.0 + 4.0 * static_cast<double>(i) /
                                        static_cast<double>(s.omega_grid - 1);
        const double val = fit_cost(omega, 0.0);
        if (val < best_val) {
            best_val = val;
            best_omega = omega;
        }
    }
    const double step = 4.0 / static_cast<double>(s.omega_grid - 1);
    double omega0 = golden_min([&](double w) { return fit_cost(w, 0.0); },
                               std::max(-2.0, best_omega - step),
                               std::min(2.0, best_omega + step),
                               s.refine_iters_1d);

    // stage 2: refit with the quadratic term around every alias. The largest
    // curvature consistent with the TOA is 2 / r_min, r_min being the closest
    // approach of the ellipse to an anchor.
    const double range_sum = cfg.speed_of_light * tau_hat;
    const double separation = (cfg.p_rx - cfg.p_tx).norm();
    const double r_min = std::max(0.5 * (range_sum - separation), 1e-3);
    const double curv_max = std::min(2.0 / r_min, 50.0);
    const int curv_points =
        std::max(61, static_cast<int>(std::ceil(curv_max / 0.05)) + 1);
    const double period = cfg.wavelength / cfg.element_spacing;

    double best_cost = kInf;
    double omega_hat = omega0;
    double curv_hat = 0.0;
    for (double alias : omega_aliases(omega0, period)) {
        for (int i = -16; i <= 16; ++i) {
            const double omega = alias + 0.005 * static_cast<double>(i);
            for (int j = 0; j < curv_points; ++j) {
                const double curvature = curv_max * static_cast<double>(j) /
                                         static_cast<double>(curv_points - 1);
                const double val = fit_cost(omega, curvature);
                if (val < best_cost) {
                    best_cost = val;
                    omega_hat = omega;
                    curv_hat = curvature;
                }
            }
        }
    }
    for (int round = 0; round < 3; ++round) {
        omega_hat = golden_min([&](double w) { return fit_cost(w, curv_hat); },
                               omega_hat - 0.01, omega_hat + 0.01,
                               s.refine_iters_1d);
        curv_hat = golden_min([&](double k2) { return fit_cost(omega_hat, k2); },
                              std::max(0.0, curv_hat - 0.1), curv_hat + 0.1,
                              s.refine_iters_1d);
    }

    // canonical representative: smallest magnitude, positive on a tie
    double canonical = omega_hat;
    for (double alias : omega_aliases(omega_hat, period)) {
        if (std::abs(alias) < std::abs(canonical) - 1e-15 ||
            (std::abs(std::abs(alias) - std::abs(canonical)) <= 1e-15 &&
             alias > canonical)) {
            canonical = alias;
        }
    }
    canonical = std::clamp(canonical, -2.0, 2.0);

    OmegaEstimate out;
    out.omega_hat = canonical;
    const double plane_cost = fit_cost(canonical, 0.0);
    out.residual = y_r_norm2 > 0.0 ? plane_cost / y_r_norm2 : 0.0;
    // least-squares gain of the plane-wave model at the returned omega
    {
        const Eigen::VectorXcd bw =
            sig::ff_response(canonical, cfg.num_elements, cfg.element_spacing,
                             cfg.wavelength);
        Eigen::VectorXcd h(y_r.size());
        for (int t = 0; t < y_r.size(); ++t) {
            h[t] = kernels::cdotu(obs.profiles.gamma.col(t).data(), bw.data(),
                                  static_cast<std::size_t>(bw.size()));
        }
        const double h_norm2 = kernels::cnorm2(h.data(), t_count);
        out.g_r_hat = h_norm2 > 0.0
                          ? kernels::cdotc(h.data(), y_r.data(), t_count) /
                                (n_sub * sqrt_p * h_norm2)
                          : cplx{0.0, 0.0};
    }
    return out;
}

NuEstimate estimate_nu(const sig::Observation& obs, double tau_hat,
                       double omega_hat, const sig::SystemConfig& cfg,
                       const SearchSettings& s, SideHint side) {
    const geom::EllipseParam ellipse = geom::ellipse_from_toa(
        cfg.p_tx, cfg.p_rx, tau_hat, cfg.speed_of_light);
    const FitContext ctx = make_context(obs, cfg, tau_hat);
    const double period = cfg.wavelength / cfg.element_spacing;
    const std::vector<double> aliases = omega_aliases(omega_hat, period);

    // orientations consistent with any omega alias at the ellipse point nu;
    // both arcsin branches, the data-fit cost disambiguates
    auto orientation_candidates = [&](double nu, std::vector<double>& out) {
        out.clear();
        const Vec2 p = geom::ellipse_point(ellipse, nu);
        if (!((p - cfg.p_tx).squared_norm() > 0.0) ||
            !((p - cfg.p_rx).squared_norm() > 0.0)) {
            return;
        }
        const geom::AnchorAngles ang = geom::anchor_angles(cfg.p_tx, cfg.p_rx, p);
        const double half_sum = 0.5 * (ang.theta_tx + ang.theta_rx);
        const double half_diff = 0.5 * (ang.theta_tx - ang.theta_rx);
        const double denom = 2.0 * std::cos(half_diff);
        if (denom == 0.0) return;
        for (double alias : aliases) {
            double arg = alias / denom;
            if (std::abs(arg) > 1.0 + 1e-12) continue;
            arg = std::clamp(arg, -1.0, 1.0);
            const double asin_arg = std::asin(arg);
            out.push_back(geom::wrap_angle(asin_arg - half_sum));
            out.push_back(geom::wrap_angle(kPi - asin_arg - half_sum));
        }
    };

    std::vector<double> orient_buf;
    struct Probe {
        double cost = kInf;
        double alpha = 0.0;
    };
    auto probe = [&](double nu) {
        Probe pr;
        const Vec2 p = geom::ellipse_point(ellipse, nu);
        if (!side_matches(side, p, cfg)) return pr;
        orientation_candidates(nu, orient_buf);
        for (double alpha : orient_buf) {
            const double cost = pose_fit_cost(ctx, {p, alpha});
            if (cost < pr.cost) {
                pr.cost = cost;
                pr.alpha = alpha;
            }
        }
        return pr;
    };

    const int n_grid = s.nu_grid;
    std::vector<Probe> grid(static_cast<std::size_t>(n_grid));
    bool any_feasible = false;
    for (int i = 0; i < n_grid; ++i) {
        const double nu = 2.0 * kPi * static_cast<double>(i) /
                          static_cast<double>(n_grid);
        grid[static_cast<std::size_t>(i)] = probe(nu);
        any_feasible = any_feasible ||
                       std::isfinite(grid[static_cast<std::size_t>(i)].cost);
    }
    if (!any_feasible) {
        throw NoFeasibleNuError(
            "no ellipse point yields a feasible orientation for the "
            "estimated spatial frequency");
    }

    // local minima of the cyclic profile, best first
    std::vector<int> minima;
    for (int i = 0; i < n_grid; ++i) {
        const double here = grid[static_cast<std::size_t>(i)].cost;
        if (!std::isfinite(here)) continue;
        const double left = grid[static_cast<std::size_t>((i + n_grid - 1) % n_grid)].cost;
        const double right = grid[static_cast<std::size_t>((i + 1) % n_grid)].cost;
        if (here <= left && here <= right) minima.push_back(i);
    }
    std::sort(minima.begin(), minima.end(), [&](int a, int b) {
        const double ca = grid[static_cast<std::size_t>(a)].cost;
        const double cb = grid[static_cast<std::size_t>(b)].cost;
        return ca != cb ? ca < cb : a < b;
    });

    constexpr int kMaxCandidates = 4;
    const double nu_step = 2.0 * kPi / static_cast<double>(n_grid);
    NuEstimate out;
    for (int idx : minima) {
        if (static_cast<int>(out.candidates.size()) >= kMaxCandidates) break;
        const double nu_center = nu_step * static_cast<double>(idx);
        double nu_best = golden_min([&](double nu) { return probe(nu).cost; },
                                    nu_center - nu_step, nu_center + nu_step,
                                    s.refine_iters_1d);
        Probe refined = probe(nu_best);
        if (refined.cost > grid[static_cast<std::size_t>(idx)].cost) {
            nu_best = nu_center;
            refined = grid[static_cast<std::size_t>(idx)];
        }
        if (!std::isfinite(refined.cost)) continue;
        // orientation polish around the pinned value; the pinned map carries
        // the residual error of omega_hat
        const Vec2 p = geom::ellipse_point(ellipse, nu_best);
        const double alpha_polished = golden_min(
            [&](double a) { return pose_fit_cost(ctx, {p, a}); },
            refined.alpha - 0.02, refined.alpha + 0.02, s.refine_iters_1d);
        const double cost_polished = pose_fit_cost(ctx, {p, alpha_polished});
        NuCandidate cand;
        cand.nu = geom::wrap_angle(nu_best) < 0.0
                      ? geom::wrap_angle(nu_best) + 2.0 * kPi
                      : geom::wrap_angle(nu_best);
        if (cost_polished < refined.cost) {
            cand.pose = {p, geom::wrap_angle(alpha_polished)};
            cand.cost = cost_polished;
        } else {
            cand.pose = {p, geom::wrap_angle(refined.alpha)};
            cand.cost = refined.cost;
        }
        out.candidates.push_back(cand);
        if (cand.cost < 1e-10) break;
    }
    if (out.candidates.empty()) {
        throw NoFeasibleNuError("no feasible ellipse-search candidate survived");
    }
    std::stable_sort(out.candidates.begin(), out.candidates.end(),
                     [](const NuCandidate& a, const NuCandidate& b) {
                         return a.cost < b.cost;
                     });
    out.nu_hat = out.candidates.front().nu;
    out.initial_pose = out.candidates.front().pose;
    out.cost = out.candidates.front().cost;
    return out;
}

RefineResult refine_ml(const sig::Observation& obs,
                       const geom::RisPose& initial_pose,
                       const sig::SystemConfig& cfg, const SearchSettings& s) {
    const double y_norm2 = kernels::cnorm2(
        obs.y.data(), static_cast<std::size_t>(obs.y.size()));

    // variable scaling keeps position and orientation curvatures comparable
    const double aperture_half =
        0.5 * static_cast<double>(cfg.num_elements) * cfg.element_spacing;
    const Eigen::Vector3d scale(cfg.wavelength, cfg.wavelength,
                                cfg.wavelength / std::max(aperture_half, 1e-6));

    auto cost_at = [&](const Eigen::Vector3d& x) {
        const geom::RisPose pose{{x[0] * scale[0], x[1] * scale[1]},
                                 x[2] * scale[2]};
        return ml_profile_cost(obs, cfg, y_norm2, pose).cost;
    };

    Eigen::Vector3d x(initial_pose.center.x / scale[0],
                      initial_pose.center.y / scale[1],
                      initial_pose.alpha / scale[2]);
    const double f_init = cost_at(x);
    double f = f_init;

    const double h = 1e-5;
    auto gradient = [&](const Eigen::Vector3d& at) {
        Eigen::Vector3d g;
        for (int i = 0; i < 3; ++i) {
            Eigen::Vector3d lo = at, hi = at;
            lo[i] -= h;
            hi[i] += h;
            g[i] = (cost_at(hi) - cost_at(lo)) / (2.0 * h);
        }
        return g;
    };

    Eigen::Matrix3d h_inv = Eigen::Matrix3d::Identity();
    Eigen::Vector3d g = gradient(x);
    bool converged = false;
    int iterations = 0;
    int line_search_failures = 0;

    for (; iterations < s.qn_max_iters; ++iterations) {
        if (g.norm() < s.qn_grad_tol) {
            converged = true;
            break;
        }
        Eigen::Vector3d direction = -h_inv * g;
        if (g.dot(direction) >= 0.0) {
            h_inv.setIdentity();
            direction = -g;
        }
        double step_len = 1.0;
        bool accepted = false;
        Eigen::Vector3d x_next;
        double f_next = f;
        const double slope = g.dot(direction);
        for (int back = 0; back < 45; ++back) {
            x_next = x + step_len * direction;
            f_next = cost_at(x_next);
            if (f_next <= f + 1e-4 * step_len * slope) {
                accepted = true;
                break;
            }
            step_len *= 0.5;
        }
        if (!accepted) {
            if (++line_search_failures >= 2) {
                converged = true;  // flat to evaluation precision
                break;
            }
            h_inv.setIdentity();
            continue;
        }
        line_search_failures = 0;
        const Eigen::Vector3d g_next = gradient(x_next);
        const Eigen::Vector3d step = x_next - x;
        const Eigen::Vector3d y_vec = g_next - g;
        const double sy = step.dot(y_vec);
        if (sy > 1e-12 * step.norm() * y_vec.norm()) {
            const double rho = 1.0 / sy;
            const Eigen::Matrix3d v =
                Eigen::Matrix3d::Identity() - rho * step * y_vec.transpose();
            h_inv = v * h_inv * v.transpose() + rho * step * step.transpose();
        }
        x = x_next;
        g = g_next;
        f = f_next;
    }

    // damped Newton polish with finite-difference curvature; quadratic
    // convergence close to the optimum where BFGS progress stalls
    for (int polish = 0; polish < 4; ++polish) {
        const Eigen::Vector3d gp = gradient(x);
        Eigen::Matrix3d hess;
        const double f0 = cost_at(x);
        for (int i = 0; i < 3; ++i) {
            Eigen::Vector3d lo = x, hi = x;
            lo[i] -= h;
            hi[i] += h;
            hess(i, i) = (cost_at(hi) - 2.0 * f0 + cost_at(lo)) / (h * h);
            for (int j = i + 1; j < 3; ++j) {
                Eigen::Vector3d pp = x, pm = x, mp = x, mm = x;
                pp[i] += h;
                pp[j] += h;
                pm[i] += h;
                pm[j] -= h;
                mp[i] -= h;
                mp[j] += h;
                mm[i] -= h;
                mm[j] -= h;
                hess(i, j) = hess(j, i) =
                    (cost_at(pp) - cost_at(pm) - cost_at(mp) + cost_at(mm)) /
                    (4.0 * h * h);
            }
        }
        double damping = 1e-12;
        bool improved = false;
        for (int attempt = 0; attempt < 8; ++attempt) {
            const Eigen::Matrix3d damped =
                hess + damping * Eigen::Matrix3d::Identity();
            const Eigen::Vector3d step = damped.ldlt().solve(-gp);
            const Eigen::Vector3d x_try = x + step;
            const double f_try = cost_at(x_try);
            if (std::isfinite(f_try) && f_try < f) {
                x = x_try;
                f = f_try;
                improved = true;
                break;
            }
            damping = std::max(damping * 100.0, 1e-10);
        }
        if (!improved) break;
    }

    geom::RisPose refined{{x[0] * scale[0], x[1] * scale[1]},
                          geom::wrap_angle(x[2] * scale[2])};
    MlCost refined_cost = ml_profile_cost(obs, cfg, y_norm2, refined);

    RefineResult out;
    out.iterations = iterations;
    // keep whichever of initial and refined fits better
    const MlCost initial_cost = ml_profile_cost(obs, cfg, y_norm2, initial_pose);
    if (refined_cost.cost <= initial_cost.cost) {
        out.pose = refined;
        out.g_r_hat = refined_cost.g_r;
        out.residual = refined_cost.cost;
        out.converged = converged;
    } else {
        out.pose = initial_pose;
        out.g_r_hat = initial_cost.g_r;
        out.residual = initial_cost.cost;
        out.converged = false;
    }
    return out;
}

RisEstimate estimate_pipeline(const sig::Observation& obs,
                              const sig::SystemConfig& cfg,
                              const SearchSettings& s, SideHint side) {
    s.validate();
    RisEstimate out;
    auto run_stage = [](const char* stage, auto&& fn) {
        try {
            return fn();
        } catch (const Error& e) {
            throw PipelineStageError(stage, e.what());
        }
    };

    const int k_coarse =
        run_stage("toa-coarse", [&] { return coarse_toa(obs, cfg); });
    out.toa = run_stage("toa-refine",
                        [&] { return refine_toa(obs, k_coarse, cfg, s); });
    {
        const double y_norm2 = kernels::cnorm2(
            obs.y.data(), static_cast<std::size_t>(obs.y.size()));
        const double energy =
            matched_filter_energy(obs.y, out.toa.tau_hat, cfg.subcarrier_spacing);
        const double denom =
            static_cast<double>(cfg.num_subcarriers) * y_norm2;
        out.cost_trace.emplace_back(
            "toa", denom > 0.0 ? std::max(0.0, 1.0 - energy / denom) : 0.0);
    }

    const OmegaEstimate omega = run_stage(
        "omega", [&] { return estimate_omega(obs, out.toa.tau_hat, cfg, s); });
    out.cost_trace.emplace_back("omega", omega.residual);

    const NuEstimate nu = run_stage("nu", [&] {
        return estimate_nu(obs, out.toa.tau_hat, omega.omega_hat, cfg, s, side);
    });
    out.nu_hat = nu.nu_hat;
    out.initial_pose = nu.initial_pose;
    out.cost_trace.emplace_back("nu", nu.cost);

    // refine the leading candidates; twins separated only marginally by the
    // ellipse-search cost resolve decisively after refinement
    RefineResult best;
    best.residual = kInf;
    geom::RisPose best_initial = nu.initial_pose;
    for (const NuCandidate& cand : nu.candidates) {
        const RefineResult r = run_stage(
            "refine", [&] { return refine_ml(obs, cand.pose, cfg, s); });
        if (r.residual < best.residual) {
            best = r;
            best_initial = cand.pose;
        }
    }
    out.initial_pose = best_initial;
    out.refined_pose = best.pose;
    out.g_r_hat = best.g_r_hat;
    out.converged = best.converged;
    out.cost_trace.emplace_back("refine", best.residual);

    // report the spatial frequency of the winning pose's alias family
    const geom::AnchorAngles ang =
        geom::anchor_angles(cfg.p_tx, cfg.p_rx, out.refined_pose.center);
    const double omega_refined =
        geom::omega_of(ang.theta_tx, ang.theta_rx, out.refined_pose.alpha);
    const double period = cfg.wavelength / cfg.element_spacing;
    double reported = omega.omega_hat;
    double best_dist = kInf;
    for (double alias : omega_aliases(omega.omega_hat, period)) {
        const double dist = std::abs(alias - omega_refined);
        if (dist < best_dist) {
            best_dist = dist;
            reported = alias;
        }
    }
    out.omega_hat = reported;
    return out;
}

}  // namespace risloc::est
