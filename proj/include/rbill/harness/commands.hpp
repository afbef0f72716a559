#pragma once
/**
 * @file commands.hpp
 * @brief The CLI commands. Each reads its block of an ExperimentConfig, writes
 * CSV results into the output directory and returns a JSON summary; run_command
 * wraps them with error handling and writes manifest.json last.
 *
 * Exit status: 0 success or PASS, 1 verification FAIL, 2 execution error.
 */

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "rbill/chain/chain.hpp"
#include "rbill/chain/ensemble.hpp"
#include "rbill/geometry/jacobian.hpp"
#include "rbill/harness/config.hpp"
#include "rbill/harness/output.hpp"
#include "rbill/parallel.hpp"
#include "rbill/potential/coefficients.hpp"
#include "rbill/potential/drift.hpp"
#include "rbill/stats/equilibrium.hpp"
#include "rbill/stats/mixing.hpp"

namespace rbill::harness {

enum ExitStatus : int { kPass = 0, kVerificationFail = 1, kExecutionError = 2 };

struct CommandOutcome {
    int status{kPass};
    json summary = json::object();
};

using CommandFn = std::function<CommandOutcome(const ExperimentConfig&, RunOutput&)>;

/// The configuration fields that determine results: everything except
/// run.workers and the output block. Written to config.json and hashed.
inline json canonical_config(const ExperimentConfig& c) {
    json j = to_json(c);
    j["run"].erase("workers");
    j.erase("output");
    return j;
}

/// Keys are sorted on dump, so reordering the input file does not change it.
inline std::string config_hash(const ExperimentConfig& c) { return sha256_hex(canonical_config(c).dump()); }

namespace detail {

template <class T>
const T& require_block(const std::optional<T>& block, const char* key) {
    if (!block) throw ConfigError({{IssueKind::MissingKey, key, "this command needs the block", ""}});
    return *block;
}

inline json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

inline std::string window_label(std::size_t lo, std::size_t hi) {
    return std::to_string(lo) + ":" + std::to_string(hi);
}

}  // namespace detail

// ------------------------------------------------------------------ simulate

inline CommandOutcome cmd_simulate(const ExperimentConfig& cfg, RunOutput& out) {
    const auto& b = detail::require_block(cfg.simulate, "simulate");
    const ValidatedTable table = validate_table(cfg.table);
    const auto& r = cfg.run;
    const InitialDistribution init = b.initial.to_distribution();

    struct ChainResult {
        Histogram1D hist{Histogram1D::v_perp_default()};
        RunningStats v, v2;
        double elapsed{0.0};
        BoundaryState final_state{};
        std::string error;
        ChainTrajectory trajectory;
    };
    std::vector<ChainResult> chains(r.n_chains);
    parallel_for(chains.size(), r.workers, [&](std::size_t c) {
        ChainResult& res = chains[c];
        try {
            Rng rng = make_stream(r.master_seed, c);
            const BoundaryState start = sample_initial(table, init, rng);
            auto tr = run_chain(table, start, r.n_steps, rng, {RecordMode::Thinned, r.thinning, r.burn_in},
                                {r.master_seed, c});
            for (const auto& s : tr.states) res.hist.add(s.v_perp);
            res.v = tr.v_perp_stats;
            res.v2 = tr.v_perp_sq_stats;
            res.elapsed = tr.elapsed_time;
            res.final_state = tr.final_state;
            if (c == 0 && b.trajectory) res.trajectory = std::move(tr);
        } catch (const std::exception& e) {
            res.error = e.what();
        }
    });

    Histogram1D merged = Histogram1D::v_perp_default();
    RunningStats v, v2;
    Csv per_chain{"chain", "seed", "mean_v_perp", "mean_v_perp_sq", "elapsed_time", "final_disk_id", "final_theta",
                  "final_v_perp", "error"};
    json failures = json::array();
    for (std::size_t c = 0; c < chains.size(); ++c) {
        const auto& res = chains[c];
        per_chain.row() << static_cast<std::uint64_t>(c) << derive_seed(r.master_seed, c) << res.v.mean << res.v2.mean
                        << res.elapsed << static_cast<std::uint64_t>(res.final_state.point.disk)
                        << res.final_state.point.theta << res.final_state.v_perp << res.error;
        if (!res.error.empty()) {
            failures.push_back({{"chain", c}, {"seed", derive_seed(r.master_seed, c)}, {"message", res.error}});
            continue;
        }
        merged.merge(res.hist);
        v.merge(res.v);
        v2.merge(res.v2);
    }
    out.write("chains.csv", per_chain);
    out.write("v_perp_histogram.csv", histogram_csv(merged));
    if (b.trajectory && chains[0].error.empty()) {
        const auto& tr = chains[0].trajectory;
        Csv csv{"step", "disk_id", "theta", "v_perp", "phi", "phi_in", "time"};
        for (std::size_t i = 0; i < tr.states.size(); ++i)
            csv.row() << tr.steps[i] << static_cast<std::uint64_t>(tr.states[i].point.disk) << tr.states[i].point.theta
                      << tr.states[i].v_perp << tr.angles[i].first << tr.angles[i].second << tr.times[i];
        out.write("trajectory.csv", csv);
    }

    CommandOutcome o;
    o.summary = {{"n_chains", r.n_chains},
                 {"n_steps", r.n_steps},
                 {"samples", v.n},
                 {"mean_v_perp", detail::finite_or_null(v.mean)},
                 {"mean_v_perp_se", detail::finite_or_null(v.std_error())},
                 {"mean_v_perp_sq", detail::finite_or_null(v2.mean)},
                 {"failures", failures}};
    o.status = failures.empty() ? kPass : kExecutionError;
    return o;
}

// -------------------------------------------------------- check-equilibrium

inline CommandOutcome cmd_check_equilibrium(const ExperimentConfig& cfg, RunOutput& out) {
    const auto& b = detail::require_block(cfg.check_equilibrium, "check_equilibrium");
    const ValidatedTable table = validate_table(cfg.table);
    EquilibriumRunSpec spec;
    spec.n_steps = cfg.run.n_steps;
    spec.burn_in = cfg.run.burn_in;
    spec.thinning = cfg.run.thinning;
    spec.master_seed = cfg.run.master_seed;
    spec.initial = {{b.initial.disk, b.initial.theta}, b.initial.v_perp};
    spec.position_bins = b.position_bins;
    spec.alpha = b.alpha;
    const EquilibriumVerdict v = check_equilibrium(table, spec);

    out.write("v_perp_histogram.csv", histogram_csv(v.v_hist));
    Csv pos{"edge_lo", "edge_hi", "count"};
    const double len = table.boundary_length();
    for (std::size_t i = 0; i < v.position_counts.size(); ++i) {
        const double n = static_cast<double>(v.position_counts.size());
        pos.row() << len * static_cast<double>(i) / n << len * static_cast<double>(i + 1) / n
                  << static_cast<std::uint64_t>(v.position_counts[i]);
    }
    out.write("position_histogram.csv", pos);
    Csv tests{"test", "statistic", "critical", "p_value", "pass"};
    tests.row() << "ks_v_perp" << v.ks.statistic << v.ks_critical << v.ks.p_value << (v.ks_pass ? "PASS" : "FAIL");
    tests.row() << "chi2_position" << v.position.statistic << v.position.critical << v.position.p_value
                << (v.chi2_pass ? "PASS" : "FAIL");
    tests.row() << "mean_v_perp_sq" << std::abs(v.mean_v2 - v.expected_v2) / v.mean_v2_se << 3.0
                << std::erfc(std::abs(v.mean_v2 - v.expected_v2) / v.mean_v2_se / std::numbers::sqrt2)
                << (v.moment_pass ? "PASS" : "FAIL");
    out.write("equilibrium_tests.csv", tests);

    CommandOutcome o;
    o.summary = {{"verdict", v.pass() ? "PASS" : "FAIL"},
                 {"n_samples", v.n_samples},
                 {"ks_D", v.ks.statistic},
                 {"ks_critical", v.ks_critical},
                 {"ks_p_value", v.ks.p_value},
                 {"chi2_position", v.position.statistic},
                 {"chi2_critical", v.position.critical},
                 {"chi2_dof", v.position.dof},
                 {"mean_v_perp_sq", v.mean_v2},
                 {"mean_v_perp_sq_se", v.mean_v2_se},
                 {"expected_v_perp_sq", v.expected_v2},
                 {"tau_int_v_perp_sq", v.tau_int_v2}};
    o.status = v.pass() ? kPass : kVerificationFail;
    return o;
}

// -------------------------------------------------------------- verify-drift

inline DriftGridSpec drift_spec(const ExperimentConfig& cfg) {
    const auto& b = detail::require_block(cfg.verify_drift, "verify_drift");
    DriftGridSpec s;
    s.n_v = b.n_v;
    s.v_lo_factor = b.v_lo_factor;
    s.v_hi_factor = b.v_hi_factor;
    s.n_theta = b.n_theta;
    s.densify = b.densify;
    s.densify_halfwidth = b.densify_halfwidth;
    s.densify_factor = b.densify_factor;
    s.mc_samples = b.mc_samples;
    s.gammas.resize(b.n_gamma);
    for (std::size_t i = 0; i < b.n_gamma; ++i)
        s.gammas[i] = b.n_gamma == 1 ? b.gamma_min
                                     : b.gamma_min + (b.gamma_max - b.gamma_min) * static_cast<double>(i) /
                                                         static_cast<double>(b.n_gamma - 1);
    s.master_seed = cfg.run.master_seed;
    s.workers = cfg.run.workers;
    s.quadrature.rel_tol = b.rel_tol;
    s.quadrature.scan_panels = b.scan_panels;
    return s;
}

inline json drift_summary(const DriftReport& rep) {
    using detail::finite_or_null;
    return {{"verdict", rep.feasible ? "FEASIBLE" : "INFEASIBLE"},
            {"infeasible_by_definition", rep.infeasible_by_definition},
            {"grid_states", rep.grid.size()},
            {"n_ok", rep.n_ok},
            {"n_ambiguous", rep.n_ambiguous},
            {"n_fail", rep.n_fail},
            {"n_error", rep.n_error},
            {"tail_ratio", rep.tail_ratio},
            {"gamma_star", finite_or_null(rep.gamma_star)},
            {"K_star", finite_or_null(rep.K_star)},
            {"S_star", finite_or_null(rep.S_star)},
            {"level_set_v_perp_lo", finite_or_null(rep.level_v_lo)},
            {"level_set_v_perp_hi", finite_or_null(rep.level_v_hi)},
            {"K_non_increasing", rep.K_non_increasing},
            {"K_convex", rep.K_convex}};
}

inline CommandOutcome cmd_verify_drift(const ExperimentConfig& cfg, RunOutput& out) {
    const DriftGridSpec spec = drift_spec(cfg);
    const PotentialParams params = detail::require_block(cfg.potential, "potential");
    const ValidatedTable table = validate_table(cfg.table);
    const DriftReport rep = verify_drift(table, params, spec);

    Csv grid{"disk_id", "theta", "v_perp", "V", "PV_quad", "PV_quad_err", "PV_mc", "PV_mc_err", "status"};
    for (const auto& g : rep.grid)
        grid.row() << static_cast<std::uint64_t>(g.state.point.disk) << g.state.point.theta << g.state.v_perp << g.V
                   << g.pv_quad << g.pv_quad_err << g.pv_mc << g.pv_mc_err << to_string(g.status);
    out.write("drift_grid.csv", grid);
    Csv curve{"gamma", "K", "S", "admissible"};
    for (std::size_t k = 0; k < rep.gammas.size(); ++k) {
        const double gam = rep.gammas[k];
        const bool adm = gam < 1.0 && gam >= rep.tail_ratio && std::isfinite(rep.K[k]);
        curve.row() << gam << rep.K[k] << (gam < 1.0 ? 2.0 * rep.K[k] / (1.0 - gam) : std::numeric_limits<double>::infinity())
                    << (adm ? "true" : "false");
    }
    out.write("drift_curve.csv", curve);
    json errors = json::array();
    for (const auto& g : rep.grid)
        if (g.status == DriftStatus::Error)
            errors.push_back({{"disk_id", g.state.point.disk}, {"theta", g.state.point.theta},
                              {"v_perp", g.state.v_perp}, {"message", g.message}});

    CommandOutcome o;
    o.summary = drift_summary(rep);
    o.summary["errors"] = errors;
    o.status = rep.feasible ? kPass : kVerificationFail;
    return o;
}

// ------------------------------------------------------------ estimate-mixing

/// Per-bin weights V(v) at geometric bin centers, with under/overflow at the
/// outer edges; capped at the largest finite double.
inline std::vector<double> potential_bin_weights(const Histogram1D& h, const PotentialParams& p) {
    const auto& e = h.edges();
    auto w = [&](double v) { return std::min(potential_value(v, p), std::numeric_limits<double>::max()); };
    std::vector<double> out{w(e.front())};
    for (std::size_t i = 0; i < h.bins(); ++i) out.push_back(w(std::sqrt(e[i] * e[i + 1])));
    out.push_back(w(e.back()));
    return out;
}

inline Csv fit_csv(const MixingEstimate& est) {
    Csv csv{"alpha_hat", "ci_lo", "ci_hi", "window"};
    csv.row() << est.alpha_hat << est.ci_lo << est.ci_hi << detail::window_label(est.window_lo, est.window_hi);
    return csv;
}

inline json mixing_summary(const MixingEstimate& est) {
    using detail::finite_or_null;
    return {{"method", est.method},
            {"alpha_hat", finite_or_null(est.alpha_hat)},
            {"ci_lo", finite_or_null(est.ci_lo)},
            {"ci_hi", finite_or_null(est.ci_hi)},
            {"gamma_tilde", finite_or_null(est.gamma_tilde)},
            {"window", detail::window_label(est.window_lo, est.window_hi)},
            {"tau_int", finite_or_null(est.tau_int)},
            {"tau_int_err", finite_or_null(est.tau_int_err)},
            {"noise_floor", est.noise_floor}};
}

inline CommandOutcome cmd_estimate_mixing(const ExperimentConfig& cfg, RunOutput& out) {
    const auto& b = detail::require_block(cfg.estimate_mixing, "estimate_mixing");
    const ValidatedTable table = validate_table(cfg.table);
    const auto& r = cfg.run;
    MixingSpec spec;
    spec.ensemble.n_chains = r.n_chains;
    spec.ensemble.n_steps = r.n_steps;
    spec.ensemble.master_seed = r.master_seed;
    spec.ensemble.workers = r.workers;
    spec.window = {b.window_upper, b.window_lower};
    spec.confidence = b.confidence;
    std::vector<double> weights;
    if (b.weighted) weights = potential_bin_weights(Histogram1D::v_perp_default(), *cfg.potential);

    const BilliardModel ma{&table, b.initial_a.to_distribution()}, mb{&table, b.initial_b.to_distribution()};
    CommandOutcome o;
    MixingEstimate est;
    bool window_empty = false;
    std::string window_message;
    try {
        est = estimate_mixing_tv(ma, mb, spec, weights);
    } catch (const WindowEmptyError& e) {
        est = e.curve();
        window_empty = true;
        window_message = e.what();
    }
    Csv tv{"n", "tv"};
    for (std::size_t n = 0; n < est.values.size(); ++n) tv.row() << static_cast<std::uint64_t>(n) << est.values[n];
    out.write("tv_curve.csv", tv);
    if (!est.weighted_values.empty()) {
        Csv wtv{"n", "tv"};
        for (std::size_t n = 0; n < est.weighted_values.size(); ++n)
            wtv.row() << static_cast<std::uint64_t>(n) << est.weighted_values[n];
        out.write("tv_curve_weighted.csv", wtv);
    }
    out.write("tv_fit.csv", fit_csv(est));
    o.summary["tv"] = mixing_summary(est);
    bool pass = !window_empty && est.pass();
    if (window_empty) o.summary["tv"]["window_empty"] = window_message;

    if (b.autocorrelation) {
        const auto& ab = *b.autocorrelation;
        Rng rng = make_stream(derive_seed(r.master_seed, 0xac0ac0ULL), 0);
        const BoundaryState start = sample_initial(table, b.initial_b.to_distribution(), rng);
        const auto tr = run_chain(table, start, ab.n_steps, rng, {RecordMode::Full, 1, r.burn_in}, {r.master_seed, 0});
        std::vector<double> series(tr.states.size());
        for (std::size_t i = 0; i < series.size(); ++i) {
            const double v = tr.states[i].v_perp;
            if (ab.observable == "v_perp") series[i] = v;
            else if (ab.observable == "V") series[i] = potential_value(v, *cfg.potential);
            else series[i] = potential_value(v, *cfg.potential) <= cfg.potential->plateau() ? 1.0 : 0.0;
        }
        AutocorrelationSpec as;
        as.window_c = ab.window_c;
        as.min_length = 100000;
        const MixingEstimate ac = autocorrelation_time(series, as);
        Csv rho{"lag", "rho"};
        for (std::size_t i = 0; i < ac.values.size(); ++i) rho.row() << static_cast<std::uint64_t>(i) << ac.values[i];
        out.write("autocorrelation.csv", rho);
        out.write("autocorrelation_fit.csv", fit_csv(ac));
        o.summary["autocorrelation"] = mixing_summary(ac);
        o.summary["autocorrelation"]["observable"] = ab.observable;
        pass = pass && std::isfinite(ac.tau_int);
    }
    o.summary["verdict"] = pass ? "PASS" : "FAIL";
    o.status = pass ? kPass : kVerificationFail;
    return o;
}

// ------------------------------------------------------------- jacobian-check

inline CommandOutcome cmd_jacobian_check(const ExperimentConfig& cfg, RunOutput& out) {
    const auto& b = detail::require_block(cfg.jacobian_check, "jacobian_check");
    const ValidatedTable table = validate_table(cfg.table);

    Rng rng = make_stream(cfg.run.master_seed, 0);
    Csv det{"disk_id", "theta", "v_perp", "phi", "det", "abs_det_plus_one"};
    double worst_det = 0.0;
    for (std::size_t i = 0; i < b.n_states; ++i) {
        const MapProbe p = random_non_tangent_probe(table, rng, b.min_cos);
        const double d = enhanced_jacobian(table, p.state, p.phi).determinant();
        worst_det = std::max(worst_det, std::abs(d + 1.0));
        det.row() << static_cast<std::uint64_t>(p.state.point.disk) << p.state.point.theta << p.state.v_perp << p.phi
                  << d << std::abs(d + 1.0);
    }
    out.write("jacobian_det.csv", det);

    Rng fd_rng = make_stream(cfg.run.master_seed, 1);
    Csv fd{"disk_id", "theta", "v_perp", "phi", "max_rel_error", "status"};
    double worst_fd = 0.0;
    std::size_t checked = 0, skipped = 0;
    for (std::size_t i = 0; i < b.fd_states; ++i) {
        const MapProbe p = random_non_tangent_probe(table, fd_rng, b.fd_min_cos);
        const auto J = enhanced_jacobian(table, p.state, p.phi);
        const auto F = finite_difference_jacobian(table, p, b.fd_h);
        double err = std::numeric_limits<double>::quiet_NaN();
        if (F) {
            err = 0.0;
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) err = std::max(err, std::abs((*F)(r, c) - J(r, c)) / std::max(1.0, std::abs(J(r, c))));
            worst_fd = std::max(worst_fd, err);
            ++checked;
        } else {
            ++skipped;
        }
        fd.row() << static_cast<std::uint64_t>(p.state.point.disk) << p.state.point.theta << p.state.v_perp << p.phi << err
                 << (F ? "checked" : "skipped_image_change");
    }
    out.write("jacobian_fd.csv", fd);

    const bool det_pass = worst_det <= b.det_tolerance;
    const bool fd_pass = worst_fd <= b.fd_tolerance;
    CommandOutcome o;
    o.summary = {{"verdict", det_pass && fd_pass ? "PASS" : "FAIL"},
                 {"n_states", b.n_states},
                 {"max_abs_det_plus_one", worst_det},
                 {"det_tolerance", b.det_tolerance},
                 {"fd_checked", checked},
                 {"fd_skipped", skipped},
                 {"fd_max_rel_error", worst_fd},
                 {"fd_tolerance", b.fd_tolerance}};
    o.status = det_pass && fd_pass ? kPass : kVerificationFail;
    return o;
}

// --------------------------------------------------------------- coeffs-check

namespace detail {

/// cos^2(phi')/cos^2(phi) for a ray leaving the origin with normal (0, 1) at
/// angle phi toward the circle (c, r), by direct intersection.
inline std::optional<double> direct_cos_ratio(Vec2 c, double r, double phi) {
    const Vec2 u = std::cos(phi) * Vec2{0.0, 1.0} + std::sin(phi) * Vec2{-1.0, 0.0};
    const auto hit = ray_circle({0.0, 0.0}, u, c, r, 0.0);
    if (!hit) return std::nullopt;
    const double cp = hit->root_disc / r;
    return cp * cp / (std::cos(phi) * std::cos(phi));
}

/// v_perp^2 - v_perp'^2 between facing disks (radius R at the origin, R'
/// centered at distance R + d + R' straight above), leaving at arc offset y/v.
inline double direct_drop(double y, double vt, double v, double R, double Rp, double d) {
    const double th = y / v;
    const Vec2 n{std::sin(th), std::cos(th)};
    const Vec2 p = R * n;
    const Vec2 vel = v * n + vt * Vec2{std::cos(th), -std::sin(th)};
    const Vec2 u = (1.0 / vel.norm()) * vel;
    const Vec2 c{0.0, R + d + Rp};
    const auto hit = ray_circle(p, u, c, Rp, 0.0);
    if (!hit) throw Error(ErrorKind::NoIntersection, "aligned-pair flight missed the facing disk");
    const Vec2 q = p + hit->t * u;
    const double vp = -vel.dot((1.0 / Rp) * (q - c));
    return v * v - vp * vp;
}

}  // namespace detail

inline CommandOutcome cmd_coeffs_check(const ExperimentConfig& cfg, RunOutput& out) {
    const auto& b = detail::require_block(cfg.coeffs_check, "coeffs_check");
    Rng rng = make_stream(cfg.run.master_seed, 0);

    double worst_disc = 0.0;
    for (std::size_t i = 0; i < b.n_inputs; ++i) {
        const CoeffInput in{0.01 + 2.0 * uniform01(rng), 0.05 + uniform01(rng), -5.0 + 10.0 * uniform01(rng)};
        const auto k = cos_ratio_coeffs(in);
        const double t = in.tau0 / in.R;
        worst_disc = std::max(worst_disc, std::abs(std::sqrt(k.b * k.b - k.a * k.c) - t) / std::max(1.0, t * t));
    }

    Rng geo_rng = make_stream(cfg.run.master_seed, 1);
    double worst_geo = 0.0;
    std::size_t geo_points = 0;
    for (std::size_t trial = 0; trial < b.n_geometry; ++trial) {
        const double r = 0.05 + 0.3 * uniform01(geo_rng);
        const double dist = r + 0.1 + 1.5 * uniform01(geo_rng);
        const double alpha = -1.2 + 2.4 * uniform01(geo_rng);
        const Vec2 c = dist * Vec2{-std::sin(alpha), std::cos(alpha)};
        const double h = std::asin(r / dist);
        const double phi0 = alpha - h, top = std::min(alpha + h, std::numbers::pi / 2 - 1e-3);
        if (phi0 <= -std::numbers::pi / 2 + 1e-3) continue;
        const auto k = cos_ratio_coeffs({std::sqrt(dist * dist - r * r), r, std::tan(phi0)});
        for (int j = 1; j < 20; ++j) {
            const double phi = phi0 + (top - phi0) * j / 20.0;
            const auto ratio = detail::direct_cos_ratio(c, r, phi);
            if (!ratio) continue;
            worst_geo = std::max(worst_geo, std::abs(k(std::tan(phi)) - *ratio) / std::max(1.0, *ratio));
            ++geo_points;
        }
    }

    const double R = 0.35, Rp = 0.2, d = 0.15;
    Csv decay{"y", "v_t", "v_perp", "error", "ratio_to_previous"};
    double worst_ratio = 0.0;
    for (auto [y, vt] : {std::pair{0.3, 0.5}, std::pair{-0.2, 0.8}, std::pair{0.5, -0.4}}) {
        const double q = asymptotic_drop({y, vt, R, Rp, d});
        double prev = std::numeric_limits<double>::quiet_NaN();
        for (double v : b.decay_v_perps) {
            const double err = std::abs(detail::direct_drop(y, vt, v, R, Rp, d) - q);
            const double ratio = err / prev;
            if (std::isfinite(ratio)) worst_ratio = std::max(worst_ratio, ratio);
            decay.row() << y << vt << v << err << ratio;
            prev = err;
        }
    }
    out.write("asymptotic_decay.csv", decay);

    const bool p1 = worst_disc <= b.discriminant_tolerance;
    const bool p2 = geo_points > 0 && worst_geo <= b.geometry_tolerance;
    const bool p3 = worst_ratio <= b.decay_factor;
    Csv checks{"check", "n", "max_error", "tolerance", "pass"};
    checks.row() << "discriminant" << static_cast<std::uint64_t>(b.n_inputs) << worst_disc << b.discriminant_tolerance
                 << (p1 ? "PASS" : "FAIL");
    checks.row() << "two_disk_geometry" << static_cast<std::uint64_t>(geo_points) << worst_geo << b.geometry_tolerance
                 << (p2 ? "PASS" : "FAIL");
    checks.row() << "asymptotic_decay_ratio" << static_cast<std::uint64_t>(3 * b.decay_v_perps.size()) << worst_ratio
                 << b.decay_factor << (p3 ? "PASS" : "FAIL");
    out.write("coeffs_check.csv", checks);

    CommandOutcome o;
    o.summary = {{"verdict", p1 && p2 && p3 ? "PASS" : "FAIL"},
                 {"discriminant_max_error", worst_disc},
                 {"geometry_points", geo_points},
                 {"geometry_max_error", worst_geo},
                 {"asymptotic_max_ratio", worst_ratio}};
    o.status = p1 && p2 && p3 ? kPass : kVerificationFail;
    return o;
}

// ------------------------------------------------------------------ dispatch

inline const std::map<std::string, CommandFn>& commands() {
    static const std::map<std::string, CommandFn> table{
        {"simulate", cmd_simulate},
        {"check-equilibrium", cmd_check_equilibrium},
        {"verify-drift", cmd_verify_drift},
        {"estimate-mixing", cmd_estimate_mixing},
        {"jacobian-check", cmd_jacobian_check},
        {"coeffs-check", cmd_coeffs_check},
    };
    return table;
}

/// Run one command into `dir` (the config's output directory when empty) and
/// write manifest.json. Never throws for command failures; returns the exit status.
inline int run_command(const std::string& name, const ExperimentConfig& cfg, std::filesystem::path dir = {}) {
    const auto started = std::chrono::system_clock::now();
    const auto t0 = std::chrono::steady_clock::now();
    if (dir.empty()) dir = cfg.output.directory;
    RunOutput out(dir);
    CommandOutcome outcome;
    const auto it = commands().find(name);
    try {
        if (it == commands().end()) throw Error(ErrorKind::InvalidConfig, "unknown command \"" + name + "\"");
        out.write("config.json", canonical_config(cfg));
        outcome = it->second(cfg, out);
    } catch (const std::exception& e) {
        outcome.status = kExecutionError;
        outcome.summary = {{"verdict", "ERROR"},
                           {"error", name + " (master_seed " + std::to_string(cfg.run.master_seed) + "): " + e.what()}};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json manifest{{"artifact", artifact_name},
                  {"version", artifact_version},
                  {"command", name},
                  {"seed", cfg.run.master_seed},
                  {"config_hash", config_hash(cfg)},
                  {"exit_status", outcome.status},
                  {"summary", outcome.summary},
                  {"files", out.inventory()},
                  {"started_at", utc_timestamp(started)},
                  {"finished_at", utc_timestamp(std::chrono::system_clock::now())},
                  {"wall_clock_seconds", secs}};
    std::ofstream(out.directory() / "manifest.json", std::ios::binary | std::ios::trunc) << manifest.dump(2) << "\n";
    return outcome.status;
}

}  // namespace rbill::harness
