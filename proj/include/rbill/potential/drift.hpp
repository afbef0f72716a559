#pragma once
/**
 * @file drift.hpp
 * @brief Grid sweep of the drift inequality P*V <= gamma V + K.
 *
 * On a finite grid any gamma admits a finite K, so the report also demands
 * that the extreme v_perp rows contract on their own (P*V / V <= gamma there):
 * the inequality can only extend past the grid if V itself shrinks in
 * expectation where it is largest. Among admissible gamma the pair with the
 * smallest S = 2K/(1-gamma) is reported.
 *
 * K is taken from the quadrature values, so the quadrature never violates the
 * bound; the Monte Carlo estimate is the independent check. Per-state status
 * against the chosen (gamma, K):
 *  - OK         neither estimate exceeds gamma V + K;
 *  - AMBIGUOUS  an estimate exceeds it by less than its error bar (3 standard errors);
 *  - FAIL       an estimate exceeds it by more than its error bar, or a tail-row
 *               state fails to contract;
 *  - ERROR      the state could not be evaluated (message kept, sweep continues).
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "rbill/parallel.hpp"
#include "rbill/potential/potential.hpp"
#include "rbill/potential/quadrature.hpp"
#include "rbill/random.hpp"

namespace rbill {

enum class DriftStatus { Ok, Ambiguous, Fail, Error };

inline const char* to_string(DriftStatus s) {
    switch (s) {
        case DriftStatus::Ok: return "OK";
        case DriftStatus::Ambiguous: return "AMBIGUOUS";
        case DriftStatus::Fail: return "FAIL";
        case DriftStatus::Error: return "ERROR";
    }
    return "?";
}

struct DriftGridSpec {
    std::size_t n_v{40};
    double v_lo_factor{0.01};   ///< lowest v_perp = v_lo_factor * v_perp_min
    double v_hi_factor{10.0};   ///< highest v_perp = v_hi_factor * v_perp_max
    std::size_t n_theta{32};    ///< uniform boundary angles per disk
    bool densify{true};         ///< extra angles near normal-aligned boundary points
    double densify_halfwidth{0.05};
    std::size_t densify_factor{4};
    std::size_t mc_samples{2000};
    std::vector<double> gammas{default_gammas()};
    std::uint64_t master_seed{0};
    unsigned workers{1};
    QuadratureSpec quadrature{};

    static std::vector<double> default_gammas() {
        std::vector<double> g(50);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = 0.5 + (0.995 - 0.5) * static_cast<double>(i) / 49.0;
        return g;
    }
};

struct DriftState {
    BoundaryState state;
    double V{0.0};
    double pv_quad{0.0};
    double pv_quad_err{0.0};
    double pv_mc{0.0};
    double pv_mc_err{0.0};
    DriftStatus status{DriftStatus::Ok};
    std::string message;
};

struct DriftReport {
    std::vector<DriftState> grid;
    std::vector<double> gammas;
    std::vector<double> K;           ///< K(gamma) = max over grid of (P*V - gamma V)
    bool feasible{false};
    bool infeasible_by_definition{false};  ///< no gamma < 1 was offered
    double tail_ratio{0.0};          ///< max (P*V + err)/V over the extreme v_perp rows
    double gamma_star{std::numeric_limits<double>::quiet_NaN()};
    double K_star{std::numeric_limits<double>::quiet_NaN()};
    double S_star{std::numeric_limits<double>::quiet_NaN()};
    double level_v_lo{std::numeric_limits<double>::quiet_NaN()};  ///< {V <= S} in v_perp
    double level_v_hi{std::numeric_limits<double>::quiet_NaN()};
    bool K_non_increasing{true};
    bool K_convex{true};
    std::size_t n_ok{0}, n_ambiguous{0}, n_fail{0}, n_error{0};
};

/// Boundary angles on `disk` whose normal line meets another image head-on.
inline std::vector<double> aligned_angles(const ValidatedTable& table, std::size_t disk) {
    std::vector<double> out;
    const Vec2 c = table.disk(disk).center;
    for (const DiskImage& im : table.images(disk)) {
        const Vec2 w = im.center - c;
        const double theta = canonical_angle(std::atan2(w.y, w.x));
        const auto f = flight(table, {disk, theta}, 0.0);
        if (table.images(disk)[f.image].center.x == im.center.x && table.images(disk)[f.image].center.y == im.center.y)
            out.push_back(theta);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }),
              out.end());
    return out;
}

/// Grid angles for one disk: uniform, plus points at spacing base/factor within
/// the half-width of every aligned angle (the aligned angle itself included).
inline std::vector<double> drift_thetas(const ValidatedTable& table, std::size_t disk, const DriftGridSpec& spec) {
    const double base = 2.0 * std::numbers::pi / static_cast<double>(spec.n_theta);
    std::vector<double> th;
    for (std::size_t k = 0; k < spec.n_theta; ++k) th.push_back(base * static_cast<double>(k));
    if (spec.densify && spec.densify_factor > 1) {
        const double step = base / static_cast<double>(spec.densify_factor);
        for (double a : aligned_angles(table, disk)) {
            th.push_back(a);
            for (double off = step; off < spec.densify_halfwidth; off += step) {
                th.push_back(canonical_angle(a + off));
                th.push_back(canonical_angle(a - off));
            }
        }
    }
    std::sort(th.begin(), th.end());
    th.erase(std::unique(th.begin(), th.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }), th.end());
    return th;
}

inline std::vector<double> drift_v_perps(const PotentialParams& p, const DriftGridSpec& spec) {
    const double lo = spec.v_lo_factor * p.v_perp_min(), hi = spec.v_hi_factor * p.v_perp_max;
    std::vector<double> v(spec.n_v);
    for (std::size_t i = 0; i < spec.n_v; ++i)
        v[i] = spec.n_v == 1 ? lo : std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (spec.n_v - 1.0));
    return v;
}

inline DriftReport verify_drift(const ValidatedTable& table, const PotentialParams& params, const DriftGridSpec& spec) {
    params.check(table.beta_min());
    if (spec.n_v < 2 || spec.n_theta < 1)
        throw Error(ErrorKind::InvalidConfig, "drift grid needs n_v >= 2 and n_theta >= 1");
    const LyapunovPotential V{params};
    const auto vs = drift_v_perps(params, spec);

    DriftReport rep;
    rep.gammas = spec.gammas;
    for (std::size_t d = 0; d < table.disk_count(); ++d)
        for (double th : drift_thetas(table, d, spec))
            for (double v : vs) {
                DriftState g;
                g.state = {{d, th}, v};
                rep.grid.push_back(std::move(g));
            }

    parallel_for(rep.grid.size(), spec.workers, [&](std::size_t i) {
        DriftState& g = rep.grid[i];
        g.V = V(g.state.v_perp);
        try {
            const auto q = pv_quadrature(table, g.state, V, spec.quadrature);
            g.pv_quad = q.value;
            g.pv_quad_err = q.error;
            Rng rng = make_stream(spec.master_seed, i);
            const auto m = pv_monte_carlo(table, g.state, V, spec.mc_samples, rng);
            g.pv_mc = m.value;
            g.pv_mc_err = m.std_error;
        } catch (const std::exception& e) {
            g.status = DriftStatus::Error;
            g.message = e.what();
        }
    });

    const double v_lo = vs.front(), v_hi = vs.back();
    for (const auto& g : rep.grid) {
        if (g.status == DriftStatus::Error) continue;
        if (g.state.v_perp == v_lo || g.state.v_perp == v_hi)
            rep.tail_ratio = std::max(rep.tail_ratio, (g.pv_quad + g.pv_quad_err) / g.V);
    }

    rep.K.assign(rep.gammas.size(), -std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < rep.gammas.size(); ++k)
        for (const auto& g : rep.grid)
            if (g.status != DriftStatus::Error) rep.K[k] = std::max(rep.K[k], g.pv_quad - rep.gammas[k] * g.V);
    for (std::size_t k = 1; k < rep.K.size(); ++k) {
        if (rep.gammas[k] > rep.gammas[k - 1] && rep.K[k] > rep.K[k - 1]) rep.K_non_increasing = false;
        if (k + 1 < rep.K.size()) {
            const double mid = 0.5 * (rep.K[k - 1] + rep.K[k + 1]);
            if (rep.K[k] - mid > 1e-12 * std::max(std::abs(rep.K[k]), std::abs(mid))) rep.K_convex = false;
        }
    }

    std::size_t best = rep.gammas.size();
    double best_S = std::numeric_limits<double>::infinity();
    rep.infeasible_by_definition = true;
    for (std::size_t k = 0; k < rep.gammas.size(); ++k) {
        const double gam = rep.gammas[k];
        if (!(gam < 1.0)) continue;
        rep.infeasible_by_definition = false;
        if (!(gam >= rep.tail_ratio) || !std::isfinite(rep.K[k])) continue;
        const double S = 2.0 * rep.K[k] / (1.0 - gam);
        if (S < best_S) {
            best_S = S;
            best = k;
        }
    }

    // statuses are judged against the best admissible gamma, or the largest
    // gamma < 1 when none is admissible (tail rows that do not contract then fail)
    std::size_t judge = best;
    if (judge == rep.gammas.size())
        for (std::size_t k = 0; k < rep.gammas.size(); ++k)
            if (rep.gammas[k] < 1.0 && (judge == rep.gammas.size() || rep.gammas[k] > rep.gammas[judge])) judge = k;

    if (best < rep.gammas.size()) {
        rep.gamma_star = rep.gammas[best];
        rep.K_star = rep.K[best];
        rep.S_star = best_S;
        if (best_S >= params.plateau()) {
            rep.level_v_lo = 1.0 / best_S;
            rep.level_v_hi = std::sqrt(std::log(best_S) / params.epsilon);
        }
    }
    if (judge < rep.gammas.size()) {
        const double gam = rep.gammas[judge], K = rep.K[judge];
        for (auto& g : rep.grid) {
            if (g.status == DriftStatus::Error) continue;
            const double bound = gam * g.V + K;
            const bool tail_row = g.state.v_perp == v_lo || g.state.v_perp == v_hi;
            if (g.pv_mc - 3.0 * g.pv_mc_err > bound || (tail_row && (g.pv_quad + g.pv_quad_err) / g.V > gam))
                g.status = DriftStatus::Fail;
            else if (g.pv_quad > bound || g.pv_mc > bound)
                g.status = DriftStatus::Ambiguous;
            else
                g.status = DriftStatus::Ok;
        }
    } else {
        for (auto& g : rep.grid)
            if (g.status != DriftStatus::Error) g.status = DriftStatus::Fail;
    }

    for (const auto& g : rep.grid) {
        switch (g.status) {
            case DriftStatus::Ok: ++rep.n_ok; break;
            case DriftStatus::Ambiguous: ++rep.n_ambiguous; break;
            case DriftStatus::Fail: ++rep.n_fail; break;
            case DriftStatus::Error: ++rep.n_error; break;
        }
    }
    rep.feasible = best < rep.gammas.size() && rep.n_fail == 0 && rep.n_error == 0;
    return rep;
}

}  // namespace rbill
