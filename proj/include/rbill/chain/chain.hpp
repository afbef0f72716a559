#pragma once
/**
 * @file chain.hpp
 * @brief The boundary Markov chain and its suspension-flow clock.
 *
 * One step: draw phi from the thermostat law of the disk being left, fly,
 * and update v_perp by the cosine ratio. The physical time of the flight is
 * tau * cos(phi) / v_perp (flight length over speed v_perp / cos(phi)).
 */

#include <cmath>
#include <cstdint>
#include <numbers>
#include <sstream>
#include <utility>
#include <vector>

#include "rbill/chain/angle.hpp"
#include "rbill/geometry/flight.hpp"
#include "rbill/random.hpp"
#include "rbill/stats/histogram.hpp"

namespace rbill {

struct StepRecord {
    double phi{0.0};
    double phi_in{0.0};
    double tau{0.0};
    double dt{0.0};
};

inline std::pair<BoundaryState, StepRecord> chain_step(const ValidatedTable& table, const BoundaryState& state,
                                                       Rng& rng) {
    const double beta = table.beta(state.point.disk);
    const double phi = sample_angle({state.v_perp, beta}, rng);
    if (!(std::abs(phi) < std::numbers::pi / 2)) {
        std::ostringstream os;
        os << "v_perp " << state.v_perp << " too small to resolve the outgoing angle";
        throw Error(ErrorKind::VPerpUnderflow, os.str());
    }
    auto [next, f] = enhanced_step(table, state, phi);
    return {next, StepRecord{phi, f.phi_in, f.tau, f.tau * std::cos(phi) / state.v_perp}};
}

enum class RecordMode { Full, Thinned, StatsOnly };

struct RecordingOptions {
    RecordMode mode{RecordMode::Full};
    std::uint64_t thin{1};     ///< keep every thin-th step (Thinned mode)
    std::uint64_t burn_in{0};  ///< steps discarded before recording/statistics
};

struct SeedProvenance {
    std::uint64_t master_seed{0};
    std::uint64_t stream_id{0};
};

struct ChainTrajectory {
    std::vector<BoundaryState> states;             ///< recorded post-step states
    std::vector<std::pair<double, double>> angles; ///< (phi, phi_in) of the recorded steps
    std::vector<double> times;                     ///< cumulative suspension time at recorded steps
    std::vector<std::uint64_t> steps;              ///< step index (1-based) of each record
    RunningStats v_perp_stats;                     ///< over every post-burn-in step
    RunningStats v_perp_sq_stats;
    double elapsed_time{0.0};
    BoundaryState final_state;
    SeedProvenance seed;
};

/// Iterate chain_step. Errors are rethrown with the failing step attached.
inline ChainTrajectory run_chain(const ValidatedTable& table, const BoundaryState& initial, std::uint64_t n_steps,
                                 Rng& rng, const RecordingOptions& opts = {}, SeedProvenance seed = {}) {
    if (n_steps < 1) throw Error(ErrorKind::InvalidConfig, "run_chain needs n_steps >= 1");
    if (opts.mode == RecordMode::Thinned && opts.thin < 1)
        throw Error(ErrorKind::InvalidConfig, "thinning factor must be >= 1");
    ChainTrajectory out;
    out.seed = seed;
    if (opts.mode != RecordMode::StatsOnly) {
        const std::uint64_t kept = opts.mode == RecordMode::Full ? n_steps : n_steps / opts.thin + 1;
        out.states.reserve(kept);
        out.angles.reserve(kept);
        out.times.reserve(kept);
        out.steps.reserve(kept);
    }
    BoundaryState s = initial;
    double clock = 0.0;
    for (std::uint64_t i = 1; i <= n_steps; ++i) {
        StepRecord rec;
        try {
            std::tie(s, rec) = chain_step(table, s, rng);
        } catch (const Error& e) {
            std::ostringstream os;
            os << "step " << i << " (seed " << seed.master_seed << ", stream " << seed.stream_id << "): " << e.what();
            throw Error(e.kind(), os.str());
        }
        clock += rec.dt;
        if (i <= opts.burn_in) continue;
        out.v_perp_stats.add(s.v_perp);
        out.v_perp_sq_stats.add(s.v_perp * s.v_perp);
        const std::uint64_t j = i - opts.burn_in;
        const bool keep = opts.mode == RecordMode::Full || (opts.mode == RecordMode::Thinned && j % opts.thin == 0);
        if (keep) {
            out.states.push_back(s);
            out.angles.emplace_back(rec.phi, rec.phi_in);
            out.times.push_back(clock);
            out.steps.push_back(i);
        }
    }
    out.elapsed_time = clock;
    out.final_state = s;
    return out;
}

/// Initial laws supported by ensembles.
struct InitialDistribution {
    enum class Kind { PointMass, Equilibrium, UniformBox };
    Kind kind{Kind::PointMass};
    BoundaryState point{};        ///< PointMass
    double beta{1.0};             ///< Equilibrium
    double v_lo{0.0}, v_hi{1.0};  ///< UniformBox: v_perp uniform on [v_lo, v_hi]

    static InitialDistribution point_mass(BoundaryState s) { return {Kind::PointMass, s, 1.0, 0.0, 1.0}; }
    static InitialDistribution equilibrium(double beta) { return {Kind::Equilibrium, {}, beta, 0.0, 1.0}; }
    static InitialDistribution uniform_box(double lo, double hi) { return {Kind::UniformBox, {}, 1.0, lo, hi}; }
};

/// Position uniform in arc length over the whole boundary.
inline BoundaryPoint sample_uniform_boundary(const ValidatedTable& table, Rng& rng) {
    double u = uniform01(rng) * table.boundary_length();
    std::size_t i = 0;
    for (; i + 1 < table.disk_count(); ++i) {
        const double len = 2.0 * std::numbers::pi * table.radius(i);
        if (u < len) break;
        u -= len;
    }
    return {i, canonical_angle(u / table.radius(i))};
}

/// v_perp with density 2 beta v exp(-beta v^2), by inversion.
inline double sample_equilibrium_v_perp(double beta, Rng& rng) {
    double u = uniform01(rng);
    while (u <= 0.0) u = uniform01(rng);
    return std::sqrt(-std::log(u) / beta);
}

inline BoundaryState sample_initial(const ValidatedTable& table, const InitialDistribution& d, Rng& rng) {
    switch (d.kind) {
        case InitialDistribution::Kind::PointMass: return d.point;
        case InitialDistribution::Kind::Equilibrium: {
            const BoundaryPoint p = sample_uniform_boundary(table, rng);
            return {p, sample_equilibrium_v_perp(d.beta, rng)};
        }
        case InitialDistribution::Kind::UniformBox: {
            const BoundaryPoint p = sample_uniform_boundary(table, rng);
            double v = d.v_lo + (d.v_hi - d.v_lo) * uniform01(rng);
            if (!(v > 0.0)) v = d.v_hi;
            return {p, v};
        }
    }
    return d.point;
}

}  // namespace rbill
