#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "rbill/chain/chain.hpp"
#include "rbill/stats/goodness_of_fit.hpp"
#include "rbill/stats/mixing.hpp"

namespace rbill {

struct EquilibriumRunSpec {
    std::uint64_t n_steps{10'000'000};
    std::uint64_t burn_in{10'000};
    std::uint64_t thinning{10};
    std::uint64_t master_seed{0};
    BoundaryState initial{{0, 0.0}, 1.0};
    std::size_t position_bins{50};
    double alpha{0.01};
};

struct EquilibriumVerdict {
    std::size_t n_samples{0};
    KsResult ks;
    double ks_critical{0.0};
    ChiSquareResult position;
    double mean_v2{0.0};
    double mean_v2_se{0.0};    ///< scaled by sqrt(tau_int) of the thinned v^2 series
    double tau_int_v2{1.0};
    double expected_v2{0.0};   ///< 1/beta
    Histogram1D v_hist;        ///< v_perp histogram of the thinned samples
    std::vector<double> position_counts;
    bool ks_pass{false};
    bool chi2_pass{false};
    bool moment_pass{false};
    bool pass() const { return ks_pass && chi2_pass && moment_pass; }
};

/// One long chain on an equal-beta table: after burn-in and thinning, test
/// v_perp against 1 - exp(-beta v^2), arc-length position against uniform,
/// and E[v^2] against 1/beta.
inline EquilibriumVerdict check_equilibrium(const ValidatedTable& table, const EquilibriumRunSpec& spec) {
    if (!table.equal_beta()) {
        std::ostringstream os;
        os << "check_equilibrium needs equal beta on all disks (found " << table.beta_min() << " .. "
           << table.beta_max() << ")";
        throw Error(ErrorKind::UnequalBeta, os.str());
    }
    if (spec.thinning < 1 || spec.n_steps <= spec.burn_in)
        throw Error(ErrorKind::InvalidConfig, "need thinning >= 1 and n_steps > burn_in");
    const double beta = table.beta(0);
    Rng rng = make_stream(spec.master_seed, 0);
    const auto tr = run_chain(table, spec.initial, spec.n_steps, rng,
                              {RecordMode::Thinned, spec.thinning, spec.burn_in}, {spec.master_seed, 0});

    EquilibriumVerdict out;
    out.n_samples = tr.states.size();
    out.expected_v2 = 1.0 / beta;
    out.v_hist = Histogram1D::v_perp_default();
    std::vector<double> v(out.n_samples), v2(out.n_samples);
    out.position_counts.assign(spec.position_bins, 0.0);
    const double len = table.boundary_length();
    for (std::size_t i = 0; i < out.n_samples; ++i) {
        const auto& s = tr.states[i];
        v[i] = s.v_perp;
        v2[i] = s.v_perp * s.v_perp;
        out.v_hist.add(s.v_perp);
        const double arc = table.arc_offset(s.point.disk) + table.radius(s.point.disk) * s.point.theta;
        auto bin = static_cast<std::size_t>(arc / len * static_cast<double>(spec.position_bins));
        out.position_counts[std::min(bin, spec.position_bins - 1)] += 1.0;
    }

    out.ks = ks_statistic(v, [beta](double x) { return equilibrium_cdf(x, beta); });
    out.ks_critical = kolmogorov_critical(spec.alpha) / std::sqrt(static_cast<double>(out.n_samples));
    out.ks_pass = out.ks.statistic <= out.ks_critical;

    const std::vector<double> expected(spec.position_bins, static_cast<double>(out.n_samples) / spec.position_bins);
    out.position = chi_square(out.position_counts, expected, spec.alpha);
    out.chi2_pass = out.position.statistic <= out.position.critical;

    RunningStats m;
    for (double x : v2) m.add(x);
    out.mean_v2 = m.mean;
    AutocorrelationSpec ac;
    ac.min_length = 0;
    ac.max_lag = 1000;
    out.tau_int_v2 = std::max(1.0, autocorrelation_time(v2, ac).tau_int);
    out.mean_v2_se = m.std_error() * std::sqrt(out.tau_int_v2);
    out.moment_pass = std::abs(out.mean_v2 - out.expected_v2) <= 3.0 * out.mean_v2_se;
    return out;
}

}  // namespace rbill
