#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "rbill/chain/ensemble.hpp"
#include "rbill/stats/equilibrium.hpp"
#include "rbill/stats/goodness_of_fit.hpp"
#include "rbill/stats/histogram.hpp"
#include "rbill/stats/mixing.hpp"

#include "support/oracles.hpp"

using namespace rbill;
using namespace rbill::oracle;

namespace {

const ValidatedTable& equal_table() {
    static const ValidatedTable t = validate_table(reference_three_disk_config(1.0, 1.0, 1.0));
    return t;
}


Histogram1D filled(const std::vector<double>& xs) {
    Histogram1D h = Histogram1D::linear(0.0, 10.0, 10);
    for (double x : xs) h.add(x);
    return h;
}

}  // namespace

TEST(EquilibriumCdf, Limits) {
    EXPECT_EQ(equilibrium_cdf(0.0, 1.0), 0.0);
    EXPECT_EQ(equilibrium_cdf(1e3, 1.0), 1.0);
}

TEST(EquilibriumCdf, MatchesIntegratedDensity) {
    using boost::math::quadrature::gauss_kronrod;
    for (double beta : {0.5, 2.0}) {
        for (int i = 1; i <= 10; ++i) {
            const double v = 0.25 * i;
            auto rho = [beta](double x) { return 2.0 * beta * x * std::exp(-beta * x * x); };
            const double q = gauss_kronrod<double, 61>::integrate(rho, 0.0, v, 10, 1e-14);
            EXPECT_NEAR(q, equilibrium_cdf(v, beta), 1e-10);
        }
    }
}

TEST(EquilibriumCdf, Median) {
    for (double beta : {0.3, 1.0, 4.0}) EXPECT_NEAR(equilibrium_cdf(std::sqrt(std::log(2.0) / beta), beta), 0.5, 1e-15);
}

TEST(Ks, InverseTransformSamplesPass) {
    int passes = 0;
    const std::size_t n = 100000;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng = make_stream(seed, 0);
        std::vector<double> x(n);
        for (auto& v : x) v = sample_equilibrium_v_perp(1.0, rng);
        const auto ks = ks_statistic(x, [](double v) { return equilibrium_cdf(v, 1.0); });
        if (ks.statistic <= 1.63 / std::sqrt(static_cast<double>(n))) ++passes;
    }
    EXPECT_GE(passes, 3);
}

TEST(Ks, IdenticalSamplesAreFarFromContinuousCdf) {
    std::vector<double> x(100, 0.7);
    EXPECT_GE(ks_statistic(x, [](double v) { return equilibrium_cdf(v, 1.0); }).statistic, 0.5);
}

TEST(Ks, InvariantUnderMonotoneMaps) {
    Rng rng = make_stream(3, 0);
    std::vector<double> x(5000), y(5000);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = sample_equilibrium_v_perp(1.0, rng);
        y[i] = std::log(x[i]) * 3.0 + 1.0;
    }
    const double d1 = ks_statistic(x, [](double v) { return equilibrium_cdf(v, 1.0); }).statistic;
    const double d2 = ks_statistic(y, [](double u) { return equilibrium_cdf(std::exp((u - 1.0) / 3.0), 1.0); }).statistic;
    EXPECT_NEAR(d1, d2, 1e-12);
}

TEST(Ks, TooFewSamples) {
    std::vector<double> x(5, 1.0);
    EXPECT_THROW(ks_statistic(x, [](double) { return 0.5; }), Error);
}

TEST(Ks, CriticalValue) { EXPECT_NEAR(kolmogorov_critical(0.01), 1.6276, 1e-4); }

TEST(Ks, TwoSampleSameLaw) {
    Rng rng = make_stream(4, 0);
    std::vector<double> a(20000), b(30000);
    for (auto& v : a) v = sample_equilibrium_v_perp(1.0, rng);
    for (auto& v : b) v = sample_equilibrium_v_perp(1.0, rng);
    EXPECT_LE(ks_two_sample(a, b).statistic, ks_two_sample_critical(a.size(), b.size(), 0.01));
    for (auto& v : b) v *= 1.1;
    EXPECT_GT(ks_two_sample(a, b).statistic, ks_two_sample_critical(a.size(), b.size(), 0.01));
}

TEST(ChiSquare, CriticalValueAndUniformCounts) {
    std::vector<double> obs(50, 100.0), exp(50, 100.0);
    const auto r = chi_square(obs, exp, 0.01);
    EXPECT_EQ(r.statistic, 0.0);
    EXPECT_NEAR(r.critical, 74.919, 1e-3);
    EXPECT_NEAR(r.p_value, 1.0, 1e-12);
}

TEST(Histogram, CountsAddUp) {
    Histogram1D h = Histogram1D::v_perp_default();
    for (double v : {1e-6, 1e-4, 0.5, 3.0, 999.0, 1e3, 1e5}) h.add(v);
    std::uint64_t s = h.underflow() + h.overflow();
    for (auto c : h.counts()) s += c;
    EXPECT_EQ(s, h.total());
    EXPECT_EQ(h.underflow(), 1u);
    EXPECT_EQ(h.overflow(), 2u);
    double p = 0.0;
    for (double q : h.probabilities()) p += q;
    EXPECT_NEAR(p, 1.0, 1e-15);
}

TEST(Histogram, MergeIsCommutativeAndAssociative) {
    const auto a = filled({1, 2, 3}), b = filled({4, 4, 11}), c = filled({-1, 5});
    auto ab = a, ba = b;
    ab.merge(b);
    ba.merge(a);
    EXPECT_EQ(ab, ba);
    auto ab_c = ab, bc = b;
    ab_c.merge(c);
    bc.merge(c);
    auto a_bc = a;
    a_bc.merge(bc);
    EXPECT_EQ(ab_c, a_bc);
    EXPECT_THROW(ab.merge(Histogram1D::linear(0.0, 1.0, 10)), Error);
}

TEST(Tv, Basics) {
    const auto a = filled({1, 1, 2, 2});
    EXPECT_EQ(tv_distance(a, a), 0.0);
    EXPECT_NEAR(tv_distance(a, filled({7, 8, 8, 9})), 1.0, 1e-15);
    EXPECT_NEAR(tv_distance(a, filled({1, 2, 7, 8})), 0.5, 1e-15);
    EXPECT_NEAR(tv_distance(filled({-5}), filled({50})), 1.0, 1e-15);
    EXPECT_THROW(tv_distance(a, Histogram1D::linear(0.0, 1.0, 10)), Error);
}

TEST(Tv, MetricSpotChecks) {
    Rng rng = make_stream(5, 0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> xs[3];
        for (auto& x : xs)
            for (int i = 0; i < 40; ++i) x.push_back(10.0 * uniform01(rng) * uniform01(rng));
        const auto a = filled(xs[0]), b = filled(xs[1]), c = filled(xs[2]);
        EXPECT_EQ(tv_distance(a, b), tv_distance(b, a));
        EXPECT_LE(tv_distance(a, c), tv_distance(a, b) + tv_distance(b, c) + 1e-15);
    }
}

TEST(Mixing, TwoStateRateRecovered) {
    const TwoStateModel from0{0.1, 0.15, 0}, from1{0.1, 0.15, 1};
    MixingSpec spec;
    spec.ensemble.n_chains = 100000;
    spec.ensemble.n_steps = 30;
    spec.ensemble.master_seed = 11;
    const auto est = estimate_mixing_tv(from0, from1, spec);
    EXPECT_NEAR(est.alpha_hat, from0.rate(), 0.1 * from0.rate());
    EXPECT_TRUE(est.pass());
    EXPECT_NEAR(est.values[0], 1.0, 1e-15);
}

TEST(Mixing, SameLawGivesWindowEmpty) {
    const TwoStateModel m{0.1, 0.15, 0};
    MixingSpec spec;
    spec.ensemble.n_chains = 20000;
    spec.ensemble.n_steps = 10;
    try {
        estimate_mixing_tv(m, m, spec);
        FAIL();
    } catch (const WindowEmptyError& e) {
        EXPECT_EQ(e.kind(), ErrorKind::WindowEmpty);
        EXPECT_EQ(e.curve().values.size(), 11u);
        for (double tv : e.curve().values) EXPECT_LT(tv, 0.02);
        EXPECT_GT(e.curve().noise_floor, 0.0);
    }
}

TEST(Mixing, BilliardFromPointMassDecays) {
    const auto& t = equal_table();
    const BilliardModel point{&t, InitialDistribution::point_mass({{0, 1.0}, 5.0})};
    const BilliardModel eq{&t, InitialDistribution::equilibrium(1.0)};
    MixingSpec spec;
    spec.ensemble.n_chains = 50000;
    spec.ensemble.n_steps = 40;
    spec.window.lower = 0.05;
    const auto est = estimate_mixing_tv(point, eq, spec);
    EXPECT_TRUE(est.pass()) << est.alpha_hat << " [" << est.ci_lo << ", " << est.ci_hi << "]";
}

TEST(Autocorrelation, IidIsOne) {
    const auto x = ar1(0.0, 200000, 1);
    EXPECT_NEAR(autocorrelation_time(x).tau_int, 1.0, 0.1);
}

TEST(Autocorrelation, Ar1) {
    const auto x = ar1(0.9, 1000000, 2);
    const auto est = autocorrelation_time(x);
    EXPECT_NEAR(est.tau_int, 19.0, 0.15 * 19.0);
    EXPECT_NEAR(est.alpha_hat, 1.0 / est.tau_int, 1e-15);
    EXPECT_LT(est.ci_lo, est.alpha_hat);
}

TEST(Autocorrelation, TooShort) {
    const auto x = ar1(0.5, 1000, 3);
    try {
        autocorrelation_time(x);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::TooShort);
    }
}

TEST(CheckEquilibrium, RejectsUnequalBeta) {
    const auto t = validate_table(reference_three_disk_config(1.0, 2.0, 1.0));
    try {
        check_equilibrium(t, {});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::UnequalBeta);
    }
}

TEST(CheckEquilibrium, ShortRunPasses) {
    EquilibriumRunSpec spec;
    spec.n_steps = 1'000'000;
    spec.master_seed = 3;
    const auto v = check_equilibrium(equal_table(), spec);
    EXPECT_TRUE(v.pass()) << v.ks.statistic << " " << v.position.statistic << " " << v.mean_v2 << "+-"
                          << v.mean_v2_se;
    EXPECT_EQ(v.n_samples, 99000u);
}

TEST(CheckEquilibrium, FarStartPassesAfterBurnIn) {
    EquilibriumRunSpec spec;
    spec.n_steps = 1'000'000;
    spec.master_seed = 4;
    spec.initial = {{1, 2.0}, 100.0};
    EXPECT_TRUE(check_equilibrium(equal_table(), spec).pass());
}
