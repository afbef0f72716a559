#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "rbill/potential/coefficients.hpp"
#include "rbill/potential/drift.hpp"
#include "rbill/potential/potential.hpp"
#include "rbill/potential/quadrature.hpp"

#include "support/oracles.hpp"

using namespace rbill;
using namespace rbill::oracle;

namespace {


const ValidatedTable& equal_table() {
    static const ValidatedTable t = validate_table(reference_three_disk_config(1.0, 1.0, 1.0));
    return t;
}

const ValidatedTable& two_temp_table() {
    static const ValidatedTable t = validate_table(reference_three_disk_config(1.0, 2.0, 2.0));
    return t;
}


}  // namespace

TEST(Potential, ContinuousAtThresholds) {
    const PotentialParams p{0.1, 3.0};
    EXPECT_NEAR(potential_value(p.v_perp_min(), p), p.plateau(), 1e-12 * p.plateau());
    EXPECT_NEAR(potential_value(p.v_perp_max, p), p.plateau(), 1e-12 * p.plateau());
    EXPECT_NEAR(std::exp(p.epsilon * p.v_perp_max * p.v_perp_max), 1.0 / p.v_perp_min(), 1e-12 * p.plateau());
}

TEST(Potential, GrowthBranchFormula) {
    const PotentialParams p{0.1, 3.0};
    EXPECT_NEAR(potential_value(6.0, p), std::exp(0.4 * 9.0), 1e-12 * std::exp(3.6));
}

TEST(Potential, BranchMonotonicity) {
    const PotentialParams p{0.1, 3.0};
    double prev = potential_value(1e-6, p);
    for (int i = 1; i <= 1000; ++i) {
        const double v = 1e-6 * std::pow(p.v_perp_min() / 1e-6, i / 1000.0);
        const double val = potential_value(v, p);
        EXPECT_LE(val, prev * (1 + 1e-15));
        prev = val;
    }
    prev = potential_value(p.v_perp_max, p);
    for (int i = 1; i <= 1000; ++i) {
        const double v = p.v_perp_max * std::pow(10.0, i / 1000.0);
        const double val = potential_value(v, p);
        EXPECT_GE(val, prev);
        prev = val;
    }
}

TEST(Potential, ParameterChecks) {
    EXPECT_NO_THROW((PotentialParams{0.1, 3.0}.check(1.0)));
    EXPECT_THROW((PotentialParams{2.0, 3.0}.check(1.0)), Error);
    EXPECT_THROW((PotentialParams{0.1, 0.1}.check(1.0)), Error);
    EXPECT_THROW((PotentialParams{-0.1, 3.0}.check(1.0)), Error);
}

TEST(CosRatio, DiscriminantIdentity) {
    Rng rng = make_stream(1, 0);
    for (int i = 0; i < 1000; ++i) {
        const CoeffInput in{0.01 + 2.0 * uniform01(rng), 0.05 + uniform01(rng), -5.0 + 10.0 * uniform01(rng)};
        const auto k = cos_ratio_coeffs(in);
        const double t = in.tau0 / in.R;
        EXPECT_NEAR(std::sqrt(k.b * k.b - k.a * k.c), t, 1e-12 * std::max(1.0, t * t)) << i;
        EXPECT_NEAR(k(in.w0), 0.0, 1e-12 * std::max(1.0, t * t * (1 + in.w0 * in.w0)));
    }
}

TEST(CosRatio, MatchesTwoDiskGeometry) {
    Rng rng = make_stream(2, 0);
    int checked = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const double r = 0.05 + 0.3 * uniform01(rng);
        const double dist = r + 0.1 + 1.5 * uniform01(rng);
        const double alpha = -1.2 + 2.4 * uniform01(rng);
        const Vec2 c = dist * Vec2{-std::sin(alpha), std::cos(alpha)};
        const double h = std::asin(r / dist);
        const double phi0 = alpha - h, phi1 = alpha + h;
        if (phi0 <= -pi / 2 + 1e-3) continue;
        // the smaller tangent angle grazes with phi' = -pi/2 in this convention
        const auto graze = shoot(c, r, phi0 + 1e-9);
        ASSERT_TRUE(graze.hit);
        EXPECT_LT(graze.sin_phi_in, -0.999);
        const auto k = cos_ratio_coeffs({std::sqrt(dist * dist - r * r), r, std::tan(phi0)});
        const double top = std::min(phi1, pi / 2 - 1e-3);
        for (int j = 1; j < 20; ++j) {
            const double phi = phi0 + (top - phi0) * j / 20.0;
            const auto s = shoot(c, r, phi);
            ASSERT_TRUE(s.hit);
            const double ratio = s.cos_phi_in * s.cos_phi_in / (std::cos(phi) * std::cos(phi));
            EXPECT_NEAR(k(std::tan(phi)), ratio, 1e-9 * std::max(1.0, ratio));
            ++checked;
        }
    }
    EXPECT_GT(checked, 1000);
}

TEST(Asymptotic, NormalShotHasNoDrop) {
    EXPECT_EQ(asymptotic_drop({0.0, 0.0, 0.35, 0.2, 0.3}), 0.0);
}

TEST(Asymptotic, EvenQuadraticForm) {
    Rng rng = make_stream(3, 0);
    for (int i = 0; i < 100; ++i) {
        const AsymptoticInput a{uniform01(rng) - 0.5, 2.0 * uniform01(rng) - 1.0, 0.3, 0.2, 0.15};
        AsymptoticInput b = a;
        b.y = -a.y;
        b.v_t = -a.v_t;
        EXPECT_DOUBLE_EQ(asymptotic_drop(a), asymptotic_drop(b));
    }
}

TEST(Asymptotic, ErrorDecaysOnAlignedPair) {
    const double R = 0.35, Rp = 0.2, d = 0.15;
    for (auto [y, vt] : {std::pair{0.3, 0.5}, std::pair{-0.2, 0.8}, std::pair{0.5, -0.4}}) {
        const double q = asymptotic_drop({y, vt, R, Rp, d});
        std::vector<double> err;
        for (double v : {10.0, 20.0, 40.0, 80.0}) err.push_back(std::abs(exact_drop(y, vt, v, R, Rp, d) - q));
        for (std::size_t i = 1; i < err.size(); ++i) EXPECT_LT(err[i], err[i - 1]);
        EXPECT_LE(err[2], 0.75 * err[1]);
        EXPECT_LE(err[3], 0.75 * err[2]);
    }
}

TEST(Quadrature, ConstantPotentialIntegratesToConstant) {
    const auto& t = equal_table();
    for (double v : {0.01, 0.5, 3.0, 20.0}) {
        const auto r = pv_quadrature(t, {{1, 0.7}, v}, ConstantPotential{1.0});
        EXPECT_NEAR(r.value, 1.0, 1e-8) << v;
        EXPECT_LT(r.error, 1e-6);
        if (v < 1.0) {
            EXPECT_GT(r.pieces, 1u);
        }
    }
}

TEST(Quadrature, ScanFindsNothingEnumerationMissed) {
    const auto& t = equal_table();
    Rng rng = make_stream(4, 0);
    for (int i = 0; i < 20; ++i) {
        const BoundaryState s{{static_cast<std::size_t>(i % 3), 2 * pi * uniform01(rng)}, 0.05 + 4 * uniform01(rng)};
        const auto r = pv_quadrature(t, s, LyapunovPotential{{0.1, 3.0}});
        EXPECT_EQ(r.scan_splits, 0u);
    }
}

TEST(Quadrature, AgreesWithMonteCarlo) {
    const auto& t = two_temp_table();
    const LyapunovPotential V{{0.1, 3.0}};
    Rng rng = make_stream(5, 0);
    int agree = 0;
    const int n = 20;
    for (int i = 0; i < n; ++i) {
        const double v = std::exp(std::log(0.004) + (std::log(30.0) - std::log(0.004)) * uniform01(rng));
        const BoundaryState s{{static_cast<std::size_t>(i % 3), 2 * pi * uniform01(rng)}, v};
        const auto q = pv_quadrature(t, s, V);
        Rng mc_rng = make_stream(6, i);
        const auto m = pv_monte_carlo(t, s, V, 20000, mc_rng);
        if (std::abs(q.value - m.value) <= 3.0 * std::hypot(q.error, m.std_error)) ++agree;
    }
    EXPECT_GE(agree, n - 1);
}

TEST(Quadrature, SmallVelocityContracts) {
    const auto& t = equal_table();
    const PotentialParams p{0.1, 3.0};
    const double v = p.v_perp_min() / 10.0;
    for (double th : {0.3, 1.9, 4.0}) {
        const auto r = pv_quadrature(t, {{0, th}, v}, LyapunovPotential{p});
        EXPECT_LT(r.value / potential_value(v, p), 1.0);
    }
}

TEST(Quadrature, TailDivergenceWhenEpsilonReachesBeta) {
    const auto& t = equal_table();
    try {
        pv_quadrature(t, {{0, 0.1}, 1.0}, LyapunovPotential{{1.0, 3.0}});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::TailDivergence);
    }
}

TEST(MonteCarlo, ConstantIsExact) {
    const auto& t = equal_table();
    Rng rng = make_stream(7, 0);
    const auto m = pv_monte_carlo(t, {{0, 0.1}, 1.0}, ConstantPotential{2.5}, 1000, rng);
    EXPECT_EQ(m.value, 2.5);
    EXPECT_EQ(m.std_error, 0.0);
}

TEST(MonteCarlo, StdErrorScalesAsRootN) {
    const auto& t = equal_table();
    const LyapunovPotential V{{0.1, 3.0}};
    const BoundaryState s{{2, 1.0}, 8.0};
    double ratio_sum = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        Rng a = make_stream(100 + rep, 0), b = make_stream(200 + rep, 0);
        ratio_sum += pv_monte_carlo(t, s, V, 4000, b).std_error / pv_monte_carlo(t, s, V, 2000, a).std_error;
    }
    EXPECT_NEAR(ratio_sum / 20.0, 1.0 / std::sqrt(2.0), 0.2 / std::sqrt(2.0));
}

TEST(MonteCarlo, EquilibriumExpectationIsStationary) {
    const auto& t = equal_table();
    const LyapunovPotential V{{0.1, 3.0}};
    Rng rng = make_stream(8, 0);
    RunningStats diff;
    for (int i = 0; i < 200000; ++i) {
        const auto s = sample_initial(t, InitialDistribution::equilibrium(1.0), rng);
        diff.add(V(chain_step(t, s, rng).first.v_perp) - V(s.v_perp));
    }
    EXPECT_LT(std::abs(diff.mean), 3.0 * diff.std_error());
}

TEST(Drift, CoarseSweepEqualBeta) {
    DriftGridSpec spec;
    spec.n_v = 10;
    spec.n_theta = 8;
    spec.mc_samples = 1000;
    const auto rep = verify_drift(equal_table(), {0.1, 3.0}, spec);
    EXPECT_TRUE(rep.feasible);
    EXPECT_TRUE(rep.K_non_increasing);
    EXPECT_EQ(rep.n_fail, 0u);
    EXPECT_EQ(rep.n_error, 0u);
    EXPECT_LT(rep.gamma_star, 1.0);
    EXPECT_LT(rep.tail_ratio, 1.0);
    EXPECT_GT(rep.grid.size(), 3u * 8u * 10u);
    std::printf("gamma*=%g K*=%g S*=%g tail=%g amb=%zu/%zu\n", rep.gamma_star, rep.K_star, rep.S_star,
                rep.tail_ratio, rep.n_ambiguous, rep.grid.size());
}

TEST(Drift, GammaGridAtOrAboveOneIsInfeasibleByDefinition) {
    DriftGridSpec spec;
    spec.n_v = 3;
    spec.n_theta = 2;
    spec.densify = false;
    spec.mc_samples = 1000;
    spec.gammas = {1.0, 1.5};
    const auto rep = verify_drift(equal_table(), {0.1, 3.0}, spec);
    EXPECT_TRUE(rep.infeasible_by_definition);
    EXPECT_FALSE(rep.feasible);
}

TEST(Drift, AlignedAnglesAreHeadOn) {
    const auto& t = equal_table();
    for (std::size_t d = 0; d < t.disk_count(); ++d) {
        const auto al = aligned_angles(t, d);
        EXPECT_FALSE(al.empty());
        for (double th : al) EXPECT_NEAR(flight(t, {d, th}, 0.0).phi_in, 0.0, 1e-9);
    }
}
