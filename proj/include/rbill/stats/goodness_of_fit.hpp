#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "rbill/errors.hpp"
#include "rbill/stats/histogram.hpp"

namespace rbill {

/// v_perp marginal of the equal-temperature equilibrium: F(v) = 1 - exp(-beta v^2).
inline double equilibrium_cdf(double v, double beta) {
    if (v <= 0.0) return 0.0;
    return -std::expm1(-beta * v * v);
}

/// Asymptotic Kolmogorov survival function Q(t) = 2 sum (-1)^{k-1} exp(-2 k^2 t^2).
inline double kolmogorov_survival(double t) {
    if (t <= 0.0) return 1.0;
    if (t < 0.2) return 1.0;
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * t * t);
        s += (k % 2 ? 2.0 : -2.0) * term;
        if (term < 1e-17) break;
    }
    return std::clamp(s, 0.0, 1.0);
}

/// Asymptotic critical value sqrt(-ln(alpha/2)/2): 1.628 at alpha = 0.01.
inline double kolmogorov_critical(double alpha) { return std::sqrt(-0.5 * std::log(alpha / 2.0)); }

struct KsResult {
    double statistic{0.0};
    double p_value{1.0};
    std::size_t n{0};
};

/// One-sample KS distance between the empirical CDF of `samples` and `cdf`.
template <class Cdf>
KsResult ks_statistic(std::span<const double> samples, Cdf&& cdf) {
    if (samples.size() < 10) throw Error(ErrorKind::EmptySample, "KS statistic needs at least 10 samples");
    std::vector<double> x(samples.begin(), samples.end());
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = cdf(x[i]);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
    }
    const double sn = std::sqrt(n);
    return {d, kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d), x.size()};
}

/// Two-sample KS distance.
inline KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 10 || b.size() < 10) throw Error(ErrorKind::EmptySample, "KS statistic needs at least 10 samples");
    std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double na = static_cast<double>(x.size()), nb = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] <= v) ++i;
        while (j < y.size() && y[j] <= v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    const double ne = std::sqrt(na * nb / (na + nb));
    return {d, kolmogorov_survival((ne + 0.12 + 0.11 / ne) * d), static_cast<std::size_t>(na + nb)};
}

/// Two-sample critical distance at level alpha.
inline double ks_two_sample_critical(std::size_t na, std::size_t nb, double alpha) {
    return kolmogorov_critical(alpha) * std::sqrt((static_cast<double>(na) + nb) / (static_cast<double>(na) * nb));
}

struct ChiSquareResult {
    double statistic{0.0};
    double dof{0.0};
    double p_value{1.0};
    double critical{0.0};  ///< at the requested level
};

/// Pearson chi-square of observed counts against expected counts.
inline ChiSquareResult chi_square(std::span<const double> observed, std::span<const double> expected, double alpha) {
    if (observed.size() != expected.size() || observed.size() < 2)
        throw Error(ErrorKind::EmptySample, "chi-square needs matching bins (at least two)");
    double s = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double d = observed[i] - expected[i];
        s += d * d / expected[i];
    }
    const double dof = static_cast<double>(observed.size() - 1);
    boost::math::chi_squared dist(dof);
    return {s, dof, boost::math::cdf(boost::math::complement(dist, s)),
            boost::math::quantile(boost::math::complement(dist, alpha))};
}

/// Total variation between same-edge histograms, under/overflow included.
inline double tv_distance(const Histogram1D& h1, const Histogram1D& h2) {
    if (h1.edges() != h2.edges()) throw Error(ErrorKind::EdgeMismatch, "tv_distance needs identical edges");
    const auto p = h1.probabilities();
    const auto q = h2.probabilities();
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
    return 0.5 * s;
}

/// Weighted variant sum |p_i - q_i| (1 + w_i) / 2 with per-bin weights
/// [underflow, bins..., overflow] (e.g. the potential at bin centers).
inline double weighted_tv_distance(const Histogram1D& h1, const Histogram1D& h2, std::span<const double> weights) {
    if (h1.edges() != h2.edges()) throw Error(ErrorKind::EdgeMismatch, "tv_distance needs identical edges");
    const auto p = h1.probabilities();
    const auto q = h2.probabilities();
    if (weights.size() != p.size()) throw Error(ErrorKind::EdgeMismatch, "weight vector does not match bins");
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]) * (1.0 + weights[i]);
    return 0.5 * s;
}

}  // namespace rbill
