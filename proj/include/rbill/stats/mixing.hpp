#pragma once
/**
 * @file mixing.hpp
 * @brief Empirical mixing rates: total-variation decay between two ensembles
 * and the integrated autocorrelation time of a single trajectory.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "rbill/chain/ensemble.hpp"
#include "rbill/errors.hpp"
#include "rbill/stats/goodness_of_fit.hpp"

namespace rbill {

struct MixingEstimate {
    std::string method;          ///< "tv-decay" or "autocorrelation"
    std::vector<double> x;       ///< step index n (tv-decay) or lag (autocorrelation)
    std::vector<double> values;  ///< TV(n) or normalized autocorrelation rho(lag)
    std::vector<double> weighted_values;  ///< V-weighted TV(n), when requested
    double alpha_hat{std::numeric_limits<double>::quiet_NaN()};
    double ci_lo{std::numeric_limits<double>::quiet_NaN()};
    double ci_hi{std::numeric_limits<double>::quiet_NaN()};
    double gamma_tilde{std::numeric_limits<double>::quiet_NaN()};  ///< exp(-alpha_hat)
    std::size_t window_lo{0};    ///< first index used by the fit
    std::size_t window_hi{0};    ///< one past the last index used
    double tau_int{std::numeric_limits<double>::quiet_NaN()};
    double tau_int_err{std::numeric_limits<double>::quiet_NaN()};
    double noise_floor{0.0};     ///< expected TV between two samples of one law

    bool pass() const { return alpha_hat > 0.0 && ci_lo > 0.0; }
};

/// Raised when TV never enters the fit window; the raw curve is kept.
class WindowEmptyError : public Error {
public:
    WindowEmptyError(std::string msg, MixingEstimate curve)
        : Error(ErrorKind::WindowEmpty, std::move(msg)), curve_(std::move(curve)) {}
    const MixingEstimate& curve() const { return curve_; }

private:
    MixingEstimate curve_;
};

struct LinearFit {
    double slope{0.0};
    double intercept{0.0};
    double slope_se{0.0};
    std::size_t n{0};
};

/// Ordinary least squares y = intercept + slope x.
inline LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw Error(ErrorKind::EmptySample, "least squares needs >= 2 paired points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LinearFit f;
    f.n = n;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    if (n > 2) {
        double ssr = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = y[i] - f.intercept - f.slope * x[i];
            ssr += r * r;
        }
        f.slope_se = std::sqrt(ssr / static_cast<double>(n - 2) / sxx);
    }
    return f;
}

struct TvWindow {
    double upper{0.5};
    double lower{0.02};
};

/// Fit log TV(n) = c - alpha n on the run that starts at the first n with
/// TV <= upper and stops before TV first drops below lower. Needs >= 3 points.
inline void fit_tv_decay(MixingEstimate& est, const TvWindow& w = {}, double confidence = 0.95) {
    const auto& tv = est.values;
    std::size_t lo = 0;
    while (lo < tv.size() && !(tv[lo] <= w.upper)) ++lo;
    std::size_t hi = lo;
    while (hi < tv.size() && tv[hi] >= w.lower) ++hi;
    est.window_lo = lo;
    est.window_hi = hi;
    if (hi - lo < 3) {
        std::ostringstream os;
        os << "TV curve has " << (hi - lo) << " points in [" << w.lower << ", " << w.upper
           << "] (need 3); noise floor ~ " << est.noise_floor;
        throw WindowEmptyError(os.str(), est);
    }
    std::vector<double> x(est.x.begin() + lo, est.x.begin() + hi), y;
    for (std::size_t i = lo; i < hi; ++i) y.push_back(std::log(tv[i]));
    const LinearFit f = least_squares(x, y);
    est.alpha_hat = -f.slope;
    est.gamma_tilde = std::exp(-est.alpha_hat);
    if (f.n > 2) {
        boost::math::students_t dist(static_cast<double>(f.n - 2));
        const double q = boost::math::quantile(boost::math::complement(dist, (1.0 - confidence) / 2.0));
        est.ci_lo = est.alpha_hat - q * f.slope_se;
        est.ci_hi = est.alpha_hat + q * f.slope_se;
    }
}

/// Expected TV between two independent n-sample histograms of the law p:
/// sum_i sqrt(2 p_i (1 - p_i) / n) * sqrt(2/pi) / 2.
inline double tv_noise_floor(const Histogram1D& h, std::uint64_t n) {
    if (n == 0) return 1.0;
    double s = 0.0;
    for (double p : h.probabilities()) s += std::sqrt(2.0 * p * (1.0 - p) / static_cast<double>(n));
    return 0.5 * std::sqrt(2.0 / 3.141592653589793) * s;
}

struct MixingSpec {
    EnsembleSpec ensemble;
    TvWindow window{};
    double confidence{0.95};
};

/// Evolve ensembles of models a and b, compare their observable histograms
/// at every step, and fit the decay. The two ensembles draw from disjoint
/// streams (b uses a master seed derived from a's). `weights`, if non-empty,
/// adds a weighted TV curve (per-bin weights incl. under/overflow).
template <EnsembleModel A, EnsembleModel B>
MixingEstimate estimate_mixing_tv(const A& a, const B& b, const MixingSpec& spec,
                                  std::span<const double> weights = {}) {
    if (spec.ensemble.n_chains < 1000)
        throw Error(ErrorKind::InvalidConfig, "estimate_mixing_tv needs n_chains >= 1000");
    EnsembleSpec sa = spec.ensemble, sb = spec.ensemble;
    sb.master_seed = derive_seed(spec.ensemble.master_seed, 0xb0b0b0b0ULL);
    const EnsembleSummary ea = run_model_ensemble(a, sa);
    const EnsembleSummary eb = run_model_ensemble(b, sb);
    if (!ea.failures.empty() || !eb.failures.empty()) {
        const auto& f = ea.failures.empty() ? eb.failures.front() : ea.failures.front();
        std::ostringstream os;
        os << (ea.failures.size() + eb.failures.size()) << " chain(s) failed; first: chain " << f.chain << " seed "
           << f.seed << ": " << f.message;
        throw Error(ErrorKind::InvalidConfig, os.str());
    }
    MixingEstimate est;
    est.method = "tv-decay";
    for (std::size_t n = 0; n < ea.slices.size(); ++n) {
        est.x.push_back(static_cast<double>(n));
        est.values.push_back(tv_distance(ea.slices[n], eb.slices[n]));
        if (!weights.empty()) est.weighted_values.push_back(weighted_tv_distance(ea.slices[n], eb.slices[n], weights));
    }
    est.noise_floor = tv_noise_floor(eb.slices.back(), ea.chains_ok);
    fit_tv_decay(est, spec.window, spec.confidence);
    return est;
}

/// Two-state chain P = [[1-a, a], [b, 1-b]]; from the two point masses the
/// TV distance at step n is exactly |1 - a - b|^n. The observable maps the
/// states to 1 and 10 so they land in different v_perp histogram bins.
struct TwoStateModel {
    using State = int;
    double a{0.1};
    double b{0.15};
    int start{0};

    double lambda() const { return 1.0 - a - b; }
    double rate() const { return -std::log(std::abs(lambda())); }

    State initial(Rng&) const { return start; }
    void advance(State& s, Rng& rng) const {
        const double u = uniform01(rng);
        if (s == 0) {
            if (u < a) s = 1;
        } else if (u < b) {
            s = 0;
        }
    }
    double observable(const State& s) const { return s == 0 ? 1.0 : 10.0; }
};

struct AutocorrelationSpec {
    double window_c{6.0};
    std::size_t min_length{100000};
    std::size_t max_lag{0};  ///< 0 = n / 2
};

/// Integrated autocorrelation time tau = 1 + 2 sum_{t=1}^{M} rho(t) with
/// Sokal's self-consistent window: the smallest M with M >= c tau(M).
/// alpha_hat = 1/tau with the CI propagated from tau's standard error
/// tau sqrt(2(2M+1)/n).
inline MixingEstimate autocorrelation_time(std::span<const double> series, const AutocorrelationSpec& spec = {}) {
    const std::size_t n = series.size();
    if (n < spec.min_length) {
        std::ostringstream os;
        os << "autocorrelation needs at least " << spec.min_length << " points, got " << n;
        throw Error(ErrorKind::TooShort, os.str());
    }
    double mean = 0.0;
    for (double v : series) mean += v;
    mean /= static_cast<double>(n);
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = series[i] - mean;
    auto autocov = [&](std::size_t lag) {
        double s = 0.0;
        for (std::size_t i = 0; i + lag < n; ++i) s += d[i] * d[i + lag];
        return s / static_cast<double>(n);
    };
    const double c0 = autocov(0);
    if (!(c0 > 0.0)) throw Error(ErrorKind::EmptySample, "series has zero variance");

    MixingEstimate est;
    est.method = "autocorrelation";
    est.x.push_back(0.0);
    est.values.push_back(1.0);
    const std::size_t max_lag = spec.max_lag ? std::min(spec.max_lag, n - 1) : n / 2;
    double tau = 1.0;
    std::size_t M = 0;
    for (std::size_t lag = 1; lag <= max_lag; ++lag) {
        const double rho = autocov(lag) / c0;
        est.x.push_back(static_cast<double>(lag));
        est.values.push_back(rho);
        tau += 2.0 * rho;
        M = lag;
        if (static_cast<double>(lag) >= spec.window_c * tau) break;
    }
    est.tau_int = tau;
    est.tau_int_err = tau * std::sqrt(2.0 * (2.0 * M + 1.0) / static_cast<double>(n));
    est.window_lo = 0;
    est.window_hi = M + 1;
    est.alpha_hat = 1.0 / tau;
    est.gamma_tilde = std::exp(-est.alpha_hat);
    est.ci_lo = 1.0 / (tau + 1.96 * est.tau_int_err);
    est.ci_hi = tau > 1.96 * est.tau_int_err ? 1.0 / (tau - 1.96 * est.tau_int_err)
                                               : std::numeric_limits<double>::infinity();
    return est;
}

}  // namespace rbill
