#pragma once

#include <cmath>
#include <concepts>
#include <sstream>

#include "rbill/errors.hpp"

namespace rbill {

/// Parameters of the Lyapunov potential
///   V(v) = 1/v            for v < v_min,
///        = A              on [v_min, v_max],
///        = exp(eps v^2)   for v > v_max,
/// with A = exp(eps v_max^2) and v_min = 1/A so V is continuous.
struct PotentialParams {
    double epsilon{0.1};
    double v_perp_max{3.0};

    bool operator==(const PotentialParams&) const = default;

    double plateau() const { return std::exp(epsilon * v_perp_max * v_perp_max); }
    double v_perp_min() const { return std::exp(-epsilon * v_perp_max * v_perp_max); }

    /// Throws InvalidConfig unless eps > 0, v_max > 0, v_min < v_max and
    /// eps < beta_min (the last is needed for P*V to be finite).
    void check(double beta_min) const {
        std::ostringstream os;
        if (!(epsilon > 0.0) || !std::isfinite(epsilon)) os << "epsilon must be positive and finite; ";
        if (!(v_perp_max > 0.0) || !std::isfinite(v_perp_max)) os << "v_perp_max must be positive and finite; ";
        if (os.str().empty() && !(v_perp_min() < v_perp_max))
            os << "v_perp_min = exp(-epsilon v_perp_max^2) = " << v_perp_min() << " is not below v_perp_max; ";
        if (os.str().empty() && !(epsilon < beta_min))
            os << "epsilon = " << epsilon << " must be below beta_min = " << beta_min << "; ";
        if (!os.str().empty()) throw Error(ErrorKind::InvalidConfig, os.str());
    }
};

inline double potential_value(double v_perp, const PotentialParams& p) {
    if (v_perp > p.v_perp_max) return std::exp(p.epsilon * v_perp * v_perp);
    if (v_perp < p.v_perp_min()) return 1.0 / v_perp;
    return p.plateau();
}

/// What the P*V integrators need from an observable of v_perp: its value and
/// an upper estimate of the Gaussian-tail contribution beyond |v_t| > T.
template <class P>
concept PotentialFunction = requires(const P& p, double v, double beta, double cut) {
    { p(v) } -> std::convertible_to<double>;
    { p.growth_rate() } -> std::convertible_to<double>;
    { p.tail_estimate(v, beta, cut) } -> std::convertible_to<double>;
};

struct LyapunovPotential {
    PotentialParams params;

    double operator()(double v) const { return potential_value(v, params); }
    double growth_rate() const { return params.epsilon; }

    /// Since v_perp' <= sqrt(v_perp^2 + v_t^2), the growth branch contributes at
    /// most sqrt(beta/(beta-eps)) e^{eps v^2} erfc(T sqrt(beta-eps)); the plateau
    /// contributes A erfc(T sqrt(beta)). The 1/v branch near grazing arrivals is
    /// integrable and not bounded here.
    double tail_estimate(double v_perp, double beta, double cut) const {
        const double eps = params.epsilon;
        return params.plateau() * std::erfc(cut * std::sqrt(beta)) +
               std::sqrt(beta / (beta - eps)) * std::exp(eps * v_perp * v_perp) *
                   std::erfc(cut * std::sqrt(beta - eps));
    }
};

struct ConstantPotential {
    double c{1.0};

    double operator()(double) const { return c; }
    double growth_rate() const { return 0.0; }
    double tail_estimate(double, double beta, double cut) const { return c * std::erfc(cut * std::sqrt(beta)); }
};

}  // namespace rbill
