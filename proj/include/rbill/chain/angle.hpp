#pragma once

#include <cmath>
#include <numbers>

#include "rbill/errors.hpp"
#include "rbill/random.hpp"

namespace rbill {

/// Outgoing-angle law at a thermostat of inverse temperature beta for a
/// particle leaving with normal speed v_perp.
struct AngleDensityParams {
    double v_perp{1.0};
    double beta{1.0};

    void check() const {
        if (!(v_perp > 0.0) || !std::isfinite(v_perp) || !(beta > 0.0) || !std::isfinite(beta))
            throw Error(ErrorKind::InvalidConfig, "angle density needs finite v_perp > 0 and beta > 0");
    }
};

/// rho(phi) = sqrt(beta/pi) v / cos^2(phi) exp(-beta v^2 tan^2(phi)) on (-pi/2, pi/2).
inline double angle_density(double phi, const AngleDensityParams& p) {
    const double c = std::cos(phi);
    const double t = std::tan(phi);
    return std::sqrt(p.beta / std::numbers::pi) * p.v_perp / (c * c) *
           std::exp(-p.beta * p.v_perp * p.v_perp * t * t);
}

/// Closed-form CDF: v_t = v tan(phi) is N(0, 1/(2 beta)).
inline double angle_cdf(double phi, const AngleDensityParams& p) {
    return 0.5 * std::erfc(-std::sqrt(p.beta) * p.v_perp * std::tan(phi));
}

/// Tangential velocity drawn at a thermostat: N(0, 1/(2 beta)).
inline double sample_tangential(double beta, Rng& rng) {
    return standard_normal(rng) * std::sqrt(0.5 / beta);
}

/// Angle with density rho: draw v_t, return atan2(v_t, v_perp).
inline double sample_angle(const AngleDensityParams& p, Rng& rng) {
    return std::atan2(sample_tangential(p.beta, rng), p.v_perp);
}

}  // namespace rbill
