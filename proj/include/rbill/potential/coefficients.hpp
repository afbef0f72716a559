#pragma once

#include <cmath>

#include "rbill/errors.hpp"

namespace rbill {

/// Reference configuration for the cosine-ratio parabola: tau0 is the flight
/// length at the reference angle phi0 (where the destination is grazed),
/// R the destination radius and w0 = tan(phi0).
struct CoeffInput {
    double tau0{1.0};
    double R{1.0};
    double w0{0.0};
};

struct CosRatioCoeffs {
    double a{0.0};
    double b{0.0};
    double c{0.0};

    /// cos^2(phi')/cos^2(phi) as a function of w = tan(phi).
    double operator()(double w) const { return a * w * w - 2.0 * b * w + c; }
};

inline CosRatioCoeffs cos_ratio_coeffs(const CoeffInput& in) {
    if (!(in.tau0 > 0.0) || !(in.R > 0.0))
        throw Error(ErrorKind::InvalidConfig, "cos_ratio_coeffs needs tau0 > 0 and R > 0");
    const double t = in.tau0 / in.R;
    const double w0 = in.w0;
    const double n = w0 * w0 + 1.0;
    return {(1.0 + 2.0 * t * w0 - t * t) / n,
            (w0 - t - t * t * w0 + t * w0 * w0) / n,
            (w0 * w0 - 2.0 * t * w0 - t * t * w0 * w0) / n};
}

/// Scaled state for the large-v_perp expansion between two facing disks:
/// y = r v_perp / R_k with r the arc offset from the line of centers, v_t the
/// tangential speed, d the gap between the disks.
struct AsymptoticInput {
    double y{0.0};
    double v_t{0.0};
    double R_k{1.0};
    double R_k_prime{1.0};
    double d{1.0};
};

/// Limit Q(y, v_t) of v_perp^2 - v_perp'^2 as v_perp grows.
inline double asymptotic_drop(const AsymptoticInput& in) {
    if (!(in.R_k > 0.0) || !(in.R_k_prime > 0.0) || !(in.d > 0.0))
        throw Error(ErrorKind::InvalidConfig, "asymptotic_drop needs positive radii and gap");
    const double R = in.R_k, Rp = in.R_k_prime, d = in.d;
    const double rp2 = Rp * Rp;
    const double s = R + Rp + d;
    return (d * d / rp2 + 2.0 * d / Rp) * in.v_t * in.v_t + s * s * in.y * in.y / rp2 +
           (2.0 * d * Rp + R * d + d * d + rp2 + R * Rp) * 2.0 * in.v_t * in.y / rp2;
}

}  // namespace rbill
