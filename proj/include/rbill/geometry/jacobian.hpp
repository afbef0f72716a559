#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>

#include "rbill/geometry/flight.hpp"
#include "rbill/random.hpp"

namespace rbill {

/// Derivative of (r, phi, v_perp) -> (r', phi', v_perp') with r the arc
/// length R*theta. Rows are (r', phi', v_perp'), columns (r, phi, v_perp).
struct JacobianMatrix {
    std::array<std::array<double, 3>, 3> m{};
    double kappa{0.0};        ///< 1/R at the source
    double kappa_prime{0.0};  ///< 1/R' at the destination

    double operator()(int i, int j) const { return m[i][j]; }

    double determinant() const {
        return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
               m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
               m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    }
};

inline constexpr double near_tangency_tolerance = 1e-6;

/// Jacobian of the enhanced billiard map from the closed-form entries.
/// The top-left block is the classical dispersing-billiard derivative; with
/// the v_perp row its determinant is exactly -1.
inline JacobianMatrix enhanced_jacobian(const ValidatedTable& table, const BoundaryState& state,
                                        double phi_out) {
    const FlightResult f = flight(table, state.point, phi_out);
    if (std::abs(f.phi_in) > std::numbers::pi / 2 - near_tangency_tolerance) {
        std::ostringstream os;
        os << "incidence angle " << f.phi_in << " within " << near_tangency_tolerance << " of pi/2";
        throw Error(ErrorKind::NearTangency, os.str());
    }
    const double k = 1.0 / table.radius(state.point.disk);
    const double kp = 1.0 / table.radius(f.dest.disk);
    const double tau = f.tau;
    const double c = std::cos(phi_out);
    const double s = std::sin(phi_out);
    const double cp = f.cos_phi_in;
    const double sp = std::sin(f.phi_in);
    const double v = state.v_perp;

    JacobianMatrix J;
    J.kappa = k;
    J.kappa_prime = kp;
    J.m[0][0] = -(tau * k + c) / cp;
    J.m[0][1] = -tau / cp;
    J.m[0][2] = 0.0;
    J.m[1][0] = (tau * k * kp + k * cp + kp * c) / cp;
    J.m[1][1] = (tau * kp + cp) / cp;
    J.m[1][2] = 0.0;
    const double dphi_dr = J.m[1][0];
    const double dphi_dphi = J.m[1][1];
    J.m[2][0] = -sp * dphi_dr / c * v;
    J.m[2][1] = (-sp * dphi_dphi * c + cp * s) / (c * c) * v;
    J.m[2][2] = cp / c;
    return J;
}

/// Normalized determinant of d(r'', v_perp'')/d(phi1, phi2) along the path
/// point -phi1-> r' -phi2-> r'', divided by v_perp. Independent of v_perp.
inline double two_step_jacobian(const ValidatedTable& table, const BoundaryPoint& point, double phi1,
                                double phi2, double v_perp) {
    const BoundaryState s0{point, v_perp};
    const JacobianMatrix J1 = enhanced_jacobian(table, s0, phi1);
    const auto [s1, f1] = enhanced_step(table, s0, phi1);
    const JacobianMatrix J2 = enhanced_jacobian(table, s1, phi2);

    // phi2 is drawn afresh at r', so it does not depend on phi1
    const double dr2_dphi1 = J2(0, 0) * J1(0, 1);
    const double dr2_dphi2 = J2(0, 1);
    const double dv2_dphi1 = J2(2, 0) * J1(0, 1) + J2(2, 2) * J1(2, 1);
    const double dv2_dphi2 = J2(2, 1);
    return (dr2_dphi1 * dv2_dphi2 - dr2_dphi2 * dv2_dphi1) / v_perp;
}

struct MapProbe {
    BoundaryState state;
    double phi{0.0};
};

/// Uniform disk and angle, v_perp log-uniform on [1e-2, 1e2], outgoing angle
/// uniform on (-1.5, 1.5); redrawn until cos(phi) and cos(phi') are >= min_cos.
inline MapProbe random_non_tangent_probe(const ValidatedTable& table, Rng& rng, double min_cos) {
    for (;;) {
        const auto disk = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(table.disk_count()));
        const double theta = 2.0 * std::numbers::pi * uniform01(rng);
        const double v = std::pow(10.0, -2.0 + 4.0 * uniform01(rng));
        const double phi = -1.5 + 3.0 * uniform01(rng);
        if (std::cos(phi) < min_cos) continue;
        if (flight(table, {disk, theta}, phi).cos_phi_in < min_cos) continue;
        return {{{disk, theta}, v}, phi};
    }
}

/// Central differences of the enhanced map with step h in r, phi and v_perp.
/// Empty when a perturbed flight lands on a different image.
inline std::optional<JacobianMatrix> finite_difference_jacobian(const ValidatedTable& table, const MapProbe& probe,
                                                                double h) {
    const auto [base, f0] = enhanced_step(table, probe.state, probe.phi);
    const double R = table.radius(probe.state.point.disk);
    const double Rp = table.radius(base.point.disk);
    JacobianMatrix J;
    J.kappa = 1.0 / R;
    J.kappa_prime = 1.0 / Rp;
    for (int col = 0; col < 3; ++col) {
        std::array<double, 3> side[2];
        for (int k = 0; k < 2; ++k) {
            const double sgn = k == 0 ? 1.0 : -1.0;
            BoundaryState s = probe.state;
            double phi = probe.phi;
            if (col == 0) s.point.theta = canonical_angle(s.point.theta + sgn * h / R);
            if (col == 1) phi += sgn * h;
            if (col == 2) s.v_perp += sgn * h;
            const auto [next, f] = enhanced_step(table, s, phi);
            if (f.image != f0.image) return std::nullopt;
            side[k] = {Rp * wrap_pi(next.point.theta - base.point.theta), f.phi_in, next.v_perp};
        }
        for (int row = 0; row < 3; ++row) J.m[row][col] = (side[0][row] - side[1][row]) / (2.0 * h);
    }
    return J;
}

}  // namespace rbill
