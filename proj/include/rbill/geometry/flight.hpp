#pragma once
/**
 * @file flight.hpp
 * @brief Billiard map and its v_perp-enhanced version.
 *
 * Angle convention: phi (outgoing) and phi_in (incoming) are both measured
 * from the outward normal at their own boundary point, counterclockwise
 * positive. At the destination the reversed incoming direction is used, so
 * flying back from `dest` with angle phi_in retraces the segment.
 */

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <sstream>
#include <utility>

#include "rbill/errors.hpp"
#include "rbill/geometry/table.hpp"

namespace rbill {

/// A point of the boundary chain's phase space: position and normal speed.
struct BoundaryState {
    BoundaryPoint point;
    double v_perp{1.0};
};

struct FlightResult {
    BoundaryPoint dest;
    double phi_in{0.0};
    double tau{0.0};
    double cos_phi_in{1.0};   ///< computed from the discriminant, accurate near grazing
    bool grazing{false};
    std::size_t image{0};     ///< index of the hit image in the source's image list
};

namespace detail {

inline FlightResult finish_flight(const ValidatedTable& table, std::size_t source, Vec2 origin,
                                  Vec2 dir, const RayHit& hit) {
    const DiskImage& im = table.images(source)[hit.image];
    const Vec2 q = origin + hit.t * dir;
    FlightResult out;
    out.dest = {im.disk, canonical_angle(std::atan2(q.y - im.center.y, q.x - im.center.x))};
    out.tau = hit.t;
    // angle from n' = (q - c)/R to -dir: sin = -(w x dir)/R, cos = sqrt(disc)/R
    out.phi_in = std::atan2(-hit.cross, hit.root_disc);
    out.cos_phi_in = hit.root_disc / im.radius;
    out.grazing = hit.grazing;
    out.image = hit.image;
    return out;
}

}  // namespace detail

/// Free flight from `point` leaving at angle `phi_out` to the next collision.
inline FlightResult flight(const ValidatedTable& table, const BoundaryPoint& point, double phi_out) {
    if (!(std::abs(phi_out) < std::numbers::pi / 2)) {
        std::ostringstream os;
        os << "outgoing angle " << phi_out << " outside (-pi/2, pi/2)";
        throw Error(ErrorKind::InvalidConfig, os.str());
    }
    const Vec2 origin = table.position(point);
    const Vec2 dir = unit_at(point.theta + phi_out);
    const auto hit = table.cast_ray(point.disk, origin, dir);
    if (!hit) {
        std::ostringstream os;
        os << "flight from disk " << point.disk << " theta=" << point.theta << " phi=" << phi_out
           << " exceeded image_cutoff " << table.config().image_cutoff;
        throw Error(ErrorKind::NoIntersection, os.str());
    }
    return detail::finish_flight(table, point.disk, origin, dir, *hit);
}

/// Flight forced onto one image of the source's image list. Rays that miss it
/// by rounding are treated as tangent. Used by the quadrature, where the
/// destination of each smooth piece is known in advance.
inline FlightResult flight_to_image(const ValidatedTable& table, const BoundaryPoint& point,
                                    double phi_out, std::size_t image) {
    const Vec2 origin = table.position(point);
    const Vec2 dir = unit_at(point.theta + phi_out);
    if (auto hit = table.cast_ray_to(point.disk, image, origin, dir))
        return detail::finish_flight(table, point.disk, origin, dir, *hit);
    const DiskImage& im = table.images(point.disk)[image];
    const Vec2 w = origin - im.center;
    RayHit tangent;
    tangent.image = image;
    tangent.t = std::max(-w.dot(dir), 0.0);
    tangent.root_disc = 0.0;
    tangent.cross = std::copysign(im.radius, w.cross(dir));
    tangent.grazing = true;
    return detail::finish_flight(table, point.disk, origin, dir, tangent);
}

/// Ratio cos(phi_in)/cos(phi_out); the v_perp multiplier of one step.
inline double v_perp_factor(double phi_out, const FlightResult& f) {
    return f.cos_phi_in / std::cos(phi_out);
}

/// One step of the enhanced billiard map: position from the flight and
/// v_perp' = cos(phi_in)/cos(phi_out) * v_perp.
inline std::pair<BoundaryState, FlightResult> enhanced_step(const ValidatedTable& table,
                                                            const BoundaryState& state,
                                                            double phi_out) {
    FlightResult f = flight(table, state.point, phi_out);
    const double v_next = v_perp_factor(phi_out, f) * state.v_perp;
    if (!(v_next >= std::numeric_limits<double>::min()) || !std::isfinite(v_next)) {
        std::ostringstream os;
        os << "v_perp underflow: " << state.v_perp << " -> " << v_next << " (phi=" << phi_out
           << ", phi_in=" << f.phi_in << ")";
        throw Error(ErrorKind::VPerpUnderflow, os.str());
    }
    return {BoundaryState{f.dest, v_next}, f};
}

}  // namespace rbill
