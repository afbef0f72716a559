#pragma once
/**
 * @file quadrature.hpp
 * @brief P*V at a boundary state, by deterministic quadrature and by Monte Carlo.
 *
 * With v_t = v_perp tan(phi) the outgoing-angle law becomes the Gaussian
 * weight g(v_t) = sqrt(beta/pi) exp(-beta v_t^2), and v_perp' =
 * cos(phi') sqrt(v_perp^2 + v_t^2). The map v_t -> v_perp' is smooth except
 * where the destination image changes. Those points are exactly the
 * directions tangent to some image (a new disk appears in front of, or stops
 * occluding, the current one), so they are enumerated in closed form from
 * the image list. A uniform scan of the v_t range then confirms the piece
 * assignment; any change the enumeration missed is located by bisection and
 * split in as well. Each piece is integrated by tanh-sinh, which copes with
 * the inverse-square-root behaviour of V = 1/v_perp' at grazing arrivals.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "rbill/chain/chain.hpp"
#include "rbill/errors.hpp"
#include "rbill/geometry/flight.hpp"
#include "rbill/potential/potential.hpp"
#include "rbill/stats/histogram.hpp"

namespace rbill {

struct QuadratureSpec {
    double rel_tol{1e-9};           ///< per-piece tanh-sinh tolerance
    double tail_rel_tol{1e-13};     ///< truncation target relative to V(v_perp)
    std::size_t scan_panels{2000};  ///< uniform v_t panels for the destination check (0 disables)
    double bisection_tol{1e-12};    ///< breakpoint refinement, in phi
    std::size_t max_refinements{12};
    double cos_floor{1e-12};        ///< lower clamp on cos(phi') at grazing
};

struct QuadratureResult {
    double value{0.0};
    double error{0.0};        ///< quadrature estimate plus tail estimate
    double tail_cut{0.0};     ///< |v_t| truncation point
    std::size_t pieces{0};
    std::size_t scan_splits{0};  ///< breakpoints found by the scan but not by enumeration
};

/// A maximal phi interval on which the flight lands on one image.
struct FlightPiece {
    double phi_lo{0.0};
    double phi_hi{0.0};
    std::size_t image{0};
};

namespace detail {

inline std::optional<std::size_t> destination_image(const ValidatedTable& table, const BoundaryPoint& p, double phi) {
    const Vec2 origin = table.position(p);
    const auto hit = table.cast_ray(p.disk, origin, unit_at(p.theta + phi));
    if (!hit) return std::nullopt;
    return hit->image;
}

inline std::size_t require_destination(const ValidatedTable& table, const BoundaryPoint& p, double phi) {
    if (auto im = destination_image(table, p, phi)) return *im;
    std::ostringstream os;
    os << "flight from disk " << p.disk << " theta=" << p.theta << " phi=" << phi << " hits nothing";
    throw Error(ErrorKind::NoIntersection, os.str());
}

/// Outgoing angles in (lo, hi) at which the ray is tangent to some image.
inline std::vector<double> tangent_angles(const ValidatedTable& table, const BoundaryPoint& p, double lo, double hi) {
    const Vec2 origin = table.position(p);
    std::vector<double> out;
    for (const DiskImage& im : table.images(p.disk)) {
        const Vec2 w = im.center - origin;
        const double dist = w.norm();
        if (!(dist > im.radius)) continue;
        const double centre_dir = std::atan2(w.y, w.x) - p.theta;
        const double half = std::asin(im.radius / dist);
        for (double a : {centre_dir - half, centre_dir + half}) {
            const double phi = wrap_pi(a);
            if (phi > lo && phi < hi) out.push_back(phi);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace detail

/// Split (lo, hi) into pieces with a constant destination image. Breakpoints
/// come from tangent enumeration plus, if `scan_panels` > 0, a uniform scan
/// in v_t = v_perp tan(phi) with bisection on any unexplained change.
inline std::vector<FlightPiece> flight_pieces(const ValidatedTable& table, const BoundaryPoint& p, double phi_lo,
                                              double phi_hi, double v_perp, const QuadratureSpec& spec,
                                              std::size_t* scan_splits = nullptr) {
    std::vector<double> cuts = detail::tangent_angles(table, p, phi_lo, phi_hi);
    cuts.insert(cuts.begin(), phi_lo);
    cuts.push_back(phi_hi);

    auto build = [&](const std::vector<double>& c) {
        std::vector<FlightPiece> pieces;
        for (std::size_t i = 0; i + 1 < c.size(); ++i) {
            if (!(c[i + 1] > c[i])) continue;
            const std::size_t im = detail::require_destination(table, p, 0.5 * (c[i] + c[i + 1]));
            if (!pieces.empty() && pieces.back().image == im)
                pieces.back().phi_hi = c[i + 1];
            else
                pieces.push_back({c[i], c[i + 1], im});
        }
        return pieces;
    };
    std::vector<FlightPiece> pieces = build(cuts);
    if (spec.scan_panels == 0) return pieces;

    const double t_lo = v_perp * std::tan(phi_lo), t_hi = v_perp * std::tan(phi_hi);
    std::vector<double> extra;
    double prev_phi = phi_lo;
    std::optional<std::size_t> prev_im;
    for (std::size_t k = 0; k <= spec.scan_panels; ++k) {
        const double vt = t_lo + (t_hi - t_lo) * (static_cast<double>(k) + 0.5) / (spec.scan_panels + 1);
        const double phi = std::atan2(vt, v_perp);
        const std::size_t im = detail::require_destination(table, p, phi);
        const auto next_cut = std::upper_bound(cuts.begin(), cuts.end(), prev_phi);
        const bool explained = next_cut != cuts.end() && *next_cut <= phi + 1e-9;
        if (prev_im && *prev_im != im && !explained) {
            // a change the enumeration did not predict: bisect it
            double a = prev_phi, b = phi;
            int iter = 0;
            while (b - a > spec.bisection_tol) {
                if (++iter > 200) {
                    std::ostringstream os;
                    os << "breakpoint refinement did not converge near phi=" << a << " on disk " << p.disk;
                    throw Error(ErrorKind::TangencySplitFailure, os.str());
                }
                const double m = 0.5 * (a + b);
                if (detail::require_destination(table, p, m) == *prev_im) a = m;
                else b = m;
            }
            extra.push_back(0.5 * (a + b));
        }
        prev_phi = phi;
        prev_im = im;
    }
    if (!extra.empty()) {
        cuts.insert(cuts.end(), extra.begin(), extra.end());
        std::sort(cuts.begin(), cuts.end());
        pieces = build(cuts);
    }
    if (scan_splits) *scan_splits = extra.size();
    return pieces;
}

/// P*V(state) = integral of V(v_perp'(v_t)) g(v_t) dv_t with the Gaussian of
/// the current disk's beta. Error = tanh-sinh estimates + tail estimate.
template <PotentialFunction P>
QuadratureResult pv_quadrature(const ValidatedTable& table, const BoundaryState& state, const P& potential,
                               const QuadratureSpec& spec = {}) {
    if (!(state.v_perp > 0.0) || !std::isfinite(state.v_perp))
        throw Error(ErrorKind::InvalidConfig, "pv_quadrature needs finite v_perp > 0");
    const double beta = table.beta(state.point.disk);
    const double growth = potential.growth_rate();
    if (!(growth < beta)) {
        std::ostringstream os;
        os << "potential grows like exp(" << growth << " v^2) but beta on disk " << state.point.disk << " is "
           << beta << "; the Gaussian tail does not dominate";
        throw Error(ErrorKind::TailDivergence, os.str());
    }
    const double v = state.v_perp;
    const double scale = std::max(std::abs(static_cast<double>(potential(v))), std::numeric_limits<double>::min());

    double cut = 4.0 / std::sqrt(beta);
    double tail = potential.tail_estimate(v, beta, cut);
    while (tail > spec.tail_rel_tol * scale && cut * std::sqrt(beta) < 60.0) {
        cut += 0.5 / std::sqrt(beta);
        tail = potential.tail_estimate(v, beta, cut);
    }

    QuadratureResult out;
    out.tail_cut = cut;
    const double phi_lo = -std::atan2(cut, v), phi_hi = std::atan2(cut, v);
    const auto pieces = flight_pieces(table, state.point, phi_lo, phi_hi, v, spec, &out.scan_splits);
    out.pieces = pieces.size();

    const double norm = std::sqrt(beta / std::numbers::pi);
    boost::math::quadrature::tanh_sinh<double> integrator(spec.max_refinements);
    double err_sum = 0.0;
    for (const FlightPiece& piece : pieces) {
        const double a = std::clamp(v * std::tan(piece.phi_lo), -cut, cut);
        const double b = std::clamp(v * std::tan(piece.phi_hi), -cut, cut);
        if (!(b > a)) continue;
        auto f = [&](double vt) {
            const double phi = std::atan2(vt, v);
            const FlightResult fr = flight_to_image(table, state.point, phi, piece.image);
            const double c = std::max(fr.cos_phi_in, spec.cos_floor);
            return static_cast<double>(potential(c * std::hypot(v, vt))) * norm * std::exp(-beta * vt * vt);
        };
        if (b - a < 1e-9 * std::max(1.0, std::abs(a))) {
            // sliver between two nearly coincident tangents: midpoint rule, full value as error
            const double val = (b - a) * f(0.5 * (a + b));
            out.value += val;
            err_sum += std::abs(val);
            continue;
        }
        double err = 0.0, l1 = 0.0;
        std::size_t levels = 0;
        double val = 0.0;
        try {
            // the two-argument form keeps abscissae strictly inside (a, b)
            val = integrator.integrate([&](double vt, double) { return f(vt); }, a, b, spec.rel_tol, &err, &l1,
                                       &levels);
        } catch (const std::exception& e) {
            std::ostringstream os;
            os << "tanh-sinh failed on [" << a << ", " << b << "] (image " << piece.image << "): " << e.what();
            throw Error(ErrorKind::QuadratureFailure, os.str());
        }
        if (!std::isfinite(val) || !std::isfinite(err))
            throw Error(ErrorKind::QuadratureFailure, "non-finite quadrature value");
        out.value += val;
        err_sum += std::max(err, 4.0 * std::numeric_limits<double>::epsilon() * l1);
    }
    out.error = err_sum + tail;
    return out;
}

struct MonteCarloResult {
    double value{0.0};
    double std_error{0.0};
    std::size_t n{0};
};

/// Mean of V(v_perp') over n independent chain steps from `state`.
template <PotentialFunction P>
MonteCarloResult pv_monte_carlo(const ValidatedTable& table, const BoundaryState& state, const P& potential,
                                std::size_t n_samples, Rng& rng) {
    if (n_samples < 1000) throw Error(ErrorKind::InvalidConfig, "pv_monte_carlo needs n_samples >= 1000");
    RunningStats s;
    for (std::size_t i = 0; i < n_samples; ++i) s.add(potential(chain_step(table, state, rng).first.v_perp));
    return {s.mean, s.std_error(), n_samples};
}

}  // namespace rbill
