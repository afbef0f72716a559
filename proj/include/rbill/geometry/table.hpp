#pragma once
/**
 * @file table.hpp
 * @brief Billiard table on the flat torus with circular thermostats.
 *
 * A table is the unit square of side `period` with periodic boundary
 * conditions, minus finitely many disjoint disks. Every disk is a thermostat
 * with its own inverse temperature beta. Flights are resolved on the lifted
 * plane: for each source disk we precompute the periodic images that a ray
 * of length <= image_cutoff can reach.
 *
 * validate_table() is the only way to obtain a ValidatedTable. It checks
 * radii, pairwise disjointness across periodic images, and probes a grid of
 * boundary points x directions to certify (probabilistically) that every
 * free flight is shorter than horizon_probe.tau_cap.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "rbill/errors.hpp"
#include "rbill/vec2.hpp"

namespace rbill {

struct Disk {
    Vec2 center;
    double radius{0.0};
    double beta{1.0};

    bool operator==(const Disk&) const = default;
};

struct HorizonProbe {
    int n_points{64};   ///< boundary points per disk
    int n_angles{256};  ///< outgoing directions per point
    double tau_cap{2.0};

    bool operator==(const HorizonProbe&) const = default;
};

struct TableConfig {
    double period{1.0};
    std::vector<Disk> disks;
    double image_cutoff{3.0};
    HorizonProbe horizon_probe;

    bool operator==(const TableConfig&) const = default;
};

/// Point on the boundary of disk `disk`; arc-length coordinate r = R * theta.
struct BoundaryPoint {
    std::size_t disk{0};
    double theta{0.0};
};

/// Canonical angle in [0, 2pi).
inline double canonical_angle(double theta) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double t = std::fmod(theta, two_pi);
    if (t < 0.0) t += two_pi;
    if (t >= two_pi) t = 0.0;
    return t;
}

/// Angle wrapped to (-pi, pi].
inline double wrap_pi(double a) {
    constexpr double pi = std::numbers::pi;
    double t = std::remainder(a, 2.0 * pi);
    if (t <= -pi) t += 2.0 * pi;
    return t;
}

/// Periodic copy of a disk on the lifted plane, relative to the source cell.
struct DiskImage {
    std::size_t disk{0};
    Vec2 center;
    double radius{0.0};
};

/// First-root data for a ray against one circle.
struct RayHit {
    std::size_t image{0};   ///< index into the source disk's image list
    double t{0.0};          ///< distance along the unit direction
    double root_disc{0.0};  ///< sqrt of the discriminant, = R cos(phi_in)
    double cross{0.0};      ///< (origin - center) x dir
    bool grazing{false};
};

/// Ray (origin + t dir, |dir| = 1) against a circle; nullopt when missed or
/// when the forward root is closer than `t_min`.
inline std::optional<RayHit> ray_circle(Vec2 origin, Vec2 dir, Vec2 center, double radius,
                                        double t_min) {
    const Vec2 w = origin - center;
    const double b = w.dot(dir);
    if (b >= 0.0) return std::nullopt;  // moving away from the center
    const double c = w.norm2() - radius * radius;
    const double disc = b * b - c;
    if (disc < 0.0) return std::nullopt;
    const double s = std::sqrt(disc);
    // t = -b - s, rewritten to avoid cancellation for grazing rays
    const double t = c > 0.0 ? c / (s - b) : -b - s;
    if (t < t_min) return std::nullopt;
    RayHit hit;
    hit.t = t;
    hit.root_disc = s;
    hit.cross = w.cross(dir);
    hit.grazing = disc < 1e-14 * radius * radius;
    return hit;
}

struct OverlapError : Error {
    std::size_t first;
    std::size_t second;
    Vec2 offset;  ///< lattice offset of `second` relative to `first`
    OverlapError(std::size_t i, std::size_t j, Vec2 off, const std::string& msg)
        : Error(ErrorKind::OverlappingDisks, msg), first(i), second(j), offset(off) {}
};

/// Ray that escaped the probe cap; direction is a unit vector.
struct HorizonWitness {
    BoundaryPoint origin;
    double phi{0.0};
    Vec2 direction;
    double tau_lower_bound{0.0};
};

struct HorizonError : Error {
    HorizonWitness witness;
    HorizonError(const HorizonWitness& w, const std::string& msg)
        : Error(ErrorKind::HorizonUnbounded, msg), witness(w) {}
};

/// Validation switches. Skipping the horizon probe is meant for tests and
/// diagnostics on tables with known corridors; flights there may then fail
/// with NoIntersection.
struct ValidationOptions {
    bool probe_horizon{true};
};

class ValidatedTable;
ValidatedTable validate_table(TableConfig config, ValidationOptions options = {});

/// Immutable, validated table. Safe to share across threads.
class ValidatedTable {
public:
    const TableConfig& config() const { return config_; }
    double period() const { return config_.period; }
    std::size_t disk_count() const { return config_.disks.size(); }
    const Disk& disk(std::size_t i) const { return config_.disks[i]; }
    double radius(std::size_t i) const { return config_.disks[i].radius; }
    double beta(std::size_t i) const { return config_.disks[i].beta; }

    double beta_min() const {
        double b = std::numeric_limits<double>::infinity();
        for (const auto& d : config_.disks) b = std::min(b, d.beta);
        return b;
    }
    double beta_max() const {
        double b = 0.0;
        for (const auto& d : config_.disks) b = std::max(b, d.beta);
        return b;
    }
    bool equal_beta() const { return beta_min() == beta_max(); }

    /// |boundary| = sum of circumferences.
    double boundary_length() const {
        double s = 0.0;
        for (const auto& d : config_.disks) s += 2.0 * std::numbers::pi * d.radius;
        return s;
    }
    /// Arc-length offset of disk i in the concatenated boundary coordinate.
    double arc_offset(std::size_t i) const {
        double s = 0.0;
        for (std::size_t k = 0; k < i; ++k) s += 2.0 * std::numbers::pi * config_.disks[k].radius;
        return s;
    }

    std::span<const DiskImage> images(std::size_t source) const { return images_[source]; }

    Vec2 position(const BoundaryPoint& p) const {
        const Disk& d = config_.disks[p.disk];
        return d.center + d.radius * unit_at(p.theta);
    }
    Vec2 outward_normal(const BoundaryPoint& p) const { return unit_at(p.theta); }

    /// First image hit by the ray from `origin` (on source disk) along unit
    /// `dir`. nullopt when nothing is hit within image_cutoff.
    std::optional<RayHit> cast_ray(std::size_t source, Vec2 origin, Vec2 dir) const {
        const double t_min = 1e-12 * config_.period;
        std::optional<RayHit> best;
        double best_t = config_.image_cutoff;
        const auto& imgs = images_[source];
        for (std::size_t k = 0; k < imgs.size(); ++k) {
            const DiskImage& im = imgs[k];
            const Vec2 w = im.center - origin;
            const double along = w.dot(dir);
            if (along <= 0.0) continue;
            if (along - im.radius > best_t) continue;
            const double perp = w.cross(dir);
            if (std::abs(perp) > im.radius) continue;
            auto hit = ray_circle(origin, dir, im.center, im.radius, t_min);
            if (hit && hit->t <= best_t) {
                hit->image = k;
                best_t = hit->t;
                best = hit;
            }
        }
        return best;
    }

    /// Ray against one specific image (used when the destination is known).
    std::optional<RayHit> cast_ray_to(std::size_t source, std::size_t image, Vec2 origin,
                                      Vec2 dir) const {
        const DiskImage& im = images_[source][image];
        auto hit = ray_circle(origin, dir, im.center, im.radius, 1e-12 * config_.period);
        if (hit) hit->image = image;
        return hit;
    }

    /// Empirical flight-length range over the horizon probe grid.
    double tau_min() const { return tau_min_; }
    double tau_max() const { return tau_max_; }
    /// Largest number of images considered for any source disk.
    std::size_t max_image_count() const {
        std::size_t m = 0;
        for (const auto& v : images_) m = std::max(m, v.size());
        return m;
    }

private:
    friend ValidatedTable validate_table(TableConfig config, ValidationOptions options);
    explicit ValidatedTable(TableConfig cfg) : config_(std::move(cfg)) {}

    TableConfig config_;
    std::vector<std::vector<DiskImage>> images_;
    double tau_min_{0.0};
    double tau_max_{0.0};
};

namespace detail {

inline std::string fmt_vec(Vec2 v) {
    std::ostringstream os;
    os << "(" << v.x << ", " << v.y << ")";
    return os.str();
}

inline void check_config_shape(const TableConfig& c) {
    if (!(c.period > 0.0) || !std::isfinite(c.period))
        throw Error(ErrorKind::InvalidConfig, "period must be positive and finite");
    if (c.disks.empty()) throw Error(ErrorKind::InvalidConfig, "table needs at least one disk");
    double r_max = 0.0;
    for (std::size_t i = 0; i < c.disks.size(); ++i) {
        const Disk& d = c.disks[i];
        if (!(d.radius > 0.0) || !(2.0 * d.radius < c.period) || !std::isfinite(d.radius)) {
            std::ostringstream os;
            os << "disk " << i << " has radius " << d.radius << " (need 0 < 2R < period)";
            throw Error(ErrorKind::DegenerateRadius, os.str());
        }
        if (!(d.beta > 0.0) || !std::isfinite(d.beta)) {
            std::ostringstream os;
            os << "disk " << i << " has beta " << d.beta << " (need beta > 0)";
            throw Error(ErrorKind::InvalidConfig, os.str());
        }
        r_max = std::max(r_max, d.radius);
    }
    const auto& hp = c.horizon_probe;
    if (hp.n_points < 1 || hp.n_angles < 1 || !(hp.tau_cap > 0.0))
        throw Error(ErrorKind::InvalidConfig, "horizon_probe needs n_points, n_angles >= 1 and tau_cap > 0");
    if (!(c.image_cutoff >= hp.tau_cap + 2.0 * r_max))
        throw Error(ErrorKind::InvalidConfig, "image_cutoff must be >= tau_cap + 2 max(R)");
}

// Pairwise toroidal separation, including periodic images of the same disk.
inline void check_disjoint(const TableConfig& c) {
    const double L = c.period;
    for (std::size_t i = 0; i < c.disks.size(); ++i) {
        for (std::size_t j = i; j < c.disks.size(); ++j) {
            const Disk& a = c.disks[i];
            const Disk& b = c.disks[j];
            for (int m = -2; m <= 2; ++m) {
                for (int n = -2; n <= 2; ++n) {
                    if (i == j && m == 0 && n == 0) continue;
                    const Vec2 off{m * L, n * L};
                    const double dist = (b.center + off - a.center).norm();
                    if (!(dist > a.radius + b.radius)) {
                        std::ostringstream os;
                        os << "disks " << i << " and " << j << " (lattice offset " << fmt_vec(off)
                           << ") have center distance " << dist << " <= R_i + R_j = " << a.radius + b.radius;
                        throw OverlapError(i, j, off, os.str());
                    }
                }
            }
        }
    }
}

inline std::vector<DiskImage> enumerate_images(const TableConfig& c, std::size_t source) {
    const double L = c.period;
    const Disk& src = c.disks[source];
    double r_max = 0.0;
    for (const auto& d : c.disks) r_max = std::max(r_max, d.radius);
    const int span = static_cast<int>(std::ceil((c.image_cutoff + 2.0 * r_max) / L)) + 1;
    std::vector<DiskImage> out;
    for (int m = -span; m <= span; ++m) {
        for (int n = -span; n <= span; ++n) {
            for (std::size_t j = 0; j < c.disks.size(); ++j) {
                if (j == source && m == 0 && n == 0) continue;
                const Disk& d = c.disks[j];
                const Vec2 center = d.center + Vec2{m * L, n * L};
                if ((center - src.center).norm() <= c.image_cutoff + src.radius + d.radius)
                    out.push_back({j, center, d.radius});
            }
        }
    }
    // nearest first so the cutoff pruning in cast_ray bites early
    std::sort(out.begin(), out.end(), [&](const DiskImage& a, const DiskImage& b) {
        return (a.center - src.center).norm2() < (b.center - src.center).norm2();
    });
    return out;
}

}  // namespace detail

inline ValidatedTable validate_table(TableConfig config, ValidationOptions options) {
    detail::check_config_shape(config);
    detail::check_disjoint(config);

    ValidatedTable table(std::move(config));
    const TableConfig& c = table.config_;
    table.images_.resize(c.disks.size());
    for (std::size_t s = 0; s < c.disks.size(); ++s) table.images_[s] = detail::enumerate_images(c, s);

    const auto& hp = c.horizon_probe;
    if (!options.probe_horizon) {
        table.tau_min_ = std::numeric_limits<double>::quiet_NaN();
        table.tau_max_ = std::numeric_limits<double>::quiet_NaN();
        return table;
    }
    double tau_lo = std::numeric_limits<double>::infinity();
    double tau_hi = 0.0;
    for (std::size_t s = 0; s < c.disks.size(); ++s) {
        for (int k = 0; k < hp.n_points; ++k) {
            const BoundaryPoint p{s, 2.0 * std::numbers::pi * k / hp.n_points};
            const Vec2 origin = table.position(p);
            for (int a = 0; a < hp.n_angles; ++a) {
                const double phi = -std::numbers::pi / 2 + (a + 0.5) * std::numbers::pi / hp.n_angles;
                const Vec2 dir = unit_at(p.theta + phi);
                const auto hit = table.cast_ray(s, origin, dir);
                if (!hit || hit->t > hp.tau_cap) {
                    HorizonWitness w{p, phi, dir, hit ? hit->t : c.image_cutoff};
                    std::ostringstream os;
                    os << "ray from disk " << s << " theta=" << p.theta << " phi=" << phi << " direction "
                       << detail::fmt_vec(dir) << " flies at least " << w.tau_lower_bound
                       << " > tau_cap " << hp.tau_cap;
                    throw HorizonError(w, os.str());
                }
                tau_lo = std::min(tau_lo, hit->t);
                tau_hi = std::max(tau_hi, hit->t);
            }
        }
    }
    table.tau_min_ = tau_lo;
    table.tau_max_ = tau_hi;
    return table;
}

/// Reference table: three disks blocking every corridor of the unit torus.
inline TableConfig reference_three_disk_config(double beta0 = 1.0, double beta1 = 1.0, double beta2 = 1.0) {
    TableConfig c;
    c.period = 1.0;
    c.disks = {{{0.0, 0.0}, 0.35, beta0}, {{0.5, 0.5}, 0.2, beta1}, {{0.5, 0.0}, 0.1, beta2}};
    c.image_cutoff = 3.0;
    c.horizon_probe = {64, 256, 2.0};
    return c;
}

}  // namespace rbill
