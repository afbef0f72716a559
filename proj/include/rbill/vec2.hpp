#pragma once

#include <cmath>

namespace rbill {

/// Plain 2-D vector used for positions and directions on the lifted plane.
struct Vec2 {
    double x{0.0};
    double y{0.0};

    constexpr Vec2() = default;
    constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

    constexpr bool operator==(const Vec2&) const = default;

    constexpr Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    constexpr Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    constexpr Vec2 operator-() const { return {-x, -y}; }
    constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
    friend constexpr Vec2 operator*(double s, const Vec2& v) { return {v.x * s, v.y * s}; }

    constexpr double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    /// z-component of the 3-D cross product.
    constexpr double cross(const Vec2& o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }
    constexpr double norm2() const { return x * x + y * y; }
};

inline Vec2 unit_at(double angle) { return {std::cos(angle), std::sin(angle)}; }

}  // namespace rbill
