#pragma once

// Small planar geometry kit shared by paths, regions, and homotopies.

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

namespace partrans {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2() = default;
    Vec2(double xx, double yy) : x(xx), y(yy) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2 operator-() const { return {-x, -y}; }
    friend Vec2 operator*(double s, const Vec2& v) { return v * s; }

    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double cross(const Vec2& o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }
    double squared_norm() const { return x * x + y * y; }

    Vec2 normalized() const {
        double n = norm();
        return n > 0 ? Vec2{x / n, y / n} : Vec2{0, 0};
    }

    // 90-degree counterclockwise rotation.
    Vec2 perp() const { return {-y, x}; }
};

inline double dist(const Vec2& a, const Vec2& b) { return (a - b).norm(); }

// Distance from point p to the closed segment [a, b].
inline double dist_point_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
    Vec2 d = b - a;
    double len2 = d.squared_norm();
    if (len2 == 0.0) return dist(p, a);
    double t = std::clamp((p - a).dot(d) / len2, 0.0, 1.0);
    return dist(p, a + d * t);
}

// Minimal distance between two closed segments.
inline double dist_segment_segment(const Vec2& a0, const Vec2& a1,
                                   const Vec2& b0, const Vec2& b1) {
    auto seg_intersect = [](const Vec2& p, const Vec2& p2, const Vec2& q,
                            const Vec2& q2) {
        Vec2 r = p2 - p, s = q2 - q;
        double denom = r.cross(s);
        Vec2 pq = q - p;
        if (denom == 0.0) return false; // parallel: endpoint distances cover it
        double t = pq.cross(s) / denom;
        double u = pq.cross(r) / denom;
        return t >= 0.0 && t <= 1.0 && u >= 0.0 && u <= 1.0;
    };
    if (seg_intersect(a0, a1, b0, b1)) return 0.0;
    return std::min(std::min(dist_point_segment(a0, b0, b1),
                             dist_point_segment(a1, b0, b1)),
                    std::min(dist_point_segment(b0, a0, a1),
                             dist_point_segment(b1, a0, a1)));
}

// Parameter t on [p0, p1] where the segment crosses segment [q0, q1],
// if the crossing is proper (both parameters within [0,1]).
inline std::optional<double> segment_segment_param(const Vec2& p0, const Vec2& p1,
                                                   const Vec2& q0, const Vec2& q1) {
    Vec2 r = p1 - p0, s = q1 - q0;
    double denom = r.cross(s);
    if (denom == 0.0) return std::nullopt;
    Vec2 pq = q0 - p0;
    double t = pq.cross(s) / denom;
    double u = pq.cross(r) / denom;
    if (t < 0.0 || t > 1.0 || u < 0.0 || u > 1.0) return std::nullopt;
    return t;
}

// Parameters t in [0,1] along [a, b] where the segment meets the circle
// |p - c| = rho, sorted ascending.
inline std::vector<double> segment_circle_params(const Vec2& a, const Vec2& b,
                                                 const Vec2& c, double rho) {
    Vec2 d = b - a, f = a - c;
    double A = d.squared_norm();
    double B = 2.0 * f.dot(d);
    double C = f.squared_norm() - rho * rho;
    std::vector<double> out;
    if (A == 0.0) return out;
    double disc = B * B - 4 * A * C;
    if (disc < 0.0) return out;
    double sq = std::sqrt(disc);
    // Numerically stable quadratic roots.
    double q = -0.5 * (B + (B >= 0 ? sq : -sq));
    double t1 = q / A;
    double t2 = (q != 0.0) ? C / q : t1;
    if (t1 > t2) std::swap(t1, t2);
    if (t1 >= 0.0 && t1 <= 1.0) out.push_back(t1);
    if (t2 >= 0.0 && t2 <= 1.0 && t2 != t1) out.push_back(t2);
    return out;
}

// Wrap an angle into [0, 2*pi).
inline double wrap_angle(double th) {
    const double tau = 2.0 * M_PI;
    double r = std::fmod(th, tau);
    if (r < 0) r += tau;
    return r;
}

} // namespace partrans
