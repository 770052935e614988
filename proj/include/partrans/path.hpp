#pragma once

// Piecewise C^1 paths in a planar chart, parametrized on [0,1] with the
// global parameter distributed across pieces proportionally to arclength.
// Position is continuous across junctions (gap tolerance 1e-12); velocity may
// jump at junctions (polyline corners), which the transport integrator
// handles by integrating piece by piece.

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "partrans/geometry.hpp"

namespace partrans {

class PathError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kPathGapTol = 1e-12;

namespace path_piece {

struct Segment {
    Vec2 a, b;
};

// Circular arc, angles in radians; th1 < th0 traverses clockwise.
struct Arc {
    Vec2 center;
    double radius;
    double th0, th1;
};

// Corner-joined segments; arclength-uniform local parametrization.
struct Polyline {
    std::vector<Vec2> pts;
    std::vector<double> cum; // cumulative lengths, filled on construction
};

// Sampled curve with cubic Hermite (C^1) interpolation. `vel` holds the
// derivative with respect to the cell parameter u in [0, n-1]; when absent,
// Catmull-Rom tangents are used.
struct Sampled {
    std::vector<Vec2> pts;
    std::vector<Vec2> vel;
};

// Interval of the angular coordinate on a circle chart (rank-1 base);
// positions are (theta, 0) and only the x-component is meaningful.
struct Theta {
    double th0, th1;
};

} // namespace path_piece

using PathPiece = std::variant<path_piece::Segment, path_piece::Arc,
                               path_piece::Polyline, path_piece::Sampled,
                               path_piece::Theta>;

namespace path_detail {

struct Eval {
    Vec2 pos;
    Vec2 vel; // derivative with respect to the piece-local parameter u in [0,1]
};

inline double piece_length(const PathPiece& p);

inline Eval piece_eval(const PathPiece& p, double u);

inline Vec2 hermite(const path_piece::Sampled& s, double u, Vec2* dv) {
    int cells = static_cast<int>(s.pts.size()) - 1;
    double g = u * cells;
    int i = std::min(static_cast<int>(g), cells - 1);
    double w = g - i;
    Vec2 p0 = s.pts[i], p1 = s.pts[i + 1];
    Vec2 m0 = s.vel[i], m1 = s.vel[i + 1];
    double w2 = w * w, w3 = w2 * w;
    Vec2 pos = (2 * w3 - 3 * w2 + 1) * p0 + (w3 - 2 * w2 + w) * m0 +
               (-2 * w3 + 3 * w2) * p1 + (w3 - w2) * m1;
    if (dv) {
        Vec2 d = (6 * w2 - 6 * w) * p0 + (3 * w2 - 4 * w + 1) * m0 +
                 (-6 * w2 + 6 * w) * p1 + (3 * w2 - 2 * w) * m1;
        *dv = d * static_cast<double>(cells); // du cell -> du piece
    }
    return pos;
}

inline double piece_length(const PathPiece& p) {
    using namespace path_piece;
    if (std::holds_alternative<Segment>(p)) {
        const auto& s = std::get<Segment>(p);
        return dist(s.a, s.b);
    }
    if (std::holds_alternative<Arc>(p)) {
        const auto& a = std::get<Arc>(p);
        return a.radius * std::fabs(a.th1 - a.th0);
    }
    if (std::holds_alternative<Polyline>(p)) {
        const auto& pl = std::get<Polyline>(p);
        return pl.cum.back();
    }
    if (std::holds_alternative<Theta>(p)) {
        const auto& t = std::get<Theta>(p);
        return std::fabs(t.th1 - t.th0);
    }
    // Sampled: composite Simpson over the Hermite speed, 8 panels per cell.
    const auto& s = std::get<Sampled>(p);
    int cells = static_cast<int>(s.pts.size()) - 1;
    int n = 16 * cells; // even panel count
    double h = 1.0 / n;
    double acc = 0.0;
    auto speed = [&](double u) {
        Vec2 d;
        hermite(s, u, &d);
        return d.norm();
    };
    for (int i = 0; i < n; i += 2)
        acc += speed(i * h) + 4.0 * speed((i + 1) * h) + speed((i + 2) * h);
    return acc * h / 3.0;
}

inline Eval piece_eval(const PathPiece& p, double u) {
    using namespace path_piece;
    if (std::holds_alternative<Segment>(p)) {
        const auto& s = std::get<Segment>(p);
        return {s.a + (s.b - s.a) * u, s.b - s.a};
    }
    if (std::holds_alternative<Arc>(p)) {
        const auto& a = std::get<Arc>(p);
        double th = a.th0 + (a.th1 - a.th0) * u;
        Vec2 pos = a.center + Vec2{a.radius * std::cos(th), a.radius * std::sin(th)};
        double dth = a.th1 - a.th0;
        Vec2 vel = Vec2{-a.radius * std::sin(th), a.radius * std::cos(th)} * dth;
        return {pos, vel};
    }
    if (std::holds_alternative<Polyline>(p)) {
        const auto& pl = std::get<Polyline>(p);
        double target = u * pl.cum.back();
        std::size_t i = 1;
        while (i + 1 < pl.cum.size() && pl.cum[i] < target) ++i;
        double seg_len = pl.cum[i] - pl.cum[i - 1];
        double w = seg_len > 0 ? (target - pl.cum[i - 1]) / seg_len : 0.0;
        Vec2 a = pl.pts[i - 1], b = pl.pts[i];
        Vec2 vel = (b - a) * (pl.cum.back() / (seg_len > 0 ? seg_len : 1.0));
        return {a + (b - a) * w, vel};
    }
    if (std::holds_alternative<Theta>(p)) {
        const auto& t = std::get<Theta>(p);
        return {{t.th0 + (t.th1 - t.th0) * u, 0.0}, {t.th1 - t.th0, 0.0}};
    }
    const auto& s = std::get<Sampled>(p);
    Eval e;
    e.pos = hermite(s, u, &e.vel);
    return e;
}

inline Vec2 piece_start(const PathPiece& p) { return piece_eval(p, 0.0).pos; }
inline Vec2 piece_end(const PathPiece& p) { return piece_eval(p, 1.0).pos; }

} // namespace path_detail

class PathSpec {
public:
    PathSpec() = default;

    static PathSpec segment(const Vec2& a, const Vec2& b) {
        PathSpec p;
        p.append(path_piece::Segment{a, b});
        return p;
    }

    static PathSpec arc(const Vec2& center, double radius, double th0, double th1) {
        if (radius <= 0) throw PathError("arc radius must be positive");
        PathSpec p;
        p.append(path_piece::Arc{center, radius, th0, th1});
        return p;
    }

    static PathSpec polyline(std::vector<Vec2> pts) {
        if (pts.size() < 2) throw PathError("polyline needs at least 2 points");
        path_piece::Polyline pl;
        pl.pts = std::move(pts);
        pl.cum.resize(pl.pts.size());
        pl.cum[0] = 0.0;
        for (std::size_t i = 1; i < pl.pts.size(); ++i)
            pl.cum[i] = pl.cum[i - 1] + dist(pl.pts[i - 1], pl.pts[i]);
        if (pl.cum.back() <= 0)
            throw PathError("polyline has zero length");
        PathSpec p;
        p.append(std::move(pl));
        return p;
    }

    // Sampled curve; velocities are per-cell-parameter derivatives. With an
    // empty `vel`, Catmull-Rom tangents are used.
    static PathSpec sampled(std::vector<Vec2> pts, std::vector<Vec2> vel = {}) {
        if (pts.size() < 2) throw PathError("sampled curve needs at least 2 points");
        path_piece::Sampled s;
        s.pts = std::move(pts);
        if (vel.empty()) {
            std::size_t n = s.pts.size();
            s.vel.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                if (i == 0)
                    s.vel[i] = s.pts[1] - s.pts[0];
                else if (i + 1 == n)
                    s.vel[i] = s.pts[n - 1] - s.pts[n - 2];
                else
                    s.vel[i] = (s.pts[i + 1] - s.pts[i - 1]) * 0.5;
            }
        } else {
            if (vel.size() != s.pts.size())
                throw PathError("sampled curve velocity count mismatch");
            s.vel = std::move(vel);
        }
        PathSpec p;
        p.append(std::move(s));
        return p;
    }

    static PathSpec theta_interval(double th0, double th1) {
        if (th0 == th1) throw PathError("empty theta interval");
        PathSpec p;
        p.append(path_piece::Theta{th0, th1});
        return p;
    }

    void append(PathPiece piece) {
        double len = path_detail::piece_length(piece);
        if (!(len > 0))
            throw PathError("path piece has zero length");
        if (!pieces_.empty()) {
            Vec2 gap_a = path_detail::piece_end(pieces_.back());
            Vec2 gap_b = path_detail::piece_start(piece);
            if (dist(gap_a, gap_b) > kPathGapTol)
                throw PathError("path pieces do not join (gap " +
                                std::to_string(dist(gap_a, gap_b)) + ")");
        }
        pieces_.push_back(std::move(piece));
        lengths_.push_back(len);
        total_ += len;
    }

    PathSpec& operator+=(const PathSpec& other) {
        for (const auto& p : other.pieces_) append(p);
        return *this;
    }

    const std::vector<PathPiece>& pieces() const { return pieces_; }
    const std::vector<double>& piece_lengths() const { return lengths_; }
    double length() const { return total_; }
    bool empty() const { return pieces_.empty(); }

    Vec2 start() const {
        require_nonempty();
        return path_detail::piece_start(pieces_.front());
    }

    Vec2 end() const {
        require_nonempty();
        return path_detail::piece_end(pieces_.back());
    }

    bool is_closed(double tol = 1e-9) const {
        return !pieces_.empty() && dist(start(), end()) <= tol;
    }

    // Global parameter t in [0,1], arclength-proportional across pieces.
    Vec2 position(double t) const { return eval(t).pos; }

    // d position / d t (global parameter).
    Vec2 velocity(double t) const {
        auto [idx, u] = locate(t);
        auto e = path_detail::piece_eval(pieces_[idx], u);
        // piece-local u spans lengths_[idx]/total_ of global t
        return e.vel * (total_ / lengths_[idx]);
    }

    path_detail::Eval eval(double t) const {
        auto [idx, u] = locate(t);
        return path_detail::piece_eval(pieces_[idx], u);
    }

    PathSpec reversed() const {
        PathSpec r;
        for (auto it = pieces_.rbegin(); it != pieces_.rend(); ++it)
            r.append(reverse_piece(*it));
        return r;
    }

private:
    void require_nonempty() const {
        if (pieces_.empty()) throw PathError("empty path");
    }

    std::pair<std::size_t, double> locate(double t) const {
        require_nonempty();
        if (t < 0) t = 0;
        if (t > 1) t = 1;
        double target = t * total_;
        double acc = 0.0;
        for (std::size_t i = 0; i < pieces_.size(); ++i) {
            if (target <= acc + lengths_[i] || i + 1 == pieces_.size())
                return {i, std::clamp((target - acc) / lengths_[i], 0.0, 1.0)};
            acc += lengths_[i];
        }
        return {pieces_.size() - 1, 1.0};
    }

    static PathPiece reverse_piece(const PathPiece& p) {
        using namespace path_piece;
        if (std::holds_alternative<Segment>(p)) {
            const auto& s = std::get<Segment>(p);
            return Segment{s.b, s.a};
        }
        if (std::holds_alternative<Arc>(p)) {
            const auto& a = std::get<Arc>(p);
            return Arc{a.center, a.radius, a.th1, a.th0};
        }
        if (std::holds_alternative<Polyline>(p)) {
            auto pl = std::get<Polyline>(p);
            std::reverse(pl.pts.begin(), pl.pts.end());
            pl.cum[0] = 0.0;
            for (std::size_t i = 1; i < pl.pts.size(); ++i)
                pl.cum[i] = pl.cum[i - 1] + dist(pl.pts[i - 1], pl.pts[i]);
            return pl;
        }
        if (std::holds_alternative<Theta>(p)) {
            const auto& t = std::get<Theta>(p);
            return Theta{t.th1, t.th0};
        }
        auto s = std::get<Sampled>(p);
        std::reverse(s.pts.begin(), s.pts.end());
        std::reverse(s.vel.begin(), s.vel.end());
        for (auto& v : s.vel) v = -v;
        return s;
    }

    std::vector<PathPiece> pieces_;
    std::vector<double> lengths_;
    double total_ = 0.0;
};

} // namespace partrans
