#pragma once

// Detour decompositions along a base segment p0 -> p around a removed set:
// a tube construction around one segment, and disk-chain covers for finite
// point sets and disjoint segments. Every decomposition records, per detour
// region: the bypassed subsegment J_i, the detour curve gamma_i, a certified
// cover area mu_i (full tube/disk-union area, an upper bound for anything a
// homotopy between J_i and gamma_i can sweep), the exact enclosed area, a
// homotopy length bound L_i, and the explicit homotopy grid.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "partrans/geometry.hpp"
#include "partrans/homotopy.hpp"
#include "partrans/path.hpp"

namespace partrans {

class RegionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Removed sets

class RemovedSet {
public:
    static RemovedSet points(std::vector<Vec2> pts) {
        if (pts.empty()) throw RegionError("removed set needs at least one point");
        for (const auto& q : pts)
            if (!std::isfinite(q.x) || !std::isfinite(q.y))
                throw RegionError("removed set data must be finite");
        RemovedSet f;
        f.pts_ = std::move(pts);
        return f;
    }

    static RemovedSet segment(const Vec2& a, const Vec2& b) {
        return segments({{a, b}});
    }

    static RemovedSet segments(std::vector<std::array<Vec2, 2>> segs) {
        if (segs.empty())
            throw RegionError("removed set needs at least one segment");
        for (const auto& s : segs) {
            if (!std::isfinite(s[0].x) || !std::isfinite(s[0].y) ||
                !std::isfinite(s[1].x) || !std::isfinite(s[1].y))
                throw RegionError("removed set data must be finite");
            if (dist(s[0], s[1]) <= 0)
                throw RegionError("removed segment has zero length");
        }
        for (std::size_t i = 0; i < segs.size(); ++i)
            for (std::size_t j = i + 1; j < segs.size(); ++j)
                if (dist_segment_segment(segs[i][0], segs[i][1], segs[j][0],
                                         segs[j][1]) <= 0)
                    throw RegionError("removed segments must be disjoint");
        RemovedSet f;
        f.segs_ = std::move(segs);
        return f;
    }

    bool is_points() const { return !pts_.empty(); }
    const std::vector<Vec2>& point_data() const { return pts_; }
    const std::vector<std::array<Vec2, 2>>& segment_data() const { return segs_; }

    std::size_t component_count() const {
        return is_points() ? pts_.size() : segs_.size();
    }

    double distance(const Vec2& q) const {
        double d = std::numeric_limits<double>::infinity();
        for (const auto& c : pts_) d = std::min(d, dist(q, c));
        for (const auto& s : segs_)
            d = std::min(d, dist_point_segment(q, s[0], s[1]));
        return d;
    }

    // Minimal distance from the closed segment [a,b] to the set.
    double segment_distance(const Vec2& a, const Vec2& b) const {
        double d = std::numeric_limits<double>::infinity();
        for (const auto& c : pts_) d = std::min(d, dist_point_segment(c, a, b));
        for (const auto& s : segs_)
            d = std::min(d, dist_segment_segment(a, b, s[0], s[1]));
        return d;
    }

private:
    RemovedSet() = default;
    std::vector<Vec2> pts_;
    std::vector<std::array<Vec2, 2>> segs_;
};

// ---------------------------------------------------------------------------
// Signed Green area of path pieces: 1/2 integral of (x dy - y dx)

namespace region_detail {

inline double green_piece(const PathPiece& p) {
    using namespace path_piece;
    if (std::holds_alternative<Segment>(p)) {
        const auto& s = std::get<Segment>(p);
        return 0.5 * s.a.cross(s.b);
    }
    if (std::holds_alternative<Arc>(p)) {
        const auto& a = std::get<Arc>(p);
        double c = a.center.x, d = a.center.y, r = a.radius;
        return 0.5 * (r * r * (a.th1 - a.th0) +
                      c * r * (std::sin(a.th1) - std::sin(a.th0)) +
                      d * r * (std::cos(a.th0) - std::cos(a.th1)));
    }
    if (std::holds_alternative<Polyline>(p)) {
        const auto& pl = std::get<Polyline>(p);
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < pl.pts.size(); ++i)
            acc += 0.5 * pl.pts[i].cross(pl.pts[i + 1]);
        return acc;
    }
    if (std::holds_alternative<Sampled>(p)) {
        const auto& s = std::get<Sampled>(p);
        int cells = static_cast<int>(s.pts.size()) - 1;
        int n = 16 * cells;
        double h = 1.0 / n, acc = 0.0;
        auto f = [&](double u) {
            Vec2 v;
            Vec2 q = path_detail::hermite(s, u, &v);
            return 0.5 * q.cross(v);
        };
        for (int i = 0; i < n; i += 2)
            acc += f(i * h) + 4.0 * f((i + 1) * h) + f((i + 2) * h);
        return acc * h / 3.0;
    }
    throw RegionError("theta pieces carry no plane area");
}

} // namespace region_detail

inline double signed_green(const PathSpec& path) {
    double acc = 0.0;
    for (const auto& p : path.pieces()) acc += region_detail::green_piece(p);
    return acc;
}

// Area enclosed by the Jordan curve J * reversed(gamma), J the straight
// chord and gamma the detour with the same endpoints.
inline double enclosed_area(const Vec2& j0, const Vec2& j1, const PathSpec& gamma) {
    return std::fabs(0.5 * j0.cross(j1) - signed_green(gamma));
}

// ---------------------------------------------------------------------------
// Closed boundary loops made of segments and arcs

namespace region_detail {

struct PieceRef {
    PathPiece piece;
    double len = 0.0;
};

class BoundaryLoop {
public:
    void add(PathPiece piece) {
        double len = path_detail::piece_length(piece);
        if (!(len > 0)) throw RegionError("degenerate boundary piece");
        if (!pieces_.empty()) {
            Vec2 gap_a = path_detail::piece_end(pieces_.back().piece);
            Vec2 gap_b = path_detail::piece_start(piece);
            if (dist(gap_a, gap_b) > 1e-9)
                throw RegionError("boundary pieces do not join");
        }
        pieces_.push_back({std::move(piece), len});
        total_ += len;
    }

    void close() {
        if (pieces_.empty()) throw RegionError("empty boundary loop");
        Vec2 a = path_detail::piece_end(pieces_.back().piece);
        Vec2 b = path_detail::piece_start(pieces_.front().piece);
        if (dist(a, b) > 1e-9) throw RegionError("boundary loop does not close");
        closed_ = true;
    }

    double length() const { return total_; }

    Vec2 at(double s) const {
        auto [i, u] = split(s);
        return path_detail::piece_eval(pieces_[i].piece, u).pos;
    }

    // Arclength position of a point on the loop; throws when q is farther
    // than tol from every piece.
    double locate(const Vec2& q, double tol = 1e-7) const {
        require_closed();
        double best_d = std::numeric_limits<double>::infinity();
        double best_s = 0.0, run = 0.0;
        for (const auto& pr : pieces_) {
            auto [d, u] = nearest_param(pr.piece, q);
            if (d < best_d) {
                best_d = d;
                best_s = run + u * pr.len;
            }
            run += pr.len;
        }
        if (best_d > tol) throw RegionError("point is not on the boundary loop");
        return std::fmod(best_s, total_);
    }

    // Directed subpath between arclength positions. forward follows the
    // loop orientation; both directions wrap around the seam.
    PathSpec subpath(double s0, double s1, bool forward) const {
        require_closed();
        double span = forward ? wrap_len(s1 - s0) : wrap_len(s0 - s1);
        if (span <= 1e-14) throw RegionError("empty boundary subpath");
        PathSpec out;
        double left = span;
        double cursor = s0;
        std::size_t guard = 4 * pieces_.size() + 16;
        while (left > 1e-14) {
            if (guard-- == 0) throw RegionError("boundary subpath stalled");
            auto [i, u] = split(cursor);
            const PieceRef& pr = pieces_[i];
            double room = forward ? pr.len * (1.0 - u) : pr.len * u;
            if (room <= 1e-14) {
                // sitting on a piece boundary: nudge onto the neighbor
                cursor = wrap_len(cursor + (forward ? room + 1e-14
                                                    : -room - 1e-14));
                continue;
            }
            double here = std::min(room, left);
            double u2 = forward ? u + here / pr.len : u - here / pr.len;
            out.append(fragment(pr.piece, u, u2));
            cursor = wrap_len(cursor + (forward ? here : -here));
            left -= here;
        }
        return out;
    }

    const std::vector<PieceRef>& pieces() const { return pieces_; }

private:
    void require_closed() const {
        if (!closed_) throw RegionError("boundary loop is not closed");
    }

    double wrap_len(double s) const {
        double r = std::fmod(s, total_);
        if (r < 0) r += total_;
        return r;
    }

    // piece index and local parameter at arclength position s; positions on
    // a piece boundary land at the start of the later piece
    std::pair<std::size_t, double> split(double s) const {
        double r = wrap_len(s);
        for (std::size_t i = 0; i < pieces_.size(); ++i) {
            if (r < pieces_[i].len || i + 1 == pieces_.size())
                return {i, std::clamp(r / pieces_[i].len, 0.0, 1.0)};
            r -= pieces_[i].len;
        }
        return {pieces_.size() - 1, 1.0};
    }

    static std::pair<double, double> nearest_param(const PathPiece& p,
                                                   const Vec2& q) {
        using namespace path_piece;
        if (std::holds_alternative<Segment>(p)) {
            const auto& s = std::get<Segment>(p);
            Vec2 d = s.b - s.a;
            double u = std::clamp((q - s.a).dot(d) / d.squared_norm(), 0.0, 1.0);
            return {dist(q, s.a + d * u), u};
        }
        const auto& a = std::get<Arc>(p);
        double th = std::atan2(q.y - a.center.y, q.x - a.center.x);
        double lo = std::min(a.th0, a.th1), hi = std::max(a.th0, a.th1);
        // shift th by whole turns into [lo, hi] if possible
        double best_d = std::numeric_limits<double>::infinity(), best_u = 0.0;
        for (double cand = th - 4.0 * M_PI; cand <= th + 4.0 * M_PI + 1e-9;
             cand += 2.0 * M_PI) {
            double cl = std::clamp(cand, lo, hi);
            Vec2 pt = a.center +
                      Vec2{a.radius * std::cos(cl), a.radius * std::sin(cl)};
            double d = dist(q, pt);
            if (d < best_d) {
                best_d = d;
                best_u = (cl - a.th0) / (a.th1 - a.th0);
            }
        }
        return {best_d, best_u};
    }

    // sub-piece between local parameters (u1 < u0 reverses direction)
    static PathPiece fragment(const PathPiece& p, double u0, double u1) {
        using namespace path_piece;
        if (std::holds_alternative<Segment>(p)) {
            const auto& s = std::get<Segment>(p);
            auto lerp = [&](double u) { return s.a + (s.b - s.a) * u; };
            return Segment{lerp(u0), lerp(u1)};
        }
        const auto& a = std::get<Arc>(p);
        double span = a.th1 - a.th0;
        return Arc{a.center, a.radius, a.th0 + span * u0, a.th0 + span * u1};
    }

    std::vector<PieceRef> pieces_;
    double total_ = 0.0;
    bool closed_ = false;
};

} // namespace region_detail

// ---------------------------------------------------------------------------
// Decompositions

struct RegionItem {
    Vec2 j0, j1;           // bypassed subsegment of p0->p
    PathSpec gamma;        // detour from j0 to j1
    double mu = 0.0;       // certified cover area (enters the budgets)
    double area_exact = 0; // Green's-theorem area enclosed by J * gamma
    double L = 0.0;        // homotopy length bound
    std::optional<HomotopyGrid> homotopy;
    std::string homotopy_kind = "linear";
    double entry_t = 0.0, exit_t = 0.0; // parameters along p0->p
};

struct RegionDecomposition {
    Vec2 p0, p;
    Vec2 K_center;
    double K_radius = 0.0;
    std::vector<RegionItem> items; // detour regions, ordered along p0->p
    PathSpec walk;                 // full modified path p0 -> p
    std::string construction;     // "segment-tube" | "disk-cover" | "trivial"

    double walk_length() const { return walk.empty() ? 0.0 : walk.length(); }
};

inline double r_budget(const RegionDecomposition& dec) {
    double acc = 0.0;
    for (const auto& it : dec.items) acc += it.mu;
    return acc;
}

// e^{(G/2) L_walk} * sum_i e^{G L_i} mu_i. Reduces to r_budget at G = 0.
inline double rplus_budget(const RegionDecomposition& dec, double G) {
    if (dec.items.empty()) return 0.0;
    double acc = 0.0;
    for (const auto& it : dec.items) acc += std::exp(G * it.L) * it.mu;
    return std::exp(0.5 * G * dec.walk_length()) * acc;
}

namespace region_detail {

inline Vec2 lerp(const Vec2& a, const Vec2& b, double t) {
    return a + (b - a) * t;
}

// First/last parameter in [0,1] where dist(seg(t), target) == delta, found
// by coarse march plus bisection. Requires a sign change.
template <typename DistFn>
inline std::pair<double, double> crossing_params(const Vec2& p0, const Vec2& p1,
                                                 DistFn&& distance, double delta) {
    auto f = [&](double t) { return distance(lerp(p0, p1, t)) - delta; };
    const int n = 4096;
    double t_in = -1.0, t_out = -1.0;
    double prev = f(0.0);
    for (int i = 1; i <= n; ++i) {
        double t = static_cast<double>(i) / n;
        double cur = f(t);
        if (t_in < 0 && prev > 0 && cur <= 0) {
            double lo = static_cast<double>(i - 1) / n, hi = t;
            for (int k = 0; k < 80; ++k) {
                double mid = 0.5 * (lo + hi);
                (f(mid) > 0 ? lo : hi) = mid;
            }
            t_in = 0.5 * (lo + hi);
        }
        if (prev <= 0 && cur > 0) {
            double lo = static_cast<double>(i - 1) / n, hi = t;
            for (int k = 0; k < 80; ++k) {
                double mid = 0.5 * (lo + hi);
                (f(mid) <= 0 ? lo : hi) = mid;
            }
            t_out = 0.5 * (lo + hi);
        }
        prev = cur;
    }
    if (t_in < 0 || t_out < 0 || t_out <= t_in)
        throw RegionError("base segment does not cross the boundary cleanly");
    return {t_in, t_out};
}

// Sweep homotopy between the chord and gamma. Pieces of gamma much shorter
// than the rest (tube caps at small delta) get a guaranteed share of the
// t-grid through a piecewise-linear warp whose knots sit on quadrature
// panel boundaries; otherwise the sweep is the plain one.
inline HomotopyGrid item_sweep(const Vec2& j0, const Vec2& j1,
                               const PathSpec& gamma, int nt = 65, int ns = 33) {
    PathSpec chord = PathSpec::segment(j0, j1);
    const auto& lens = gamma.piece_lengths();
    std::size_t n = lens.size();
    std::size_t panels = static_cast<std::size_t>((nt - 1) / 2);
    double total = gamma.length();
    double shortest = *std::min_element(lens.begin(), lens.end());
    if (n < 2 || n > panels / 2 || shortest > 0.05 * total)
        return HomotopyGrid::linear_sweep(chord, gamma, nt, ns);

    double floor_len = 0.5 * total / static_cast<double>(n);
    std::vector<double> share(n);
    double share_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        share[i] = std::max(lens[i], floor_len);
        share_sum += share[i];
    }
    std::vector<double> tk{0.0}, uk{0.0};
    double cum_share = 0.0, cum_len = 0.0;
    long prev_idx = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        cum_share += share[i];
        cum_len += lens[i];
        long idx = std::lround(cum_share / share_sum * panels);
        idx = std::clamp(idx, prev_idx + 1,
                         static_cast<long>(panels) - static_cast<long>(n - 1 - i));
        prev_idx = idx;
        tk.push_back(static_cast<double>(idx) / static_cast<double>(panels));
        uk.push_back(cum_len / total);
    }
    tk.push_back(1.0);
    uk.push_back(1.0);
    return HomotopyGrid::linear_sweep_warped(chord, gamma, tk, uk, nt, ns);
}

// Build one detour item between chord endpoints on a boundary loop:
// shorter boundary route, counterclockwise on ties.
inline RegionItem make_item(const BoundaryLoop& loop, const Vec2& q_in,
                            const Vec2& q_out, double t_in, double t_out,
                            double mu_certified) {
    double s_in = loop.locate(q_in);
    double s_out = loop.locate(q_out);
    double fwd = std::fmod(s_out - s_in + loop.length(), loop.length());
    double bwd = loop.length() - fwd;
    bool forward = fwd <= bwd + 1e-9 * loop.length();
    PathSpec gamma = loop.subpath(s_in, s_out, forward);

    RegionItem item;
    item.j0 = q_in;
    item.j1 = q_out;
    item.gamma = std::move(gamma);
    item.mu = mu_certified;
    item.area_exact = enclosed_area(q_in, q_out, item.gamma);
    item.L = std::max(dist(q_in, q_out), item.gamma.length());
    item.homotopy = item_sweep(q_in, q_out, item.gamma);
    item.homotopy_kind = "linear";
    item.entry_t = t_in;
    item.exit_t = t_out;
    return item;
}

// True when gamma crosses the open chord (j0, j1) away from its endpoints.
inline bool crosses_open_chord(const PathSpec& gamma, const Vec2& j0,
                               const Vec2& j1) {
    using namespace path_piece;
    const double edge = 1e-9;
    for (const auto& piece : gamma.pieces()) {
        if (std::holds_alternative<Segment>(piece)) {
            const auto& s = std::get<Segment>(piece);
            auto t = segment_segment_param(j0, j1, s.a, s.b);
            if (t && *t > edge && *t < 1.0 - edge) {
                // exclude hits at the gamma piece's own endpoints
                Vec2 hit = lerp(j0, j1, *t);
                if (dist(hit, s.a) > edge && dist(hit, s.b) > edge) return true;
            }
        } else if (std::holds_alternative<Arc>(piece)) {
            const auto& a = std::get<Arc>(piece);
            for (double t : segment_circle_params(j0, j1, a.center, a.radius)) {
                if (t <= edge || t >= 1.0 - edge) continue;
                Vec2 hit = lerp(j0, j1, t);
                double th = std::atan2(hit.y - a.center.y, hit.x - a.center.x);
                double lo = std::min(a.th0, a.th1), hi = std::max(a.th0, a.th1);
                bool on_arc = false;
                for (double cand = th - 4.0 * M_PI; cand <= th + 4.0 * M_PI + 1e-9;
                     cand += 2.0 * M_PI)
                    if (cand >= lo - 1e-12 && cand <= hi + 1e-12) on_arc = true;
                if (!on_arc) continue;
                if (dist(hit, path_detail::piece_start(piece)) > edge &&
                    dist(hit, path_detail::piece_end(piece)) > edge)
                    return true;
            }
        }
    }
    return false;
}

inline void set_kp(RegionDecomposition& dec, double geometry_reach) {
    dec.K_center = lerp(dec.p0, dec.p, 0.5);
    double r = std::max(dist(dec.K_center, dec.p0), dist(dec.K_center, dec.p));
    r = std::max(r, geometry_reach);
    dec.K_radius = 1.5 * r;
}

inline void assemble_walk(RegionDecomposition& dec) {
    if (dec.items.empty()) {
        dec.walk = PathSpec::segment(dec.p0, dec.p);
        return;
    }
    PathSpec walk;
    Vec2 cur = dec.p0;
    for (const auto& it : dec.items) {
        if (dist(cur, it.j0) > 1e-13) walk += PathSpec::segment(cur, it.j0);
        walk += it.gamma;
        cur = it.j1;
    }
    if (dist(cur, dec.p) > 1e-13) walk += PathSpec::segment(cur, dec.p);
    dec.walk = std::move(walk);
}

} // namespace region_detail

// Consistency checks shared by all constructions: item ordering and
// disjointness, Jordan closure, clearance of the straight runs from F,
// containment in K_p, chord simplicity, and certified areas covering the
// item homotopies.
inline void validate_decomposition(const RegionDecomposition& dec,
                                   const RemovedSet& F) {
    const auto& items = dec.items;
    for (std::size_t i = 0; i < items.size(); ++i) {
        const RegionItem& it = items[i];
        if (i > 0 && it.entry_t < items[i - 1].exit_t - 1e-12)
            throw RegionError("detour subsegments overlap");
        if (dist(it.gamma.start(), it.j0) > 1e-10 ||
            dist(it.gamma.end(), it.j1) > 1e-10)
            throw RegionError("detour does not close against its subsegment");
        if (region_detail::crosses_open_chord(it.gamma, it.j0, it.j1))
            throw RegionError("detour crosses its chord");
        if (!it.homotopy)
            throw RegionError("detour item is missing its homotopy");
        double swept = homotopy_area(*it.homotopy);
        if (swept > it.mu * (1.0 + 1e-6) + 1e-12)
            throw RegionError("certified area does not cover the homotopy");
        // containment in K_p
        for (int k = 0; k <= 64; ++k) {
            Vec2 q = it.gamma.position(k / 64.0);
            if (dist(q, dec.K_center) > dec.K_radius + 1e-9)
                throw RegionError("detour leaves the compact disk");
        }
    }
    // straight runs keep a clearance from F
    double clearance = std::numeric_limits<double>::infinity();
    Vec2 cur = dec.p0;
    auto run = [&](const Vec2& a, const Vec2& b) {
        if (dist(a, b) > 1e-13)
            clearance = std::min(clearance, F.segment_distance(a, b));
    };
    for (const auto& it : items) {
        run(cur, it.j0);
        cur = it.j1;
    }
    run(cur, dec.p);
    if (clearance < 1e-9)
        throw RegionError("straight runs pass too close to the removed set");
    if (dist(dec.walk.start(), dec.p0) > 1e-10 ||
        dist(dec.walk.end(), dec.p) > 1e-10)
        throw RegionError("walk endpoints drifted");
}

// ---------------------------------------------------------------------------
// Tube decomposition around one removed segment

// Detour around the delta-tube of segment [a, b]. delta must stay below
// min(|ab|/2, dist(p0, ab), dist(p, ab)). When p0p misses [a, b] the result
// is trivial (no items).
inline RegionDecomposition segment_tube_decomposition(const Vec2& a, const Vec2& b,
                                                      const Vec2& p0, const Vec2& p,
                                                      double delta) {
    if (!(delta > 0)) throw RegionError("delta must be positive");
    double cap = std::min({0.5 * dist(a, b), dist_point_segment(p0, a, b),
                           dist_point_segment(p, a, b)});
    if (!(delta < cap))
        throw RegionError("delta " + std::to_string(delta) +
                          " reaches the tube cap " + std::to_string(cap));

    RegionDecomposition dec;
    dec.p0 = p0;
    dec.p = p;
    Vec2 mid = region_detail::lerp(p0, p, 0.5);
    double reach = std::max(dist(mid, a), dist(mid, b)) + delta;
    region_detail::set_kp(dec, reach);

    if (!segment_segment_param(p0, p, a, b)) {
        dec.construction = "trivial";
        region_detail::assemble_walk(dec);
        RemovedSet F = RemovedSet::segment(a, b);
        validate_decomposition(dec, F);
        return dec;
    }
    dec.construction = "segment-tube";

    auto [t_in, t_out] = region_detail::crossing_params(
        p0, p, [&](const Vec2& q) { return dist_point_segment(q, a, b); },
        delta);
    Vec2 q_in = region_detail::lerp(p0, p, t_in);
    Vec2 q_out = region_detail::lerp(p0, p, t_out);

    // capsule boundary, counterclockwise
    Vec2 t_hat = (b - a).normalized();
    Vec2 n_hat = t_hat.perp();
    double alpha = std::atan2(t_hat.y, t_hat.x);
    region_detail::BoundaryLoop loop;
    loop.add(path_piece::Segment{a - delta * n_hat, b - delta * n_hat});
    loop.add(path_piece::Arc{b, delta, alpha - M_PI / 2, alpha + M_PI / 2});
    loop.add(path_piece::Segment{b + delta * n_hat, a + delta * n_hat});
    loop.add(path_piece::Arc{a, delta, alpha + M_PI / 2, alpha + 3 * M_PI / 2});
    loop.close();

    double mu = 2.0 * delta * dist(a, b) + M_PI * delta * delta; // full tube
    dec.items.push_back(
        region_detail::make_item(loop, q_in, q_out, t_in, t_out, mu));
    region_detail::assemble_walk(dec);
    validate_decomposition(dec, RemovedSet::segment(a, b));
    return dec;
}

// Largest delta on a 1e-6 grid whose budget stays below eps; verified by
// re-evaluation before returning.
inline double choose_delta(const Vec2& a, const Vec2& b, const Vec2& p0,
                           const Vec2& p, double G, double eps) {
    if (!(eps > 0)) throw RegionError("eps must be positive");
    const double grid = 1e-6;
    double cap = std::min({0.5 * dist(a, b), dist_point_segment(p0, a, b),
                           dist_point_segment(p, a, b)});
    if (cap <= 2 * grid) throw RegionError("tube cap is below the search grid");
    double hi = cap * (1.0 - 1e-6);

    auto budget = [&](double d) {
        return rplus_budget(segment_tube_decomposition(a, b, p0, p, d), G);
    };
    if (budget(hi) < eps) return hi;
    if (!(budget(grid) < eps))
        throw RegionError("eps unreachable at the smallest grid delta");

    long lo_k = 1, hi_k = static_cast<long>(hi / grid);
    while (hi_k - lo_k > 1) {
        long mid = lo_k + (hi_k - lo_k) / 2;
        (budget(mid * grid) < eps ? lo_k : hi_k) = mid;
    }
    double delta = lo_k * grid;
    if (!(budget(delta) < eps))
        throw RegionError("bisection result failed re-verification");
    return delta;
}

// ---------------------------------------------------------------------------
// Disk-cover decomposition

namespace region_detail {

struct Component {
    bool is_point = true;
    Vec2 a, b;                 // b unused for points
    std::vector<Vec2> centers; // cover disks
    double rho = 0.0;
    BoundaryLoop loop;
    double cover_area() const {
        return static_cast<double>(centers.size()) * M_PI * rho * rho;
    }
};

inline double component_gap(const RemovedSet& F, std::size_t i, std::size_t j) {
    auto distance = [&](std::size_t k, const Vec2& q) {
        if (F.is_points()) return dist(F.point_data()[k], q);
        const auto& s = F.segment_data()[k];
        return dist_point_segment(q, s[0], s[1]);
    };
    if (F.is_points()) return distance(j, F.point_data()[i]);
    const auto& si = F.segment_data()[i];
    const auto& sj = F.segment_data()[j];
    return dist_segment_segment(si[0], si[1], sj[0], sj[1]);
}

inline double component_point_gap(const RemovedSet& F, std::size_t i,
                                  const Vec2& q) {
    if (F.is_points()) return dist(F.point_data()[i], q);
    const auto& s = F.segment_data()[i];
    return dist_point_segment(q, s[0], s[1]);
}

// CCW boundary of a chain of equal disks with centers on one line.
inline BoundaryLoop chain_loop(const std::vector<Vec2>& centers, double rho) {
    BoundaryLoop loop;
    std::size_t m = centers.size();
    if (m == 1) {
        loop.add(path_piece::Arc{centers[0], rho, M_PI, 3.0 * M_PI});
        loop.close();
        return loop;
    }
    Vec2 t_hat = (centers.back() - centers.front()).normalized();
    double alpha = std::atan2(t_hat.y, t_hat.x);
    double delta = dist(centers[0], centers[1]);
    double phi = std::atan2(std::sqrt(rho * rho - 0.25 * delta * delta),
                            0.5 * delta);
    // bottom, left to right
    loop.add(path_piece::Arc{centers[0], rho, alpha + M_PI,
                             alpha + 2.0 * M_PI - phi});
    for (std::size_t k = 1; k + 1 < m; ++k)
        loop.add(path_piece::Arc{centers[k], rho, alpha - M_PI + phi,
                                 alpha - phi});
    // right cap
    loop.add(path_piece::Arc{centers[m - 1], rho, alpha - M_PI + phi,
                             alpha + M_PI - phi});
    // top, right to left
    for (std::size_t k = m - 2; k >= 1; --k)
        loop.add(path_piece::Arc{centers[k], rho, alpha + phi,
                                 alpha + M_PI - phi});
    loop.add(path_piece::Arc{centers[0], rho, alpha + phi, alpha + M_PI});
    loop.close();
    return loop;
}

inline bool inside_component(const Component& c, const Vec2& q, double slack) {
    for (const auto& ctr : c.centers)
        if (dist(q, ctr) <= c.rho + slack) return true;
    return false;
}

// Maximal sub-intervals of p0p inside the component cover, via the sorted
// circle crossings. Returns {t_in, t_out} pairs.
inline std::vector<std::pair<double, double>> crossing_intervals(
    const Component& c, const Vec2& p0, const Vec2& p) {
    std::vector<double> ts;
    for (const auto& ctr : c.centers)
        for (double t : segment_circle_params(p0, p, ctr, c.rho))
            ts.push_back(t);
    std::sort(ts.begin(), ts.end());
    std::vector<std::pair<double, double>> out;
    const double probe = 1e-9;
    bool open = false;
    double t_open = 0.0;
    for (double t : ts) {
        bool before = inside_component(c, lerp(p0, p, std::max(0.0, t - probe)),
                                       -1e-12);
        bool after = inside_component(c, lerp(p0, p, std::min(1.0, t + probe)),
                                      -1e-12);
        if (!before && after && !open) {
            open = true;
            t_open = t;
        }
        if (before && !after && open) {
            out.emplace_back(t_open, t);
            open = false;
        }
    }
    return out;
}

// Degeneracy probes: near-tangency or a crossing too close to a
// circle-circle seam makes the walk ambiguous; the caller inflates and
// retries.
inline bool degenerate_crossing(const Component& c, const Vec2& p0, const Vec2& p,
                                const std::vector<std::pair<double, double>>& iv) {
    const double margin = 1e-9;
    std::vector<Vec2> seams;
    for (std::size_t k = 0; k + 1 < c.centers.size(); ++k) {
        Vec2 mid = lerp(c.centers[k], c.centers[k + 1], 0.5);
        double half = 0.5 * dist(c.centers[k], c.centers[k + 1]);
        double q = std::sqrt(std::max(0.0, c.rho * c.rho - half * half));
        Vec2 n = (c.centers[k + 1] - c.centers[k]).normalized().perp();
        seams.push_back(mid + q * n);
        seams.push_back(mid - q * n);
    }
    for (const auto& [t0, t1] : iv) {
        if (t1 - t0 < 1e-7) return true; // grazing pass
        for (const Vec2& s : seams) {
            if (dist(lerp(p0, p, t0), s) < margin) return true;
            if (dist(lerp(p0, p, t1), s) < margin) return true;
        }
    }
    return false;
}

} // namespace region_detail

// Cover each component of F by disks of total area below eps (split evenly
// across components, then across that component's crossing intervals), and
// detour every crossing of p0p along the shorter boundary route.
inline RegionDecomposition disk_cover_decomposition(const RemovedSet& F,
                                                    const Vec2& p0, const Vec2& p,
                                                    double eps) {
    using region_detail::Component;
    if (!(eps > 0)) throw RegionError("eps must be positive");
    if (F.distance(p0) <= 0 || F.distance(p) <= 0)
        throw RegionError("base points must avoid the removed set");

    std::size_t n = F.component_count();
    double eps_k = eps / static_cast<double>(n);

    // per-component radius caps from pairwise and endpoint separations
    std::vector<double> caps(n, std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j)
            if (j != i)
                caps[i] = std::min(caps[i], region_detail::component_gap(F, i, j));
        caps[i] = std::min(caps[i], region_detail::component_point_gap(F, i, p0));
        caps[i] = std::min(caps[i], region_detail::component_point_gap(F, i, p));
        caps[i] *= 0.45;
        if (!(caps[i] > 0))
            throw RegionError("component separations leave no room for disks");
    }

    auto build_component = [&](std::size_t i, double budget,
                               double inflate) -> Component {
        Component c;
        if (F.is_points()) {
            c.is_point = true;
            c.a = F.point_data()[i];
            c.rho = std::min(std::sqrt(budget / M_PI), caps[i]) * inflate;
            c.centers = {c.a};
        } else {
            c.is_point = false;
            c.a = F.segment_data()[i][0];
            c.b = F.segment_data()[i][1];
            double len = dist(c.a, c.b);
            // pi len rho + 2 pi rho^2 = budget, the smooth majorant of the
            // chain area (ceil(len/rho)+1) pi rho^2
            double rho_star =
                0.25 * (-len + std::sqrt(len * len + 8.0 * budget / M_PI));
            c.rho = std::min(rho_star, caps[i]) * inflate;
            long m = std::max<long>(1, static_cast<long>(std::ceil(len / c.rho)));
            Vec2 t_hat = (c.b - c.a).normalized();
            for (long k = 0; k <= m; ++k)
                c.centers.push_back(c.a + (len * k / m) * t_hat);
        }
        c.loop = region_detail::chain_loop(c.centers, c.rho);
        return c;
    };

    RegionDecomposition dec;
    dec.p0 = p0;
    dec.p = p;
    dec.construction = "disk-cover";

    std::vector<RegionItem> items;
    double reach = 0.0;
    Vec2 mid = region_detail::lerp(p0, p, 0.5);

    for (std::size_t i = 0; i < n; ++i) {
        double budget = eps_k;
        Component comp;
        std::vector<std::pair<double, double>> intervals;
        bool ok = false;
        // two outer rounds: a second pass splits the budget across the
        // intervals found in the first; inside each, up to 3 inflation
        // retries resolve tangencies
        for (int round = 0; round < 3 && !ok; ++round) {
            for (int attempt = 0; attempt < 3; ++attempt) {
                double inflate = 1.0 + attempt * 1e-9;
                comp = build_component(i, budget, inflate);
                intervals = region_detail::crossing_intervals(comp, p0, p);
                if (!region_detail::degenerate_crossing(comp, p0, p, intervals)) {
                    ok = true;
                    break;
                }
            }
            if (!ok) throw RegionError("cover walk stayed degenerate");
            std::size_t m = std::max<std::size_t>(1, intervals.size());
            if (comp.cover_area() * m <= eps_k * (1.0 + 1e-9)) break;
            budget = eps_k / static_cast<double>(m);
            ok = false;
        }
        if (!ok) throw RegionError("cover walk did not stabilize");

        for (const auto& ctr : comp.centers)
            reach = std::max(reach, dist(mid, ctr) + comp.rho);

        for (const auto& [t0, t1] : intervals) {
            RegionItem item = region_detail::make_item(
                comp.loop, region_detail::lerp(p0, p, t0),
                region_detail::lerp(p0, p, t1), t0, t1, comp.cover_area());
            if (region_detail::crosses_open_chord(item.gamma, item.j0, item.j1)) {
                // the shorter route hit the chord: take the other one
                double s_in = comp.loop.locate(item.j0);
                double s_out = comp.loop.locate(item.j1);
                double fwd = std::fmod(s_out - s_in + comp.loop.length(),
                                       comp.loop.length());
                double bwd = comp.loop.length() - fwd;
                bool forward = !(fwd <= bwd + 1e-9 * comp.loop.length());
                item.gamma = comp.loop.subpath(s_in, s_out, forward);
                item.area_exact = enclosed_area(item.j0, item.j1, item.gamma);
                item.L = std::max(dist(item.j0, item.j1), item.gamma.length());
                item.homotopy =
                    region_detail::item_sweep(item.j0, item.j1, item.gamma);
            }
            items.push_back(std::move(item));
        }
    }

    std::sort(items.begin(), items.end(),
              [](const RegionItem& x, const RegionItem& y) {
                  return x.entry_t < y.entry_t;
              });
    dec.items = std::move(items);
    region_detail::set_kp(dec, reach);
    region_detail::assemble_walk(dec);
    validate_decomposition(dec, F);
    return dec;
}

} // namespace partrans
