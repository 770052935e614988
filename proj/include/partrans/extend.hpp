#pragma once

// Extension of parallel sections by radial transport: straight-segment
// continuation from a seed point, agreement checks against a partially
// defined section, recovery of values at isolated removed points, holonomy
// obstructions for closed loops, and the telescoping gap between straight
// transport and the detour walk of a region decomposition.

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "partrans/connection.hpp"
#include "partrans/geometry.hpp"
#include "partrans/path.hpp"
#include "partrans/regions.hpp"
#include "partrans/transport.hpp"

namespace partrans {

class ExtendError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Section oracles

// A partially defined section: values on an open set U, with a declared
// clearance `margin` between U's intended sample region and the removed set.
// `value` is consulted only where `in_domain` holds; sampling helpers keep
// at least `margin` away from the removed points they know about.
struct SectionOracle {
    std::function<bool(const Vec2&)> in_domain;
    std::function<Eigen::VectorXd(const Vec2&)> value;
    double margin = 0.0;

    // Guarded fetch: domain membership first, then a finiteness check.
    Eigen::VectorXd query(const Vec2& p) const {
        if (!in_domain || !value)
            throw ExtendError("section oracle is missing a callback");
        if (!in_domain(p))
            throw ExtendError("sample point (" + std::to_string(p.x) + ", " +
                              std::to_string(p.y) +
                              ") lies outside the oracle domain");
        Eigen::VectorXd v = value(p);
        if (!v.allFinite())
            throw ExtendError("oracle produced a non-finite value");
        return v;
    }
};

// ---------------------------------------------------------------------------
// Radial extension

// Transport the seed vector from p0 to each target along the straight
// segment between them. A target equal to p0 returns the seed unchanged.
inline std::vector<Eigen::VectorXd> radial_extension(
    const ConnectionChart& conn, const Vec2& p0, const Eigen::VectorXd& xi0,
    const std::vector<Vec2>& targets, double tol = kTransportDefaultTol) {
    if (xi0.size() != conn.rank())
        throw ExtendError("seed dimension does not match the bundle rank");
    if (!xi0.allFinite())
        throw ExtendError("seed vector must be finite");
    std::vector<Eigen::VectorXd> out;
    out.reserve(targets.size());
    for (const auto& q : targets) {
        if (dist(p0, q) <= kPathGapTol) {
            out.push_back(xi0);
            continue;
        }
        out.push_back(
            transport(conn, PathSpec::segment(p0, q), xi0, tol).end_value);
    }
    return out;
}

// Largest g-distance, over the sample, between the radial extension of the
// oracle's seed value at p0 and the oracle's own values. Every sample point
// must lie in the oracle domain.
inline double agreement_defect(const ConnectionChart& conn,
                               const FiberMetric& g,
                               const SectionOracle& oracle, const Vec2& p0,
                               const std::vector<Vec2>& sample,
                               double tol = kTransportDefaultTol) {
    Eigen::VectorXd xi0 = oracle.query(p0);
    double defect = 0.0;
    for (const auto& q : sample) {
        Eigen::VectorXd want = oracle.query(q);
        Eigen::VectorXd got =
            dist(p0, q) <= kPathGapTol
                ? xi0
                : transport(conn, PathSpec::segment(p0, q), xi0, tol)
                      .end_value;
        defect = std::max(defect, g.norm(q, got - want));
    }
    return defect;
}

// ---------------------------------------------------------------------------
// Codimension-two extension

namespace extend_detail {

inline constexpr int kRayCount = 32;
inline constexpr double kRayAngleMargin = 1e-6;

// Angular distance on the circle.
inline double angle_gap(double a, double b) {
    double d = wrap_angle(a - b);
    return std::min(d, 2.0 * M_PI - d);
}

} // namespace extend_detail

// Value at a removed point p of a finite removed set F, recovered by radial
// transport from the probe q = p + (eps, 0), eps = half the distance from p
// to the rest of F, capped at 0.1. Before extending, the probe value is
// checked for radial consistency against the oracle along rays from q that
// miss F; an inconsistent oracle (genuinely different limits along different
// rays) is reported as an error.
inline Eigen::VectorXd codim2_extension(const ConnectionChart& conn,
                                        const SectionOracle& oracle,
                                        const std::vector<Vec2>& F,
                                        const Vec2& p,
                                        double tol = kTransportDefaultTol) {
    if (F.empty())
        throw ExtendError("removed set must be nonempty");
    bool member = false;
    double sep = std::numeric_limits<double>::infinity();
    for (const auto& f : F) {
        double d = dist(f, p);
        if (d <= kPathGapTol)
            member = true;
        else
            sep = std::min(sep, d);
    }
    if (!member)
        throw ExtendError("extension point must belong to the removed set");

    double eps = std::min(0.5 * sep, 0.1);
    Vec2 q = p + Vec2{eps, 0.0};
    if (!oracle.in_domain || !oracle.in_domain(q))
        throw ExtendError("probe point fell outside the oracle domain");
    Eigen::VectorXd xi_q = oracle.query(q);

    // Radial consistency on the dense directions: rays from q at radius
    // 1.5*eps, skipping any ray within the angular margin of a direction
    // that hits F, plus targets outside the domain or inside the oracle's
    // declared clearance.
    double radius = 1.5 * eps;
    double worst = 0.0;
    int used = 0;
    for (int k = 0; k < extend_detail::kRayCount; ++k) {
        double th = 2.0 * M_PI * k / extend_detail::kRayCount;
        bool hits = false;
        for (const auto& f : F) {
            Vec2 d = f - q;
            if (d.norm() <= kPathGapTol) continue;
            if (extend_detail::angle_gap(th, std::atan2(d.y, d.x)) <
                extend_detail::kRayAngleMargin) {
                hits = true;
                break;
            }
        }
        if (hits) continue;
        Vec2 t = q + radius * Vec2{std::cos(th), std::sin(th)};
        if (!oracle.in_domain(t)) continue;
        bool clear = true;
        for (const auto& f : F)
            if (dist(f, t) < oracle.margin) clear = false;
        if (!clear) continue;
        Eigen::VectorXd got =
            transport(conn, PathSpec::segment(q, t), xi_q, tol).end_value;
        worst = std::max(worst, (got - oracle.query(t)).norm());
        ++used;
    }
    if (used == 0)
        throw ExtendError("no verification rays available from the probe");
    double threshold = std::max(100.0 * tol, 1e-6) * (1.0 + xi_q.norm());
    if (worst > threshold) {
        std::ostringstream os;
        os << "radial verification failed at the probe: defect " << worst
           << " exceeds " << threshold << " over " << used << " rays";
        throw ExtendError(os.str());
    }

    return transport(conn, PathSpec::segment(q, p), xi_q, tol).end_value;
}

// ---------------------------------------------------------------------------
// Holonomy obstruction

struct ObstructionReport {
    Eigen::MatrixXd holonomy;
    double deviation = 0.0;
    bool obstructed = false;
};

// Holonomy of a closed loop with its distance from the identity; a deviation
// above 100*tol obstructs any single-valued parallel extension across the
// region the loop surrounds.
inline ObstructionReport holonomy_obstruction(
    const ConnectionChart& conn, const PathSpec& loop,
    double tol = kTransportDefaultTol) {
    ObstructionReport rep;
    rep.holonomy = loop_holonomy(conn, loop, tol).matrix;
    rep.deviation =
        (rep.holonomy -
         Eigen::MatrixXd::Identity(conn.rank(), conn.rank()))
            .norm();
    rep.obstructed = rep.deviation > 100.0 * tol;
    return rep;
}

// ---------------------------------------------------------------------------
// Telescoping gap

// Walk a region decomposition: straight transport along the base segment on
// one side, the detour walk (runs plus item curves) on the other, returning
// the final g-distance at p. When an oracle is supplied it must agree with
// the walk transport at every item exit (i.e. be parallel along the walk);
// the final comparison is then taken against the oracle's value at p. The
// gap is checked against its certified budget
//   |xi0|_g * R * exp(G/2 * |p - p0|) * rplus_budget(dec, G)
// (R, G sampled over the containing disk K_p) plus an integration-noise
// allowance, and exceeding it is an error.
inline double telescoping_gap(const ConnectionChart& conn,
                              const FiberMetric& g,
                              const RegionDecomposition& dec,
                              const SectionOracle* oracle,
                              const Eigen::VectorXd& xi0,
                              double tol = kTransportDefaultTol) {
    if (xi0.size() != conn.rank())
        throw ExtendError("seed dimension does not match the bundle rank");
    double span = dist(dec.p0, dec.p);
    if (span <= kPathGapTol)
        throw ExtendError("decomposition endpoints coincide");

    double mismatch_tol = std::max(100.0 * tol, 1e-6);

    Eigen::VectorXd straight =
        transport(conn, PathSpec::segment(dec.p0, dec.p), xi0, tol).end_value;

    Eigen::VectorXd sigma = xi0;
    Vec2 cursor = dec.p0;
    auto run_to = [&](const Vec2& stop) {
        if (dist(cursor, stop) > kPathGapTol)
            sigma = transport(conn, PathSpec::segment(cursor, stop), sigma,
                              tol)
                        .end_value;
        cursor = stop;
    };
    for (const auto& item : dec.items) {
        run_to(item.j0);
        sigma = transport(conn, item.gamma, sigma, tol).end_value;
        cursor = item.j1;
        if (oracle) {
            Eigen::VectorXd want = oracle->query(item.j1);
            if ((sigma - want).norm() >
                mismatch_tol * (1.0 + want.norm()))
                throw ExtendError(
                    "oracle disagrees with its parallel continuation along "
                    "the walk");
        }
    }
    run_to(dec.p);

    Eigen::VectorXd target = sigma;
    if (oracle) {
        Eigen::VectorXd want = oracle->query(dec.p);
        if ((sigma - want).norm() > mismatch_tol * (1.0 + want.norm()))
            throw ExtendError(
                "oracle disagrees with its parallel continuation along the "
                "walk");
        target = want;
    }

    double gap = g.norm(dec.p, straight - target);

    auto grid = make_grid(dec.K_center.x - dec.K_radius,
                          dec.K_center.x + dec.K_radius,
                          dec.K_center.y - dec.K_radius,
                          dec.K_center.y + dec.K_radius, 64, 64);
    double R = bound_R(conn, g, grid);
    double G = bound_G(conn, g, grid);
    double budget = g.norm(dec.p0, xi0) * R * std::exp(0.5 * G * span) *
                        rplus_budget(dec, G) * (1.0 + 1e-6) +
                    20.0 * tol * (static_cast<double>(dec.items.size()) + 2.0);
    if (gap > budget) {
        std::ostringstream os;
        os << "telescoping gap " << gap << " exceeds its certified budget "
           << budget;
        throw ExtendError(os.str());
    }
    return gap;
}

// ---------------------------------------------------------------------------
// Plotting output

// CSV table of extension samples: x, y, fiber components, and (optionally)
// a per-point defect column.
inline std::string extension_csv(const std::vector<Vec2>& points,
                                 const std::vector<Eigen::VectorXd>& values,
                                 const std::vector<double>& defects = {}) {
    if (values.size() != points.size())
        throw ExtendError("value column count does not match the points");
    if (!defects.empty() && defects.size() != points.size())
        throw ExtendError("defect column count does not match the points");
    Eigen::Index r = points.empty() ? 0 : values.front().size();
    std::ostringstream os;
    os << std::setprecision(12);
    os << "x,y";
    for (Eigen::Index c = 0; c < r; ++c) os << ",v" << (c + 1);
    if (!defects.empty()) os << ",defect";
    os << "\n";
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (values[i].size() != r)
            throw ExtendError("ragged value column in the extension table");
        os << points[i].x << "," << points[i].y;
        for (Eigen::Index c = 0; c < r; ++c) os << "," << values[i][c];
        if (!defects.empty()) os << "," << defects[i];
        os << "\n";
    }
    return os.str();
}

} // namespace partrans
