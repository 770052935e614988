#pragma once

// Integral bounds for the parallel-transport gap between homotopic curves:
// a Gronwall-type right-hand side evaluated by adaptive quadrature, and the
// gap record lhs <= |xi0|_g * R * e^{G L} * area computed on an explicit
// homotopy grid.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>

#include "partrans/connection.hpp"
#include "partrans/homotopy.hpp"
#include "partrans/transport.hpp"

namespace partrans {

namespace quad {

// Adaptive Simpson with absolute tolerance; throws when the recursion
// cannot reach the requested accuracy.
inline double adaptive_simpson(const std::function<double(double)>& f,
                               double a, double b, double tol,
                               int max_depth = 48) {
    struct Rec {
        const std::function<double(double)>& f;
        int cap;
        double run(double a, double fa, double b, double fb, double m,
                   double fm, double whole, double tol, int depth) const {
            double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
            double flm = f(lm), frm = f(rm);
            double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            double err = left + right - whole;
            if (std::fabs(err) <= 15.0 * tol) return left + right + err / 15.0;
            if (depth >= cap)
                throw EstimateError("quadrature did not converge");
            return run(a, fa, m, fm, lm, flm, left, 0.5 * tol, depth + 1) +
                   run(m, fm, b, fb, rm, frm, right, 0.5 * tol, depth + 1);
        }
    };
    if (b <= a) return 0.0;
    double m = 0.5 * (a + b), fa = f(a), fb = f(b), fm = f(m);
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return Rec{f, max_depth}.run(a, fa, b, fb, m, fm, whole, tol, 0);
}

} // namespace quad

inline constexpr double kQuadTol = 1e-10;

// u0 e^{int_a^t f} + int_a^t g(s) e^{int_s^t f} ds: the sharp right-hand
// side of the integral bound for u' <= f u + g, u(a) = u0.
inline double gronwall_bound(double u0, const std::function<double(double)>& f,
                             const std::function<double(double)>& g, double a,
                             double t, double tol = kQuadTol) {
    if (t < a) throw EstimateError("gronwall_bound needs t >= a");
    if (t == a) return u0;
    double span = t - a;
    auto F = [&](double s) {
        return quad::adaptive_simpson(f, a, s, tol * 0.01 / span);
    };
    double Ft = F(t);
    auto weighted = [&](double s) { return g(s) * std::exp(Ft - F(s)); };
    double tail = quad::adaptive_simpson(weighted, a, t, tol);
    return u0 * std::exp(Ft) + tail;
}

struct GapReport {
    double lhs = 0.0;  // g-norm at q of the transport difference
    double rhs = 0.0;  // |xi0|_g * R * e^{G L} * area
    double R = 0.0;    // curvature bound over the image sample
    double G = 0.0;    // metric-defect bound over the image sample
    double L = 0.0;    // max row length
    double area = 0.0; // homotopy area
};

namespace estimate_detail {

// Transport xi0 along row j, returning the fiber value at every t-node.
// Cells are transported one by one on the raw Hermite pieces; degenerate
// cells act as the identity.
inline std::vector<Eigen::VectorXd> transport_row_nodes(
    const ConnectionChart& conn, const HomotopyGrid& h, int j,
    const Eigen::VectorXd& xi0, double tol) {
    std::vector<Eigen::VectorXd> out;
    out.reserve(h.nt());
    out.push_back(xi0);
    Eigen::MatrixXd X = xi0;
    long steps = 0;
    double est = 0.0;
    double cell = 1.0 / (h.nt() - 1);
    for (int i = 0; i + 1 < h.nt(); ++i) {
        path_piece::Sampled piece{
            {h.node(i, j), h.node(i + 1, j)},
            {h.dt_at(i, j) * cell, h.dt_at(i + 1, j) * cell}};
        if (path_detail::piece_length(piece) > 1e-15)
            X = transport_detail::planar_piece(conn, piece, std::move(X),
                                               tol * cell, steps, est);
        out.push_back(X.col(0));
    }
    return out;
}

} // namespace estimate_detail

// Gap between transporting xi0 along the two boundary curves of the
// homotopy, against the certified right-hand side.
inline GapReport transport_gap(const ConnectionChart& conn, const FiberMetric& g,
                               const HomotopyGrid& h, const Eigen::VectorXd& xi0,
                               double tol = kTransportDefaultTol) {
    if (!h.endpoints_fixed())
        throw EstimateError("transport gap needs a homotopy rel endpoints");
    if (conn.is_circle())
        throw EstimateError("homotopy estimates need a planar chart");

    GapReport rep;
    auto sample = h.sample_nodes();
    rep.R = bound_R(conn, g, sample);
    rep.G = bound_G(conn, g, sample);
    rep.L = max_curve_length(h);
    rep.area = homotopy_area(h);

    Eigen::VectorXd end0, end1;
    if (h.curve0() && h.curve1()) {
        end0 = transport(conn, *h.curve0(), xi0, tol).end_value;
        end1 = transport(conn, *h.curve1(), xi0, tol).end_value;
    } else {
        end0 = estimate_detail::transport_row_nodes(conn, h, 0, xi0, tol).back();
        end1 = estimate_detail::transport_row_nodes(conn, h, h.ns() - 1, xi0, tol)
                   .back();
    }
    rep.lhs = g.norm(h.end(), end0 - end1);
    rep.rhs = g.norm(h.start(), xi0) * rep.R * std::exp(rep.G * rep.L) * rep.area;
    return rep;
}

// Worst ratio |X(t,s)|_g / (|xi0|_g e^{G L / 2}) over the grid; the norm
// growth bound makes this at most 1 up to integration error. A zero xi0
// reports 0.
inline double norm_growth_check(const ConnectionChart& conn, const FiberMetric& g,
                                const HomotopyGrid& h, const Eigen::VectorXd& xi0,
                                double tol = kTransportDefaultTol) {
    if (conn.is_circle())
        throw EstimateError("homotopy estimates need a planar chart");
    double base = g.norm(h.start(), xi0);
    if (base == 0.0) return 0.0;

    auto sample = h.sample_nodes();
    double G = bound_G(conn, g, sample);
    double L = max_curve_length(h);
    double denom = base * std::exp(0.5 * G * L);

    double worst = 0.0;
    for (int j = 0; j < h.ns(); ++j) {
        auto nodes = estimate_detail::transport_row_nodes(conn, h, j, xi0, tol);
        for (int i = 0; i < h.nt(); ++i)
            worst = std::max(worst, g.norm(h.node(i, j), nodes[i]) / denom);
    }
    return worst;
}

// One CSV row per scenario; header matches report files emitted by the CLI.
inline std::string gap_csv_header() { return "id,lhs,rhs,R,G,L,area,margin"; }

inline std::string gap_csv_row(const std::string& id, const GapReport& r) {
    std::ostringstream os;
    os.precision(12);
    os << id << ',' << r.lhs << ',' << r.rhs << ',' << r.R << ',' << r.G << ','
       << r.L << ',' << r.area << ',' << (r.rhs - r.lhs);
    return os.str();
}

} // namespace partrans
