#pragma once

// Parallel transport along piecewise-C^1 paths: X' = -A(gamma'(t)) X,
// integrated piece by piece with an adaptive embedded Dormand-Prince 5(4)
// pair. The local error budget is spread per unit parameter so that the
// accumulated estimate stays at or below the requested tolerance.

#include <Eigen/Dense>
#include <cmath>
#include <functional>

#include "partrans/connection.hpp"
#include "partrans/path.hpp"

namespace partrans {

class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TransportResult {
    Eigen::VectorXd end_value;
    long steps = 0;
    double est_error = 0.0;
};

struct HolonomyResult {
    Eigen::MatrixXd matrix;
    long steps = 0;
    double est_error = 0.0;
};

inline constexpr double kTransportDefaultTol = 1e-9;
inline constexpr long kTransportMaxSteps = 1000000;

namespace ode {

// One integration span: dX/dt = M(t) X on [0,1], error budget `tol`.
// Returns the end state; accumulates steps and the summed local error
// estimates into the counters.
inline Eigen::MatrixXd integrate_linear(
    const std::function<Eigen::MatrixXd(double)>& M, Eigen::MatrixXd X,
    double tol, long& steps, double& est_error) {
    static const double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5,
                        c5 = 8.0 / 9;
    static const double a21 = 1.0 / 5;
    static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                        a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                        a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                        a65 = -5103.0 / 18656;
    static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static const double e1 = 35.0 / 384 - 5179.0 / 57600,
                        e3 = 500.0 / 1113 - 7571.0 / 16695,
                        e4 = 125.0 / 192 - 393.0 / 640,
                        e5 = -2187.0 / 6784 + 92097.0 / 339200,
                        e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

    double t = 0.0;
    double h = 0.05;
    const double hmin = 1e-14;
    // Per-unit-parameter error budget: accepted local errors sum to <= tol.
    const double budget = tol;

    Eigen::MatrixXd k1 = M(t) * X;
    while (t < 1.0) {
        if (h > 1.0 - t) h = 1.0 - t;
        Eigen::MatrixXd k2 = M(t + c2 * h) * (X + h * (a21 * k1));
        Eigen::MatrixXd k3 = M(t + c3 * h) * (X + h * (a31 * k1 + a32 * k2));
        Eigen::MatrixXd k4 =
            M(t + c4 * h) * (X + h * (a41 * k1 + a42 * k2 + a43 * k3));
        Eigen::MatrixXd k5 = M(t + c5 * h) *
                             (X + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        Eigen::MatrixXd k6 =
            M(t + h) *
            (X + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        Eigen::MatrixXd X5 =
            X + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        Eigen::MatrixXd k7 = M(t + h) * X5;
        Eigen::MatrixXd errm =
            h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        double err = errm.norm();
        double tol_here = budget * h;

        if (++steps > kTransportMaxSteps)
            throw TransportError("transport exceeded step limit");

        if (err <= tol_here || h <= hmin) {
            t += h;
            X = X5;
            k1 = k7; // FSAL
            est_error += err;
        }
        double scale = err > 0 ? 0.9 * std::pow(tol_here / err, 0.2) : 5.0;
        scale = std::min(5.0, std::max(0.2, scale));
        h *= scale;
        if (h < hmin) {
            if (t >= 1.0) break;
            h = hmin;
        }
    }
    return X;
}

} // namespace ode

namespace transport_detail {

// Transport over one planar path piece.
inline Eigen::MatrixXd planar_piece(const ConnectionChart& conn,
                                    const PathPiece& piece, Eigen::MatrixXd X,
                                    double tol, long& steps, double& est_error) {
    auto M = [&](double u) {
        auto e = path_detail::piece_eval(piece, u);
        conn.require_inside(e.pos);
        return (-conn.eval_A(e.pos, e.vel)).eval();
    };
    return ode::integrate_linear(M, std::move(X), tol, steps, est_error);
}

// Transport over a theta interval on a circle chart, splitting at gluing
// points (theta in 2*pi*Z) and applying the monodromy matrix per crossing.
// Crossing rule (consistent under concatenation, one crossing per full
// loop): moving up, cuts in (th0, th1]; moving down, cuts in [th1, th0),
// applied with the inverse gluing.
inline Eigen::MatrixXd circle_piece(const ConnectionChart& conn, double th0,
                                    double th1, Eigen::MatrixXd X, double tol,
                                    long& steps, double& est_error) {
    const double tau = 2.0 * M_PI;
    const double snap = 1e-12;
    Eigen::MatrixXd Mono = conn.monodromy();
    bool up = th1 > th0;

    std::vector<double> cuts;
    if (up) {
        double c = (std::floor(th0 / tau) + 1.0) * tau;
        if (c - tau > th0 + snap) c -= tau; // th0 just below a lattice point
        for (; c <= th1 + snap; c += tau)
            if (c > th0 + snap) cuts.push_back(c);
    } else {
        double c = (std::ceil(th0 / tau) - 1.0) * tau;
        if (c + tau < th0 - snap) c += tau; // th0 just above a lattice point
        for (; c >= th1 - snap; c -= tau)
            if (c < th0 - snap) cuts.push_back(c);
    }

    double total = std::fabs(th1 - th0);
    double a = th0;
    auto run_span = [&](double from, double to) {
        double span = std::fabs(to - from);
        if (span <= 1e-15) return;
        // Evaluate A inside the base window [0, 2*pi] of the span's cell.
        double mid = 0.5 * (from + to);
        double base = std::floor(mid / tau) * tau;
        auto M = [&, from, to, base](double u) {
            double th = from + (to - from) * u;
            Eigen::MatrixXd At = conn.eval_Atheta(th - base);
            return ((-(to - from)) * At).eval();
        };
        X = ode::integrate_linear(M, std::move(X), tol * span / total, steps,
                                  est_error);
    };
    for (double c : cuts) {
        run_span(a, c);
        if (up)
            X = (Mono * X).eval();
        else
            X = Mono.colPivHouseholderQr().solve(X).eval();
        a = c;
    }
    run_span(a, th1);
    return X;
}

} // namespace transport_detail

// Transport the fiber state X0 (vector, or matrix of columns) along a path.
inline Eigen::MatrixXd transport_state(const ConnectionChart& conn,
                                       const PathSpec& path,
                                       Eigen::MatrixXd X0, double tol,
                                       long& steps, double& est_error) {
    if (path.empty()) throw TransportError("empty path");
    if (X0.rows() != conn.rank())
        throw TransportError("fiber state dimension mismatch");
    if (!(tol > 0)) throw TransportError("tolerance must be positive");

    double total = path.length();
    for (std::size_t i = 0; i < path.pieces().size(); ++i) {
        const PathPiece& piece = path.pieces()[i];
        if (path.piece_lengths()[i] <= 0) continue; // point piece, identity
        double share = std::max(path.piece_lengths()[i] / total, 1e-6);
        bool theta_piece = std::holds_alternative<path_piece::Theta>(piece);
        if (conn.is_circle() != theta_piece)
            throw TransportError(theta_piece
                                     ? "theta path piece on a planar chart"
                                     : "planar path piece on a circle chart");
        if (theta_piece) {
            const auto& t = std::get<path_piece::Theta>(piece);
            X0 = transport_detail::circle_piece(conn, t.th0, t.th1, std::move(X0),
                                                tol * share, steps, est_error);
        } else {
            X0 = transport_detail::planar_piece(conn, piece, std::move(X0),
                                                tol * share, steps, est_error);
        }
    }
    return X0;
}

inline TransportResult transport(const ConnectionChart& conn, const PathSpec& path,
                                 const Eigen::VectorXd& xi0,
                                 double tol = kTransportDefaultTol) {
    TransportResult r;
    Eigen::MatrixXd X = xi0;
    X = transport_state(conn, path, std::move(X), tol, r.steps, r.est_error);
    r.end_value = X.col(0);
    return r;
}

// Holonomy of a closed path: transport of the full frame.
inline HolonomyResult loop_holonomy(const ConnectionChart& conn,
                                    const PathSpec& path,
                                    double tol = kTransportDefaultTol) {
    if (!conn.is_circle() && !path.is_closed())
        throw TransportError("holonomy of a non-closed path");
    HolonomyResult r;
    Eigen::MatrixXd X = Eigen::MatrixXd::Identity(conn.rank(), conn.rank());
    r.matrix = transport_state(conn, path, std::move(X), tol, r.steps, r.est_error);
    return r;
}

} // namespace partrans
