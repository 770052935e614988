#pragma once

// The rank-3 connection on TM + so(TM) over an isothermal planar chart
// ds^2 = lambda (dx^2 + dy^2), in the frame xi1 = (dx, 0), xi2 = (dy, 0),
// xi3 = (0, J): construction from the six frame derivatives, the curvature
// and its covariant derivative matrices with an independent finite
// difference check, the Killing-field <-> section correspondence, the
// kernel line bundle, and grid extension of Killing fields by radial
// transport.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "partrans/connection.hpp"
#include "partrans/expr.hpp"
#include "partrans/extend.hpp"
#include "partrans/geometry.hpp"
#include "partrans/transport.hpp"

namespace partrans {

class KostantError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Isothermal metrics

// Conformal factor with its curvature jets. kappa = -(laplacian log lambda)
// / (2 lambda) is kept as an expression, so every partial below is exact to
// roundoff rather than a stencil.
class IsothermalMetric {
public:
    explicit IsothermalMetric(ScalarField lambda, ParamEnv params = {})
        : lambda_(std::move(lambda)),
          lambda_x_(lambda_.derivative(1, 0)),
          lambda_y_(lambda_.derivative(0, 1)),
          kappa_(make_kappa(lambda_)),
          kappa_x_(kappa_.derivative(1, 0)),
          kappa_y_(kappa_.derivative(0, 1)),
          kappa_xx_(kappa_.derivative(2, 0)),
          kappa_xy_(kappa_.derivative(1, 1)),
          kappa_yy_(kappa_.derivative(0, 2)),
          params_(std::move(params)) {}

    const ScalarField& lambda() const { return lambda_; }
    const ScalarField& lambda_x() const { return lambda_x_; }
    const ScalarField& lambda_y() const { return lambda_y_; }
    const ScalarField& kappa() const { return kappa_; }
    const ParamEnv& params() const { return params_; }

    double eval_lambda(const Vec2& p) const {
        double l = lambda_.eval(p.x, p.y, params_);
        if (!(l > 0.0))
            throw KostantError("conformal factor must be positive at (" +
                               std::to_string(p.x) + ", " +
                               std::to_string(p.y) + ")");
        return l;
    }
    double eval_lambda_x(const Vec2& p) const { return guarded(lambda_x_, p); }
    double eval_lambda_y(const Vec2& p) const { return guarded(lambda_y_, p); }
    double eval_kappa(const Vec2& p) const { return guarded(kappa_, p); }
    double eval_kappa_x(const Vec2& p) const { return guarded(kappa_x_, p); }
    double eval_kappa_y(const Vec2& p) const { return guarded(kappa_y_, p); }
    double eval_kappa_xx(const Vec2& p) const { return guarded(kappa_xx_, p); }
    double eval_kappa_xy(const Vec2& p) const { return guarded(kappa_xy_, p); }
    double eval_kappa_yy(const Vec2& p) const { return guarded(kappa_yy_, p); }

    void check_positive(const std::vector<Vec2>& sample) const {
        for (const auto& p : sample) eval_lambda(p);
    }

private:
    static ScalarField make_kappa(const ScalarField& lam) {
        ScalarField u = sf_log(lam);
        return -0.5 * ((u.derivative(2, 0) + u.derivative(0, 2)) / lam);
    }

    double guarded(const ScalarField& f, const Vec2& p) const {
        eval_lambda(p);
        return f.eval(p.x, p.y, params_);
    }

    ScalarField lambda_, lambda_x_, lambda_y_;
    ScalarField kappa_, kappa_x_, kappa_y_, kappa_xx_, kappa_xy_, kappa_yy_;
    ParamEnv params_;
};

inline double gaussian_curvature(const IsothermalMetric& m, const Vec2& p) {
    return m.eval_kappa(p);
}

// ---------------------------------------------------------------------------
// The connection

// Coefficient matrices read off from the frame derivatives: the j-th column
// of A_x is the xi-expansion of the x-derivative of xi_j (and likewise A_y),
//   d_x xi1 = gx xi1 - gy xi2          d_y xi1 = gy xi1 + gx xi2 - kl xi3
//   d_x xi2 = gy xi1 + gx xi2 + kl xi3 d_y xi2 = -gx xi1 + gy xi2
//   d_x xi3 = -xi2                     d_y xi3 = xi1
// with gx = lambda_x/2lambda, gy = lambda_y/2lambda, kl = kappa*lambda.
inline ConnectionChart kostant_connection(const IsothermalMetric& m) {
    ScalarField gx = m.lambda_x() / (2.0 * m.lambda());
    ScalarField gy = m.lambda_y() / (2.0 * m.lambda());
    ScalarField kl = m.kappa() * m.lambda();
    ScalarField zero = ScalarField::constant(0.0);
    ScalarField one = ScalarField::constant(1.0);
    FieldMatrix ax{{gx, gy, zero}, {-gy, gx, -one}, {zero, kl, zero}};
    FieldMatrix ay{{gy, -gx, one}, {gx, gy, zero}, {-kl, zero, zero}};
    return ConnectionChart(3, std::move(ax), std::move(ay), PlaneChart{},
                           m.params());
}

// ---------------------------------------------------------------------------
// Curvature derivative matrices

struct LemmaMatrices {
    Eigen::Matrix3d R;   // curvature operator R(dx, dy)
    Eigen::Matrix3d Dx;  // covariant x-derivative of R, closed form
    Eigen::Matrix3d Dy;  // covariant y-derivative; (3,1) and (3,2) numeric
};

namespace kostant_detail {

// Covariant directional derivative of the curvature operator by a centered
// stencil: the matrix derivative plus the frame commutator minus the
// bivector-slot terms, which for both coordinate directions collapse to
// (lambda_v / lambda) R.
inline Eigen::Matrix3d covariant_dR(const ConnectionChart& conn,
                                    const IsothermalMetric& m, const Vec2& p,
                                    bool x_dir, double h) {
    Vec2 e = x_dir ? Vec2{1.0, 0.0} : Vec2{0.0, 1.0};
    Eigen::Matrix3d fd =
        (conn.curvature(p + h * e) - conn.curvature(p - h * e)) / (2.0 * h);
    Eigen::Matrix3d A = x_dir ? conn.eval_Ax(p) : conn.eval_Ay(p);
    Eigen::Matrix3d R = conn.curvature(p);
    double lv = (x_dir ? m.eval_lambda_x(p) : m.eval_lambda_y(p)) /
                m.eval_lambda(p);
    return fd + A * R - R * A - lv * R;
}

} // namespace kostant_detail

// Closed forms for R(dx,dy) and its covariant derivatives in the frame. The
// two undisplayed entries of Dy are filled by Richardson-extrapolated
// covariant stencils (h and h/2) and carry that accuracy, not roundoff.
inline LemmaMatrices lemma_matrices(const IsothermalMetric& m, const Vec2& p,
                                    double h = 1e-3) {
    double lam = m.eval_lambda(p);
    double lx = m.eval_lambda_x(p), ly = m.eval_lambda_y(p);
    double kx = m.eval_kappa_x(p), ky = m.eval_kappa_y(p);
    double kxx = m.eval_kappa_xx(p), kxy = m.eval_kappa_xy(p);

    LemmaMatrices out;
    out.R.setZero();
    out.Dx.setZero();
    out.Dy.setZero();

    out.R(2, 0) = -kx * lam;
    out.R(2, 1) = -ky * lam;

    out.Dx(1, 0) = kx * lam;
    out.Dx(1, 1) = ky * lam;
    out.Dx(2, 0) = 0.5 * (lx * kx - ly * ky) - kxx * lam;
    out.Dx(2, 1) = -kxy * lam + 0.5 * (ly * kx + lx * ky);
    out.Dx(2, 2) = -ky * lam;

    out.Dy(0, 0) = -kx * lam;
    out.Dy(0, 1) = -ky * lam;
    out.Dy(2, 2) = kx * lam;

    auto conn = kostant_connection(m);
    Eigen::Matrix3d dh = kostant_detail::covariant_dR(conn, m, p, false, h);
    Eigen::Matrix3d dh2 =
        kostant_detail::covariant_dR(conn, m, p, false, 0.5 * h);
    Eigen::Matrix3d rich = (4.0 * dh2 - dh) / 3.0;
    out.Dy(2, 0) = rich(2, 0);
    out.Dy(2, 1) = rich(2, 1);
    return out;
}

// Independent verification of the closed forms: curvature from the
// connection coefficients and covariant stencils of step h against
// lemma_matrices, excluding the two numerically filled Dy entries. The
// result decays at second order in h wherever it is above roundoff.
inline double lemma_check(const IsothermalMetric& m, const Vec2& p,
                          double h = 1e-3) {
    auto lm = lemma_matrices(m, p, h);
    auto conn = kostant_connection(m);
    Eigen::Matrix3d rn = conn.curvature(p);
    Eigen::Matrix3d dxn = kostant_detail::covariant_dR(conn, m, p, true, h);
    Eigen::Matrix3d dyn = kostant_detail::covariant_dR(conn, m, p, false, h);

    double dev = (rn - lm.R).cwiseAbs().maxCoeff();
    dev = std::max(dev, (dxn - lm.Dx).cwiseAbs().maxCoeff());
    Eigen::Matrix3d dy_err = (dyn - lm.Dy).cwiseAbs();
    dy_err(2, 0) = 0.0;
    dy_err(2, 1) = 0.0;
    return std::max(dev, dy_err.maxCoeff());
}

// ---------------------------------------------------------------------------
// Sections and Killing fields

struct KostantSection {
    ScalarField c1, c2, c3;

    Eigen::Vector3d eval(const Vec2& p, const ParamEnv& env = {}) const {
        return {c1.eval(p.x, p.y, env), c2.eval(p.x, p.y, env),
                c3.eval(p.x, p.y, env)};
    }
};

inline std::pair<ScalarField, ScalarField> section_to_TM(
    const KostantSection& s) {
    return {s.c1, s.c2};
}

struct KillingConversion {
    KostantSection section;
    // Symmetric part of the covariant differential of X; identically zero
    // exactly when X is a Killing field.
    ScalarField sym_xx, sym_xy, sym_yy;
    ParamEnv params;

    // Operator norm of the symmetric part at p.
    double skew_defect(const Vec2& p) const {
        double a = sym_xx.eval(p.x, p.y, params);
        double b = sym_xy.eval(p.x, p.y, params);
        double c = sym_yy.eval(p.x, p.y, params);
        return std::abs(0.5 * (a + c)) + std::hypot(0.5 * (a - c), b);
    }
};

// sigma = (X, covariant differential of X): c1, c2 are the components of X
// and c3 the J-coefficient of the rotation part. The conversion represents
// a parallel-section candidate only where the symmetric part vanishes.
inline KillingConversion killing_to_section(const ScalarField& X1,
                                            const ScalarField& X2,
                                            const IsothermalMetric& m) {
    ScalarField ux = m.lambda_x() / m.lambda();
    ScalarField uy = m.lambda_y() / m.lambda();

    ScalarField a11 = X1.derivative(1, 0) + 0.5 * (ux * X1 + uy * X2);
    ScalarField a12 = X1.derivative(0, 1) + 0.5 * (uy * X1 - ux * X2);
    ScalarField a21 = X2.derivative(1, 0) + 0.5 * (ux * X2 - uy * X1);
    ScalarField a22 = X2.derivative(0, 1) + 0.5 * (ux * X1 + uy * X2);

    KillingConversion out{
        KostantSection{X1, X2, 0.5 * (a21 - a12)},
        a11,
        0.5 * (a12 + a21),
        a22,
        m.params()};
    return out;
}

// Largest frame-coefficient norm of the covariant derivative of sigma over
// the sample, in both coordinate directions.
inline double parallel_defect(const KostantSection& sigma,
                              const IsothermalMetric& m,
                              const std::vector<Vec2>& sample) {
    auto conn = kostant_connection(m);
    ScalarField dx1 = sigma.c1.derivative(1, 0);
    ScalarField dx2 = sigma.c2.derivative(1, 0);
    ScalarField dx3 = sigma.c3.derivative(1, 0);
    ScalarField dy1 = sigma.c1.derivative(0, 1);
    ScalarField dy2 = sigma.c2.derivative(0, 1);
    ScalarField dy3 = sigma.c3.derivative(0, 1);

    const ParamEnv& env = m.params();
    double defect = 0.0;
    for (const auto& p : sample) {
        Eigen::Vector3d c = sigma.eval(p, env);
        Eigen::Vector3d gx{dx1.eval(p.x, p.y, env), dx2.eval(p.x, p.y, env),
                           dx3.eval(p.x, p.y, env)};
        Eigen::Vector3d gy{dy1.eval(p.x, p.y, env), dy2.eval(p.x, p.y, env),
                           dy3.eval(p.x, p.y, env)};
        defect = std::max(defect, (gx + conn.eval_Ax(p) * c).norm());
        defect = std::max(defect, (gy + conn.eval_Ay(p) * c).norm());
    }
    return defect;
}

// ---------------------------------------------------------------------------
// Kernel line bundle

inline constexpr double kKernelRankLo = 1e-6;
inline constexpr double kKernelRankHi = 1e-9;
// Below this scale a derivative matrix is indistinguishable from roundoff
// (constant curvature evaluates to noise near 1e-13), so no kernel is read.
inline constexpr double kKernelScaleFloor = 1e-8;

// Unit kernel vector of whichever curvature-derivative matrix has numerical
// rank exactly 2 at p (requires a nonvanishing curvature differential).
// Sign convention: the first coefficient above noise is positive.
inline Eigen::Vector3d kernel_line(const IsothermalMetric& m, const Vec2& p) {
    auto lm = lemma_matrices(m, p);

    auto try_kernel = [](const Eigen::Matrix3d& mat, Eigen::Vector3d& out) {
        Eigen::JacobiSVD<Eigen::Matrix3d> svd(mat, Eigen::ComputeFullV);
        const auto& s = svd.singularValues();
        if (!(s(0) > kKernelScaleFloor)) return false;
        if (s(1) / s(0) <= kKernelRankLo) return false;
        if (s(2) / s(0) >= kKernelRankHi) return false;
        out = svd.matrixV().col(2);
        return true;
    };

    Eigen::Vector3d v;
    if (!try_kernel(lm.Dx, v) && !try_kernel(lm.Dy, v))
        throw KostantError(
            "kernel line undefined: neither curvature derivative has "
            "numerical rank 2 at (" +
            std::to_string(p.x) + ", " + std::to_string(p.y) + ")");
    for (int i = 0; i < 3; ++i) {
        if (std::abs(v(i)) <= 1e-9) continue;
        if (v(i) < 0.0) v = -v;
        break;
    }
    return v;
}

// ---------------------------------------------------------------------------
// Killing field extension

struct GridSpec {
    double x0, x1, y0, y1;
    int nx, ny;
};

struct KillingExtension {
    GridSpec grid{};
    std::vector<Vec2> points;              // x-major, index i*ny + j
    std::vector<Eigen::Vector3d> sections; // frame coefficients per point
    double agreement = 0.0; // defect vs oracle over in-domain grid points
    double parallel = 0.0;  // centered-difference parallel residual
    bool consistent = false;
};

// Radial extension of the oracle's section from p0 over a rectangular grid,
// with the TM projection available per point. A large agreement defect on
// the oracle's own domain means no single-valued extension exists and is
// flagged rather than raised.
inline KillingExtension extend_killing(const IsothermalMetric& m,
                                       const SectionOracle& oracle,
                                       const Vec2& p0, const GridSpec& grid,
                                       double tol = kTransportDefaultTol) {
    if (grid.nx < 2 || grid.ny < 2 || !(grid.x1 > grid.x0) ||
        !(grid.y1 > grid.y0))
        throw KostantError("extension grid must span a rectangle");

    auto conn = kostant_connection(m);
    Eigen::VectorXd xi0 = oracle.query(p0);
    if (xi0.size() != 3)
        throw KostantError("oracle must produce frame coefficients");

    KillingExtension out;
    out.grid = grid;
    out.points =
        make_grid(grid.x0, grid.x1, grid.y0, grid.y1, grid.nx, grid.ny);
    auto vals = radial_extension(conn, p0, xi0, out.points, tol);
    out.sections.reserve(vals.size());
    for (const auto& v : vals) out.sections.push_back(v);

    double scale = 1.0;
    for (std::size_t i = 0; i < out.points.size(); ++i) {
        if (!oracle.in_domain(out.points[i])) continue;
        Eigen::VectorXd want = oracle.query(out.points[i]);
        scale = std::max(scale, want.norm());
        out.agreement =
            std::max(out.agreement, (vals[i] - want).norm());
    }

    double hx = (grid.x1 - grid.x0) / (grid.nx - 1);
    double hy = (grid.y1 - grid.y0) / (grid.ny - 1);
    auto at = [&](int i, int j) { return i * grid.ny + j; };
    for (int i = 1; i + 1 < grid.nx; ++i)
        for (int j = 1; j + 1 < grid.ny; ++j) {
            const Vec2& p = out.points[at(i, j)];
            Eigen::Vector3d dxc =
                (out.sections[at(i + 1, j)] - out.sections[at(i - 1, j)]) /
                (2.0 * hx);
            Eigen::Vector3d dyc =
                (out.sections[at(i, j + 1)] - out.sections[at(i, j - 1)]) /
                (2.0 * hy);
            Eigen::Vector3d c = out.sections[at(i, j)];
            out.parallel = std::max(
                out.parallel, (dxc + conn.eval_Ax(p) * c).norm());
            out.parallel = std::max(
                out.parallel, (dyc + conn.eval_Ay(p) * c).norm());
        }

    out.consistent =
        out.agreement <= std::max(100.0 * tol, 1e-6) * (1.0 + scale);
    return out;
}

} // namespace partrans
