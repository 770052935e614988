#pragma once

// Linear connections nabla = d + A on a trivialized rank-r bundle over a
// planar chart (all of R^2 or an open rectangle) or over a circle chart.
// Conventions, used consistently everywhere:
//   parallel transport ODE   X'(t) = -A(gamma'(t)) X(t)
//   curvature                R(dx,dy) = dAy/dx - dAx/dy + [Ax, Ay]

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "partrans/expr.hpp"
#include "partrans/geometry.hpp"

namespace partrans {

class ConnectionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using FieldMatrix = std::vector<std::vector<ScalarField>>;

inline FieldMatrix zero_field_matrix(int r) {
    return FieldMatrix(r, std::vector<ScalarField>(r, ScalarField::constant(0.0)));
}

inline void check_square(const FieldMatrix& m, int r, const std::string& name) {
    if (static_cast<int>(m.size()) != r)
        throw ConnectionError(name + " must be " + std::to_string(r) + "x" +
                              std::to_string(r));
    for (const auto& row : m)
        if (static_cast<int>(row.size()) != r)
            throw ConnectionError(name + " must be " + std::to_string(r) + "x" +
                                  std::to_string(r));
}

struct RectChart {
    double x0, x1, y0, y1;

    bool contains(const Vec2& p, double margin = 0.0) const {
        return p.x >= x0 + margin && p.x <= x1 - margin && p.y >= y0 + margin &&
               p.y <= y1 - margin;
    }
};

struct PlaneChart {};

// Circle chart: base coordinate theta, connection form A_theta d theta, and a
// constant gluing matrix applied when transport crosses theta in 2*pi*Z
// (identity for an honestly trivialized bundle, -I for the sign-monodromy
// flag of a Moebius-type bundle).
struct CircleChart {
    Eigen::MatrixXd monodromy; // r x r; empty means identity
};

using ChartSpec = std::variant<PlaneChart, RectChart, CircleChart>;

class ConnectionChart {
public:
    // Planar chart constructor: A = Ax dx + Ay dy.
    ConnectionChart(int rank, FieldMatrix Ax, FieldMatrix Ay,
                    ChartSpec chart = PlaneChart{}, ParamEnv params = {})
        : rank_(rank),
          Ax_(std::move(Ax)),
          Ay_(std::move(Ay)),
          chart_(std::move(chart)),
          params_(std::move(params)) {
        if (rank_ < 1) throw ConnectionError("rank must be >= 1");
        if (std::holds_alternative<CircleChart>(chart_))
            throw ConnectionError("circle charts take a single A_theta matrix");
        check_square(Ax_, rank_, "Ax");
        check_square(Ay_, rank_, "Ay");
    }

    // Circle chart constructor: A = A_theta d theta, fields of theta (passed
    // through the x slot of the expression language).
    static ConnectionChart circle(int rank, FieldMatrix Atheta,
                                  std::optional<Eigen::MatrixXd> monodromy = {},
                                  ParamEnv params = {}) {
        ConnectionChart c(rank);
        check_square(Atheta, rank, "Atheta");
        c.Ax_ = std::move(Atheta);
        c.Ay_ = zero_field_matrix(rank);
        CircleChart glue;
        if (monodromy) {
            if (monodromy->rows() != rank || monodromy->cols() != rank)
                throw ConnectionError("monodromy must be rank x rank");
            glue.monodromy = *monodromy;
        }
        c.chart_ = glue;
        c.params_ = std::move(params);
        return c;
    }

    int rank() const { return rank_; }
    const ChartSpec& chart() const { return chart_; }
    const ParamEnv& params() const { return params_; }

    bool is_circle() const { return std::holds_alternative<CircleChart>(chart_); }

    Eigen::MatrixXd monodromy() const {
        if (!is_circle()) throw ConnectionError("monodromy on a planar chart");
        const auto& cc = std::get<CircleChart>(chart_);
        if (cc.monodromy.size() == 0)
            return Eigen::MatrixXd::Identity(rank_, rank_);
        return cc.monodromy;
    }

    bool contains(const Vec2& p, double margin = 0.0) const {
        if (std::holds_alternative<RectChart>(chart_))
            return std::get<RectChart>(chart_).contains(p, margin);
        return true;
    }

    void require_inside(const Vec2& p) const {
        if (!contains(p))
            throw ConnectionError("path leaves the chart at (" +
                                  std::to_string(p.x) + ", " +
                                  std::to_string(p.y) + ")");
    }

    Eigen::MatrixXd eval_Ax(const Vec2& p) const { return eval_matrix(Ax_, p); }
    Eigen::MatrixXd eval_Ay(const Vec2& p) const { return eval_matrix(Ay_, p); }

    // A evaluated on tangent vector v at p: Ax(p) vx + Ay(p) vy.
    Eigen::MatrixXd eval_A(const Vec2& p, const Vec2& v) const {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rank_, rank_);
        if (v.x != 0.0) m += v.x * eval_Ax(p);
        if (v.y != 0.0) m += v.y * eval_Ay(p);
        return m;
    }

    // A_theta for circle charts, evaluated at theta (reduced by the caller).
    Eigen::MatrixXd eval_Atheta(double theta) const {
        if (!is_circle()) throw ConnectionError("A_theta on a planar chart");
        return eval_matrix(Ax_, {theta, 0.0});
    }

    // Curvature endomorphism R(dx, dy) at p.
    Eigen::MatrixXd curvature(const Vec2& p) const {
        if (is_circle())
            return Eigen::MatrixXd::Zero(rank_, rank_); // 1-dimensional base
        Eigen::MatrixXd ax(rank_, rank_), ay(rank_, rank_);
        Eigen::MatrixXd daydx(rank_, rank_), daxdy(rank_, rank_);
        for (int i = 0; i < rank_; ++i)
            for (int j = 0; j < rank_; ++j) {
                Jet jx = Ax_[i][j].eval_jet(p.x, p.y, 1, params_);
                Jet jy = Ay_[i][j].eval_jet(p.x, p.y, 1, params_);
                ax(i, j) = jx.value();
                ay(i, j) = jy.value();
                daxdy(i, j) = jx.partial(0, 1);
                daydx(i, j) = jy.partial(1, 0);
            }
        return daydx - daxdy + ax * ay - ay * ax;
    }

    const FieldMatrix& Ax_fields() const { return Ax_; }
    const FieldMatrix& Ay_fields() const { return Ay_; }

private:
    explicit ConnectionChart(int rank) : rank_(rank) {
        if (rank_ < 1) throw ConnectionError("rank must be >= 1");
    }

    Eigen::MatrixXd eval_matrix(const FieldMatrix& m, const Vec2& p) const {
        Eigen::MatrixXd out(rank_, rank_);
        for (int i = 0; i < rank_; ++i)
            for (int j = 0; j < rank_; ++j)
                out(i, j) = m[i][j].eval(p.x, p.y, params_);
        return out;
    }

    int rank_;
    FieldMatrix Ax_, Ay_;
    ChartSpec chart_;
    ParamEnv params_;
};

// Fiber metric: symmetric positive definite matrix of scalar fields.
class FiberMetric {
public:
    FiberMetric(int rank, FieldMatrix g, ParamEnv params = {})
        : rank_(rank), g_(std::move(g)), params_(std::move(params)) {
        if (rank_ < 1) throw ConnectionError("metric rank must be >= 1");
        check_square(g_, rank_, "g");
    }

    static FiberMetric identity(int rank) {
        FieldMatrix g = zero_field_matrix(rank);
        for (int i = 0; i < rank; ++i) g[i][i] = ScalarField::constant(1.0);
        return FiberMetric(rank, std::move(g));
    }

    int rank() const { return rank_; }

    Eigen::MatrixXd eval(const Vec2& p) const {
        Eigen::MatrixXd G(rank_, rank_);
        for (int i = 0; i < rank_; ++i)
            for (int j = 0; j < rank_; ++j)
                G(i, j) = g_[i][j].eval(p.x, p.y, params_);
        double asym = (G - G.transpose()).cwiseAbs().maxCoeff();
        if (asym > 1e-12 * (1.0 + G.cwiseAbs().maxCoeff()))
            throw ConnectionError("metric is not symmetric at (" +
                                  std::to_string(p.x) + ", " +
                                  std::to_string(p.y) + ")");
        return 0.5 * (G + G.transpose());
    }

    // Cholesky factor L with G = L L^T; fails if G is not positive definite.
    Eigen::MatrixXd cholesky(const Vec2& p) const {
        Eigen::LLT<Eigen::MatrixXd> llt(eval(p));
        if (llt.info() != Eigen::Success)
            throw ConnectionError("metric not positive definite at (" +
                                  std::to_string(p.x) + ", " +
                                  std::to_string(p.y) + ")");
        return llt.matrixL();
    }

    void check_spd(const std::vector<Vec2>& sample) const {
        for (const auto& p : sample) cholesky(p);
    }

    double norm(const Vec2& p, const Eigen::VectorXd& v) const {
        Eigen::MatrixXd G = eval(p);
        double q = v.dot(G * v);
        return q > 0 ? std::sqrt(q) : 0.0;
    }

    // Operator norm of an endomorphism B with respect to g:
    // sup |g(B eta, xi)| / (|xi|_g |eta|_g) = sigma_max(L^T B L^{-T}).
    double endo_norm(const Vec2& p, const Eigen::MatrixXd& B) const {
        Eigen::MatrixXd L = cholesky(p);
        Eigen::MatrixXd M =
            L.transpose() * B *
            L.transpose().triangularView<Eigen::Upper>().solve(
                Eigen::MatrixXd::Identity(rank_, rank_));
        return M.jacobiSvd().singularValues()(0);
    }

    // Norm of a symmetric bilinear form M with respect to g:
    // sup |xi^T M eta| / (|xi|_g |eta|_g) = sigma_max(L^{-1} M L^{-T}).
    double bilinear_norm(const Vec2& p, const Eigen::MatrixXd& M) const {
        Eigen::MatrixXd L = cholesky(p);
        Eigen::MatrixXd A = L.triangularView<Eigen::Lower>().solve(M);
        Eigen::MatrixXd B =
            L.triangularView<Eigen::Lower>().solve(A.transpose()).transpose();
        return B.jacobiSvd().singularValues()(0);
    }

    // Directional derivative of the metric matrix at p along v.
    Eigen::MatrixXd directional_derivative(const Vec2& p, const Vec2& v) const {
        Eigen::MatrixXd D(rank_, rank_);
        for (int i = 0; i < rank_; ++i)
            for (int j = 0; j < rank_; ++j) {
                Jet jet = g_[i][j].eval_jet(p.x, p.y, 1, params_);
                D(i, j) = v.x * jet.partial(1, 0) + v.y * jet.partial(0, 1);
            }
        return 0.5 * (D + D.transpose());
    }

    const FieldMatrix& fields() const { return g_; }

private:
    int rank_;
    FieldMatrix g_;
    ParamEnv params_;
};

// (nabla_v g) as a symmetric bilinear form at p:
//   dG(v) - A(v)^T G - G A(v)
// measured in the g-operator norm.
inline Eigen::MatrixXd metric_defect_form(const ConnectionChart& conn,
                                          const FiberMetric& g, const Vec2& p,
                                          const Vec2& v) {
    Eigen::MatrixXd G = g.eval(p);
    Eigen::MatrixXd Av = conn.eval_A(p, v);
    return g.directional_derivative(p, v) - Av.transpose() * G - G * Av;
}

inline double metric_defect(const ConnectionChart& conn, const FiberMetric& g,
                            const Vec2& p, const Vec2& v) {
    return g.bilinear_norm(p, metric_defect_form(conn, g, p, v));
}

// Uniform sample grid over a rectangle, inclusive of the boundary.
inline std::vector<Vec2> make_grid(double x0, double x1, double y0, double y1,
                                   int nx, int ny) {
    std::vector<Vec2> pts;
    pts.reserve(static_cast<std::size_t>(nx) * ny);
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j) {
            double tx = nx > 1 ? static_cast<double>(i) / (nx - 1) : 0.5;
            double ty = ny > 1 ? static_cast<double>(j) / (ny - 1) : 0.5;
            pts.push_back({x0 + (x1 - x0) * tx, y0 + (y1 - y0) * ty});
        }
    return pts;
}

inline constexpr double kBoundSafety = 1.05;
inline constexpr int kBoundAngles = 16;

// Curvature bound R over a sample set: grid sup of the g-operator norm of
// R(dx,dy) (the unit bivector of the standard chart frame), times a 1.05
// safety factor.
inline double bound_R(const ConnectionChart& conn, const FiberMetric& g,
                      const std::vector<Vec2>& sample) {
    double m = 0.0;
    for (const auto& p : sample)
        m = std::max(m, g.endo_norm(p, conn.curvature(p)));
    return kBoundSafety * m;
}

// Metric-defect bound G: grid sup over 16 unit directions of the g-norm of
// (nabla_v g), times the same safety factor.
inline double bound_G(const ConnectionChart& conn, const FiberMetric& g,
                      const std::vector<Vec2>& sample) {
    double m = 0.0;
    for (const auto& p : sample)
        for (int k = 0; k < kBoundAngles; ++k) {
            double th = 2.0 * M_PI * k / kBoundAngles;
            Vec2 v{std::cos(th), std::sin(th)};
            m = std::max(m, g.bilinear_norm(p, metric_defect_form(conn, g, p, v)));
        }
    return kBoundSafety * m;
}

} // namespace partrans
