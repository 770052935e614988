#pragma once

// Discrete homotopies between two plane curves, stored on a tensor grid
// over [0,1]^2 with analytic partials where available. Rows (fixed s) are
// C^1 curves; the grid carries everything the area and length estimates
// need, plus enough to rebuild each row as a transportable path.

#include <optional>
#include <string>
#include <vector>

#include "partrans/expr.hpp"
#include "partrans/geometry.hpp"
#include "partrans/path.hpp"

namespace partrans {

class EstimateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class HomotopyGrid {
public:
    // H(t,s) = (1-s) g0(t) + s g1(t). The two curves must share endpoints.
    static HomotopyGrid linear_sweep(const PathSpec& g0, const PathSpec& g1,
                                     int nt = 129, int ns = 65) {
        if (dist(g0.start(), g1.start()) > 1e-12 ||
            dist(g0.end(), g1.end()) > 1e-12)
            throw EstimateError("sweep curves must share endpoints");
        HomotopyGrid h(nt, ns);
        for (int i = 0; i < nt; ++i) {
            double t = h.tcoord(i);
            Vec2 p0 = g0.position(t), p1 = g1.position(t);
            Vec2 v0 = g0.velocity(t), v1 = g1.velocity(t);
            for (int j = 0; j < ns; ++j) {
                double s = h.scoord(j);
                h.pos_[h.idx(i, j)] = (1.0 - s) * p0 + s * p1;
                h.dt_[h.idx(i, j)] = (1.0 - s) * v0 + s * v1;
                h.ds_[h.idx(i, j)] = p1 - p0;
            }
        }
        h.g0_ = g0;
        h.g1_ = g1;
        h.finish();
        return h;
    }

    // Linear sweep with a smooth reparameterization u = w(t):
    // H(t,s) = (1-s) g0(w(t)) + s g1(w(t)). Short geometric features of g1
    // get a guaranteed share of the t-grid, which keeps the discrete area
    // quadrature accurate when piece lengths span orders of magnitude. The
    // warp is the monotone C^1 cubic through the knots (harmonic-mean node
    // slopes), so the stored partials stay continuous across knots. Knots
    // must include 0 and 1 and be strictly increasing in both coordinates.
    static HomotopyGrid linear_sweep_warped(const PathSpec& g0, const PathSpec& g1,
                                            const std::vector<double>& tk,
                                            const std::vector<double>& uk,
                                            int nt = 129, int ns = 65) {
        if (dist(g0.start(), g1.start()) > 1e-12 ||
            dist(g0.end(), g1.end()) > 1e-12)
            throw EstimateError("sweep curves must share endpoints");
        if (tk.size() != uk.size() || tk.size() < 2 || tk.front() != 0.0 ||
            tk.back() != 1.0 || uk.front() != 0.0 || uk.back() != 1.0)
            throw EstimateError("warp knots must span [0,1]");
        std::size_t nk = tk.size();
        std::vector<double> sec(nk - 1), slope_at(nk);
        for (std::size_t k = 1; k < nk; ++k) {
            if (!(tk[k] > tk[k - 1]) || !(uk[k] > uk[k - 1]))
                throw EstimateError("warp knots must increase");
            sec[k - 1] = (uk[k] - uk[k - 1]) / (tk[k] - tk[k - 1]);
        }
        slope_at.front() = sec.front();
        slope_at.back() = sec.back();
        for (std::size_t k = 1; k + 1 < nk; ++k)
            slope_at[k] = 2.0 * sec[k - 1] * sec[k] / (sec[k - 1] + sec[k]);
        HomotopyGrid h(nt, ns);
        std::size_t seg = 0;
        for (int i = 0; i < nt; ++i) {
            double t = h.tcoord(i);
            while (seg + 2 < nk && t > tk[seg + 1]) ++seg;
            double dt_k = tk[seg + 1] - tk[seg];
            double tau = (t - tk[seg]) / dt_k;
            double a = uk[seg], bb = uk[seg + 1];
            double m0 = slope_at[seg] * dt_k, m1 = slope_at[seg + 1] * dt_k;
            double t2 = tau * tau, t3 = t2 * tau;
            double u = a * (2 * t3 - 3 * t2 + 1) + m0 * (t3 - 2 * t2 + tau) +
                       bb * (-2 * t3 + 3 * t2) + m1 * (t3 - t2);
            double slope = (a * (6 * t2 - 6 * tau) + m0 * (3 * t2 - 4 * tau + 1) +
                            bb * (6 * tau - 6 * t2) + m1 * (3 * t2 - 2 * tau)) /
                           dt_k;
            u = std::clamp(u, 0.0, 1.0);
            Vec2 p0 = g0.position(u), p1 = g1.position(u);
            Vec2 v0 = slope * g0.velocity(u), v1 = slope * g1.velocity(u);
            for (int j = 0; j < ns; ++j) {
                double s = h.scoord(j);
                h.pos_[h.idx(i, j)] = (1.0 - s) * p0 + s * p1;
                h.dt_[h.idx(i, j)] = (1.0 - s) * v0 + s * v1;
                h.ds_[h.idx(i, j)] = p1 - p0;
            }
        }
        h.g0_ = g0;
        h.g1_ = g1;
        h.finish();
        return h;
    }

    // H given by two scalar fields of (t,s), bound to the (x,y) slots.
    static HomotopyGrid from_formula(const ScalarField& hx, const ScalarField& hy,
                                     int nt = 129, int ns = 65,
                                     ParamEnv params = {}) {
        HomotopyGrid h(nt, ns);
        for (int i = 0; i < nt; ++i)
            for (int j = 0; j < ns; ++j) {
                double t = h.tcoord(i), s = h.scoord(j);
                Jet jx = hx.eval_jet(t, s, 1, params);
                Jet jy = hy.eval_jet(t, s, 1, params);
                h.pos_[h.idx(i, j)] = {jx.value(), jy.value()};
                h.dt_[h.idx(i, j)] = {jx.partial(1, 0), jy.partial(1, 0)};
                h.ds_[h.idx(i, j)] = {jx.partial(0, 1), jy.partial(0, 1)};
            }
        h.finish();
        return h;
    }

    int nt() const { return nt_; }
    int ns() const { return ns_; }
    double tcoord(int i) const { return static_cast<double>(i) / (nt_ - 1); }
    double scoord(int j) const { return static_cast<double>(j) / (ns_ - 1); }

    const Vec2& node(int i, int j) const { return pos_[idx(i, j)]; }
    const Vec2& dt_at(int i, int j) const { return dt_[idx(i, j)]; }
    const Vec2& ds_at(int i, int j) const { return ds_[idx(i, j)]; }

    // True when both endpoint rows are constant across s (homotopy rel
    // endpoints); required by the transport-gap estimate.
    bool endpoints_fixed() const { return endpoints_fixed_; }

    Vec2 start() const { return node(0, 0); }
    Vec2 end() const { return node(nt_ - 1, 0); }

    // Original curves when the grid came from a sweep of two paths.
    const std::optional<PathSpec>& curve0() const { return g0_; }
    const std::optional<PathSpec>& curve1() const { return g1_; }

    // Row s_j rebuilt as a C^1 sampled path through the grid nodes.
    PathSpec row_path(int j) const {
        std::vector<Vec2> pts(nt_), vel(nt_);
        double cell = 1.0 / (nt_ - 1);
        for (int i = 0; i < nt_; ++i) {
            pts[i] = node(i, j);
            vel[i] = dt_at(i, j) * cell; // per-cell tangent
        }
        return PathSpec::sampled(std::move(pts), std::move(vel));
    }

    // Every grid node, thinned to at most 33 per axis; used as the compact
    // sample set K for the sup bounds.
    std::vector<Vec2> sample_nodes() const {
        int st = std::max(1, (nt_ - 1) / 32), ss = std::max(1, (ns_ - 1) / 32);
        std::vector<Vec2> out;
        for (int i = 0; i < nt_; i += st)
            for (int j = 0; j < ns_; j += ss) out.push_back(node(i, j));
        // keep the far edges regardless of stride arithmetic
        for (int j = 0; j < ns_; j += ss) out.push_back(node(nt_ - 1, j));
        for (int i = 0; i < nt_; i += st) out.push_back(node(i, ns_ - 1));
        return out;
    }

private:
    HomotopyGrid(int nt, int ns) : nt_(nt), ns_(ns) {
        if (nt_ < 3 || ns_ < 3 || nt_ % 2 == 0 || ns_ % 2 == 0)
            throw EstimateError("grid sizes must be odd and at least 3");
        pos_.resize(static_cast<std::size_t>(nt_) * ns_);
        dt_.resize(pos_.size());
        ds_.resize(pos_.size());
    }

    std::size_t idx(int i, int j) const {
        return static_cast<std::size_t>(i) * ns_ + j;
    }

    void finish() {
        endpoints_fixed_ = true;
        for (int j = 1; j < ns_; ++j) {
            if (dist(node(0, j), node(0, 0)) > 1e-12 ||
                dist(node(nt_ - 1, j), node(nt_ - 1, 0)) > 1e-12)
                endpoints_fixed_ = false;
        }
    }

    int nt_, ns_;
    std::vector<Vec2> pos_, dt_, ds_;
    std::optional<PathSpec> g0_, g1_;
    bool endpoints_fixed_ = false;
};

// integral over [0,1]^2 of |det(dH/dt, dH/ds)|, tensor-product Simpson on
// the stored grid.
inline double homotopy_area(const HomotopyGrid& h) {
    auto w = [](int k, int n) {
        if (k == 0 || k == n - 1) return 1.0;
        return k % 2 == 1 ? 4.0 : 2.0;
    };
    double acc = 0.0;
    for (int i = 0; i < h.nt(); ++i)
        for (int j = 0; j < h.ns(); ++j) {
            double det = h.dt_at(i, j).cross(h.ds_at(i, j));
            acc += w(i, h.nt()) * w(j, h.ns()) * std::fabs(det);
        }
    double ht = 1.0 / (h.nt() - 1), hs = 1.0 / (h.ns() - 1);
    return acc * ht * hs / 9.0;
}

// L = max over rows of the row curve length. Works on the raw sampled
// pieces so degenerate (single-point) rows report 0.
inline double max_curve_length(const HomotopyGrid& h) {
    double m = 0.0;
    double cell = 1.0 / (h.nt() - 1);
    for (int j = 0; j < h.ns(); ++j) {
        path_piece::Sampled row;
        row.pts.reserve(h.nt());
        row.vel.reserve(h.nt());
        for (int i = 0; i < h.nt(); ++i) {
            row.pts.push_back(h.node(i, j));
            row.vel.push_back(h.dt_at(i, j) * cell);
        }
        m = std::max(m, path_detail::piece_length(row));
    }
    return m;
}

} // namespace partrans
