#pragma once

// Static SVG emission for quiver and polyline plots. Plots are report
// artifacts only; no check ever reads them back. Output is deterministic
// (fixed precision, no timestamps).

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "partrans/geometry.hpp"

namespace partrans {

struct SvgOptions {
    int width = 640;
    int height = 480;
    double margin = 24.0;
};

namespace svg_detail {

struct Frame {
    double sx, sy, scale;
    double x0, y1; // world origin corner; y flips into screen coordinates

    double px(const Vec2& p) const { return sx + (p.x - x0) * scale; }
    double py(const Vec2& p) const { return sy + (y1 - p.y) * scale; }
};

inline Frame fit(const std::vector<Vec2>& pts, const SvgOptions& opt) {
    double x0 = pts[0].x, x1 = pts[0].x, y0 = pts[0].y, y1 = pts[0].y;
    for (const auto& p : pts) {
        x0 = std::min(x0, p.x);
        x1 = std::max(x1, p.x);
        y0 = std::min(y0, p.y);
        y1 = std::max(y1, p.y);
    }
    double dx = std::max(x1 - x0, 1e-9), dy = std::max(y1 - y0, 1e-9);
    double scale = std::min((opt.width - 2 * opt.margin) / dx,
                            (opt.height - 2 * opt.margin) / dy);
    Frame f;
    f.scale = scale;
    f.x0 = x0;
    f.y1 = y1;
    f.sx = 0.5 * (opt.width - scale * dx);
    f.sy = 0.5 * (opt.height - scale * dy);
    return f;
}

inline void open_svg(std::ostringstream& out, const SvgOptions& opt) {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width
        << "\" height=\"" << opt.height << "\" viewBox=\"0 0 " << opt.width
        << " " << opt.height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

} // namespace svg_detail

// Arrow field: one arrow per point, lengths normalized so the longest
// arrow spans roughly one grid cell.
inline std::string svg_quiver(const std::vector<Vec2>& points,
                              const std::vector<Vec2>& vectors,
                              SvgOptions opt = {}) {
    if (points.empty() || points.size() != vectors.size())
        throw std::invalid_argument("quiver needs one vector per point");

    auto f = svg_detail::fit(points, opt);
    double vmax = 1e-12;
    for (const auto& v : vectors) vmax = std::max(vmax, v.norm());
    double cell = std::sqrt((opt.width - 2 * opt.margin) *
                            (opt.height - 2 * opt.margin) /
                            static_cast<double>(points.size()));
    double arrow = 0.85 * cell / vmax;

    std::ostringstream out;
    out << std::fixed << std::setprecision(2);
    svg_detail::open_svg(out, opt);
    out << "<g stroke=\"#28506e\" stroke-width=\"1.1\" fill=\"none\">\n";
    for (std::size_t i = 0; i < points.size(); ++i) {
        double ax = f.px(points[i]), ay = f.py(points[i]);
        double bx = ax + vectors[i].x * arrow;
        double by = ay - vectors[i].y * arrow;
        out << "<line x1=\"" << ax << "\" y1=\"" << ay << "\" x2=\"" << bx
            << "\" y2=\"" << by << "\"/>\n";
        double hx = bx - ax, hy = by - ay;
        double hn = std::hypot(hx, hy);
        if (hn > 1e-9) {
            hx /= hn;
            hy /= hn;
            double hl = std::min(6.0, 0.3 * hn);
            out << "<line x1=\"" << bx << "\" y1=\"" << by << "\" x2=\""
                << bx - hl * (hx * 0.866 - hy * 0.5) << "\" y2=\""
                << by - hl * (hy * 0.866 + hx * 0.5) << "\"/>\n";
            out << "<line x1=\"" << bx << "\" y1=\"" << by << "\" x2=\""
                << bx - hl * (hx * 0.866 + hy * 0.5) << "\" y2=\""
                << by - hl * (hy * 0.866 - hx * 0.5) << "\"/>\n";
        }
    }
    out << "</g>\n</svg>\n";
    return out.str();
}

// Single connected polyline through the given points.
inline std::string svg_polyline(const std::vector<Vec2>& points,
                                SvgOptions opt = {}) {
    if (points.size() < 2)
        throw std::invalid_argument("polyline needs at least two points");

    auto f = svg_detail::fit(points, opt);
    std::ostringstream out;
    out << std::fixed << std::setprecision(2);
    svg_detail::open_svg(out, opt);
    out << "<polyline fill=\"none\" stroke=\"#28506e\" stroke-width=\"1.4\" "
           "points=\"";
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (i) out << " ";
        out << f.px(points[i]) << "," << f.py(points[i]);
    }
    out << "\"/>\n</svg>\n";
    return out.str();
}

} // namespace partrans
