#pragma once

// Declarative scenario files: a JSON document binds a connection, metric,
// paths, removed sets, oracles, and parameters to one toolkit operation and
// lists named checks with tolerances. Running a scenario produces a
// deterministic JSON report plus optional CSV/SVG artifacts; artifacts are
// outputs only, every assertion runs on numbers in the report.
//
// Validation problems (schema, unresolved names, malformed expressions)
// throw ScenarioError; the runner maps them to exit code 2. Exceptions out
// of the toolkit during a run are runtime errors, exit code 3. A failed
// check is not an exception: the report carries passed = false, exit 1.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "partrans/connection.hpp"
#include "partrans/estimate.hpp"
#include "partrans/expr.hpp"
#include "partrans/extend.hpp"
#include "partrans/geometry.hpp"
#include "partrans/homotopy.hpp"
#include "partrans/kostant.hpp"
#include "partrans/path.hpp"
#include "partrans/regions.hpp"
#include "partrans/svg.hpp"
#include "partrans/transport.hpp"

namespace partrans {

using Json = nlohmann::ordered_json;

class ScenarioError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunOptions {
    double tol = kTransportDefaultTol;
    std::uint64_t seed = 0;
    bool artifacts = true;
};

struct CheckOutcome {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct ScenarioReport {
    std::string id;
    std::string kind;
    double tol = kTransportDefaultTol;
    std::uint64_t seed = 0;
    Json results;
    std::vector<CheckOutcome> checks;
    bool passed = true;
    // artifact name -> content; the CLI writes them next to the report
    std::vector<std::pair<std::string, std::string>> artifacts;

    Json to_json() const {
        Json j;
        j["id"] = id;
        j["kind"] = kind;
        j["tol"] = tol;
        j["seed"] = seed;
        j["results"] = results;
        Json cs = Json::array();
        for (const auto& c : checks) {
            Json e;
            e["name"] = c.name;
            e["passed"] = c.passed;
            e["detail"] = c.detail;
            cs.push_back(e);
        }
        j["checks"] = cs;
        j["passed"] = passed;
        Json as = Json::array();
        for (const auto& a : artifacts) as.push_back(a.first);
        j["artifacts"] = as;
        return j;
    }
};

// ---------------------------------------------------------------------------
// Binding parsers

namespace scenario_detail {

[[noreturn]] inline void fail(const std::string& where,
                              const std::string& what) {
    throw ScenarioError(where + ": " + what);
}

inline const Json& need(const Json& j, const std::string& key,
                        const std::string& where) {
    if (!j.is_object() || !j.contains(key))
        fail(where, "missing required field '" + key + "'");
    return j.at(key);
}

inline double need_num(const Json& j, const std::string& key,
                       const std::string& where) {
    const Json& v = need(j, key, where);
    if (!v.is_number()) fail(where + "." + key, "expected a number");
    return v.get<double>();
}

inline double opt_num(const Json& j, const std::string& key, double dflt) {
    if (!j.is_object() || !j.contains(key)) return dflt;
    if (!j.at(key).is_number())
        fail(key, "expected a number");
    return j.at(key).get<double>();
}

inline int need_int(const Json& j, const std::string& key,
                    const std::string& where) {
    const Json& v = need(j, key, where);
    if (!v.is_number_integer()) fail(where + "." + key, "expected an integer");
    return v.get<int>();
}

inline int opt_int(const Json& j, const std::string& key, int dflt) {
    if (!j.is_object() || !j.contains(key)) return dflt;
    if (!j.at(key).is_number_integer()) fail(key, "expected an integer");
    return j.at(key).get<int>();
}

inline std::string need_str(const Json& j, const std::string& key,
                            const std::string& where) {
    const Json& v = need(j, key, where);
    if (!v.is_string()) fail(where + "." + key, "expected a string");
    return v.get<std::string>();
}

inline ScalarField parse_field(const Json& v, const std::string& where) {
    if (!v.is_string()) fail(where, "expected an expression string");
    try {
        return ScalarField::parse(v.get<std::string>());
    } catch (const ParseError& e) {
        fail(where, e.what());
    }
}

inline Vec2 parse_point(const Json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() ||
        !v[1].is_number())
        fail(where, "expected a point [x, y]");
    return {v[0].get<double>(), v[1].get<double>()};
}

inline std::vector<Vec2> parse_points(const Json& v,
                                      const std::string& where) {
    if (!v.is_array() || v.empty()) fail(where, "expected a point list");
    std::vector<Vec2> pts;
    for (std::size_t i = 0; i < v.size(); ++i)
        pts.push_back(parse_point(v[i], where + "[" + std::to_string(i) + "]"));
    return pts;
}

inline ParamEnv parse_params(const Json& j, const std::string& where) {
    ParamEnv env;
    if (!j.is_object() || !j.contains("params")) return env;
    const Json& p = j.at("params");
    if (!p.is_object()) fail(where + ".params", "expected an object");
    for (auto it = p.begin(); it != p.end(); ++it) {
        if (!it.value().is_number())
            fail(where + ".params." + it.key(), "expected a number");
        env[it.key()] = it.value().get<double>();
    }
    return env;
}

inline FieldMatrix parse_field_matrix(const Json& v, int rank,
                                      const std::string& where) {
    if (!v.is_array() || static_cast<int>(v.size()) != rank)
        fail(where, "expected " + std::to_string(rank) + " rows");
    FieldMatrix m;
    for (int i = 0; i < rank; ++i) {
        const Json& row = v[i];
        if (!row.is_array() || static_cast<int>(row.size()) != rank)
            fail(where + "[" + std::to_string(i) + "]",
                 "expected " + std::to_string(rank) + " entries");
        std::vector<ScalarField> r;
        for (int k = 0; k < rank; ++k)
            r.push_back(parse_field(row[k], where + "[" + std::to_string(i) +
                                                "][" + std::to_string(k) +
                                                "]"));
        m.push_back(std::move(r));
    }
    return m;
}

inline ChartSpec parse_chart(const Json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("chart")) return PlaneChart{};
    const Json& c = j.at("chart");
    std::string type = need_str(c, "type", where + ".chart");
    if (type == "plane") return PlaneChart{};
    if (type == "rect")
        return RectChart{need_num(c, "x0", where), need_num(c, "x1", where),
                         need_num(c, "y0", where), need_num(c, "y1", where)};
    fail(where + ".chart.type", "unknown chart type '" + type + "'");
}

inline ConnectionChart parse_connection(const Json& j,
                                        const std::string& where) {
    if (!j.is_object()) fail(where, "expected a connection object");
    ParamEnv params = parse_params(j, where);
    try {
        if (j.contains("kostant_lambda")) {
            IsothermalMetric m(
                parse_field(j.at("kostant_lambda"), where + ".kostant_lambda"),
                params);
            return kostant_connection(m);
        }
        int rank = need_int(j, "rank", where);
        if (j.contains("Atheta")) {
            std::optional<Eigen::MatrixXd> mono;
            if (j.contains("monodromy")) {
                const Json& mj = j.at("monodromy");
                Eigen::MatrixXd m(rank, rank);
                if (!mj.is_array() || static_cast<int>(mj.size()) != rank)
                    fail(where + ".monodromy", "expected a rank x rank matrix");
                for (int i = 0; i < rank; ++i)
                    for (int k = 0; k < rank; ++k)
                        m(i, k) = mj[i][k].get<double>();
                mono = m;
            }
            return ConnectionChart::circle(
                rank,
                parse_field_matrix(need(j, "Atheta", where), rank,
                                   where + ".Atheta"),
                mono, params);
        }
        FieldMatrix ax = parse_field_matrix(need(j, "Ax", where), rank,
                                            where + ".Ax");
        FieldMatrix ay = parse_field_matrix(need(j, "Ay", where), rank,
                                            where + ".Ay");
        return ConnectionChart(rank, std::move(ax), std::move(ay),
                               parse_chart(j, where), params);
    } catch (const ScenarioError&) {
        throw;
    } catch (const std::exception& e) {
        fail(where, e.what());
    }
}

inline FiberMetric parse_metric(const Json& j, int rank,
                                const std::string& where) {
    if (!j.is_object()) fail(where, "expected a metric object");
    try {
        if (j.contains("identity")) {
            int r = j.at("identity").get<int>();
            if (r != rank)
                fail(where, "metric rank " + std::to_string(r) +
                                " does not match the connection rank " +
                                std::to_string(rank));
            return FiberMetric::identity(r);
        }
        return FiberMetric(rank,
                           parse_field_matrix(need(j, "fields", where), rank,
                                              where + ".fields"),
                           parse_params(j, where));
    } catch (const ScenarioError&) {
        throw;
    } catch (const std::exception& e) {
        fail(where, e.what());
    }
}

inline PathSpec parse_path(const Json& j, const std::string& where) {
    if (!j.is_object()) fail(where, "expected a path object");
    std::string type = need_str(j, "type", where);
    if (type == "segment")
        return PathSpec::segment(parse_point(need(j, "from", where), where),
                                 parse_point(need(j, "to", where), where));
    if (type == "arc")
        return PathSpec::arc(parse_point(need(j, "center", where), where),
                             need_num(j, "radius", where),
                             need_num(j, "theta0", where),
                             need_num(j, "theta1", where));
    if (type == "polyline")
        return PathSpec::polyline(
            parse_points(need(j, "points", where), where + ".points"));
    if (type == "theta_interval")
        return PathSpec::theta_interval(need_num(j, "theta0", where),
                                        need_num(j, "theta1", where));
    fail(where + ".type", "unknown path type '" + type + "'");
}

inline RemovedSet parse_removed(const Json& j, const std::string& where) {
    if (!j.is_object()) fail(where, "expected a removed-set object");
    if (j.contains("points"))
        return RemovedSet::points(
            parse_points(j.at("points"), where + ".points"));
    if (j.contains("segment")) {
        const Json& s = j.at("segment");
        return RemovedSet::segment(
            parse_point(need(s, "from", where + ".segment"), where),
            parse_point(need(s, "to", where + ".segment"), where));
    }
    if (j.contains("segments")) {
        const Json& arr = j.at("segments");
        if (!arr.is_array() || arr.empty())
            fail(where + ".segments", "expected a segment list");
        std::vector<std::array<Vec2, 2>> segs;
        for (const auto& s : arr)
            segs.push_back({parse_point(need(s, "from", where), where),
                            parse_point(need(s, "to", where), where)});
        return RemovedSet::segments(std::move(segs));
    }
    fail(where, "removed set needs 'points', 'segment', or 'segments'");
}

inline GridSpec parse_grid(const Json& j, const std::string& where) {
    GridSpec g{need_num(j, "x0", where), need_num(j, "x1", where),
               need_num(j, "y0", where), need_num(j, "y1", where),
               need_int(j, "nx", where),  need_int(j, "ny", where)};
    if (g.nx < 2 || g.ny < 2 || !(g.x1 > g.x0) || !(g.y1 > g.y0))
        fail(where, "grid must span a rectangle with nx, ny >= 2");
    return g;
}

inline HomotopyGrid parse_homotopy(const Json& j, const std::string& where) {
    if (!j.is_object()) fail(where, "expected a homotopy object");
    std::string type = need_str(j, "type", where);
    int nt = opt_int(j, "nt", 129);
    int ns = opt_int(j, "ns", 65);
    try {
        if (type == "linear_sweep")
            return HomotopyGrid::linear_sweep(
                parse_path(need(j, "curve0", where), where + ".curve0"),
                parse_path(need(j, "curve1", where), where + ".curve1"), nt,
                ns);
        if (type == "formula")
            return HomotopyGrid::from_formula(
                parse_field(need(j, "hx", where), where + ".hx"),
                parse_field(need(j, "hy", where), where + ".hy"), nt, ns,
                parse_params(j, where));
    } catch (const ScenarioError&) {
        throw;
    } catch (const std::exception& e) {
        fail(where, e.what());
    }
    fail(where + ".type", "unknown homotopy type '" + type + "'");
}

// ---------------------------------------------------------------------------
// Typed bodies, one per scenario kind

struct TransportBody {
    ConnectionChart conn;
    PathSpec path;
    Eigen::VectorXd xi0;
};

struct HolonomyBody {
    ConnectionChart conn;
    PathSpec loop;
};

struct EstimateBody {
    ConnectionChart conn;
    FiberMetric g;
    HomotopyGrid grid;
    Eigen::VectorXd xi0;
};

struct RegionBody {
    std::string construction; // "segment_tube" | "disk_cover"
    Vec2 a, b;                // tube segment
    std::optional<RemovedSet> F;
    Vec2 p0, p;
    double budget = 0.0; // delta for tubes, eps for disk covers
    double G = 0.0;
};

struct ExtendBody {
    ConnectionChart conn;
    RemovedSet removed;
    double exclusion = 1e-9;
    double margin = 0.0;
    std::vector<ScalarField> value;
    ParamEnv vparams;
    Vec2 p0;
    std::optional<GridSpec> grid;
    std::vector<Vec2> extra_sample;
    std::optional<std::pair<std::vector<Vec2>, Vec2>> codim2;
};

struct KostantBody {
    IsothermalMetric m;
    double h = 1e-3;
    std::optional<GridSpec> grid;
    std::vector<Vec2> points;
    std::optional<std::pair<ScalarField, ScalarField>> killing;
    std::vector<Vec2> kernel_at;
};

struct ConformalBranchBody {
    Vec2 r, s;
    GridSpec grid;
    double pair_offset = 1e-3;
    int pair_count = 9;
    double cr_margin = 0.05;
};

struct ConformalInverseBody {
    double r_min, r_max;
    int nr, ntheta;
};

using ScenarioBody =
    std::variant<TransportBody, HolonomyBody, EstimateBody, RegionBody,
                 ExtendBody, KostantBody, ConformalBranchBody,
                 ConformalInverseBody>;

inline Eigen::VectorXd parse_vector(const Json& v, const std::string& where) {
    if (!v.is_array() || v.empty()) fail(where, "expected a number array");
    Eigen::VectorXd out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number())
            fail(where + "[" + std::to_string(i) + "]", "expected a number");
        out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
    }
    return out;
}

inline Json vec_json(const Eigen::VectorXd& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

inline Json mat_json(const Eigen::MatrixXd& m) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        a.push_back(row);
    }
    return a;
}

} // namespace scenario_detail

// ---------------------------------------------------------------------------
// Scenario

class Scenario {
public:
    static Scenario from_json(const Json& doc) {
        using namespace scenario_detail;
        Scenario sc;
        sc.id_ = need_str(doc, "id", "scenario");
        sc.kind_ = need_str(doc, "kind", "scenario");
        const Json& b = need(doc, "bindings", "scenario");
        const std::string where = "bindings";

        if (sc.kind_ == "transport") {
            auto conn = parse_connection(need(b, "connection", where),
                                         where + ".connection");
            auto path = parse_path(need(b, "path", where), where + ".path");
            auto xi0 = parse_vector(need(b, "xi0", where), where + ".xi0");
            if (xi0.size() != conn.rank())
                fail(where + ".xi0", "length must equal the connection rank");
            sc.body_.emplace(TransportBody{std::move(conn), std::move(path),
                                           std::move(xi0)});
        } else if (sc.kind_ == "holonomy") {
            auto conn = parse_connection(need(b, "connection", where),
                                         where + ".connection");
            auto loop = parse_path(need(b, "loop", where), where + ".loop");
            sc.body_.emplace(HolonomyBody{std::move(conn), std::move(loop)});
        } else if (sc.kind_ == "estimate") {
            auto conn = parse_connection(need(b, "connection", where),
                                         where + ".connection");
            auto g = parse_metric(need(b, "metric", where), conn.rank(),
                                  where + ".metric");
            auto grid = parse_homotopy(need(b, "homotopy", where),
                                       where + ".homotopy");
            auto xi0 = parse_vector(need(b, "xi0", where), where + ".xi0");
            if (xi0.size() != conn.rank())
                fail(where + ".xi0", "length must equal the connection rank");
            sc.body_.emplace(EstimateBody{std::move(conn), std::move(g),
                                          std::move(grid), std::move(xi0)});
        } else if (sc.kind_ == "region") {
            RegionBody rb;
            rb.construction = need_str(b, "construction", where);
            rb.p0 = parse_point(need(b, "p0", where), where + ".p0");
            rb.p = parse_point(need(b, "p", where), where + ".p");
            rb.G = opt_num(b, "G", 0.0);
            if (rb.construction == "segment_tube") {
                rb.a = parse_point(need(b, "a", where), where + ".a");
                rb.b = parse_point(need(b, "b", where), where + ".b");
                rb.budget = need_num(b, "delta", where);
            } else if (rb.construction == "disk_cover") {
                rb.F = parse_removed(need(b, "removed", where),
                                     where + ".removed");
                rb.budget = need_num(b, "eps", where);
            } else {
                fail(where + ".construction",
                     "unknown construction '" + rb.construction + "'");
            }
            if (!(rb.budget > 0)) fail(where, "budget must be positive");
            sc.body_.emplace(std::move(rb));
        } else if (sc.kind_ == "extend") {
            const Json& oj = need(b, "oracle", where);
            ExtendBody eb{parse_connection(need(b, "connection", where),
                                           where + ".connection"),
                          parse_removed(need(oj, "removed", where + ".oracle"),
                                        where + ".oracle.removed"),
                          opt_num(oj, "exclusion", 1e-9),
                          opt_num(oj, "margin", 0.0),
                          {},
                          parse_params(oj, where + ".oracle"),
                          parse_point(need(b, "p0", where), where + ".p0"),
                          {},
                          {},
                          {}};
            const Json& vals = need(oj, "value", where + ".oracle");
            if (!vals.is_array() ||
                static_cast<int>(vals.size()) != eb.conn.rank())
                fail(where + ".oracle.value",
                     "expected one expression per fiber coordinate");
            for (std::size_t i = 0; i < vals.size(); ++i)
                eb.value.push_back(
                    parse_field(vals[i], where + ".oracle.value[" +
                                             std::to_string(i) + "]"));
            if (b.contains("grid"))
                eb.grid = parse_grid(b.at("grid"), where + ".grid");
            if (b.contains("sample"))
                eb.extra_sample =
                    parse_points(b.at("sample"), where + ".sample");
            if (!eb.grid && eb.extra_sample.empty() && !b.contains("codim2"))
                fail(where, "extend needs 'grid', 'sample', or 'codim2'");
            if (b.contains("codim2")) {
                const Json& c = b.at("codim2");
                eb.codim2 = {
                    parse_points(need(c, "F", where + ".codim2"),
                                 where + ".codim2.F"),
                    parse_point(need(c, "at", where + ".codim2"),
                                where + ".codim2.at")};
            }
            sc.body_.emplace(std::move(eb));
        } else if (sc.kind_ == "kostant") {
            KostantBody kb{
                IsothermalMetric(
                    parse_field(need(b, "lambda", where), where + ".lambda"),
                    parse_params(b, where)),
                opt_num(b, "h", 1e-3),
                {},
                {},
                {},
                {}};
            if (!(kb.h > 0)) fail(where + ".h", "step must be positive");
            if (b.contains("grid"))
                kb.grid = parse_grid(b.at("grid"), where + ".grid");
            if (b.contains("points"))
                kb.points = parse_points(b.at("points"), where + ".points");
            if (b.contains("killing")) {
                const Json& k = b.at("killing");
                if (!k.is_array() || k.size() != 2)
                    fail(where + ".killing",
                         "expected two component expressions");
                kb.killing = {parse_field(k[0], where + ".killing[0]"),
                              parse_field(k[1], where + ".killing[1]")};
                if (!kb.grid && kb.points.empty())
                    fail(where, "killing fields need 'grid' or 'points'");
            }
            if (b.contains("kernel_at"))
                kb.kernel_at =
                    parse_points(b.at("kernel_at"), where + ".kernel_at");
            if (!kb.grid && kb.points.empty() && kb.kernel_at.empty())
                fail(where, "kostant needs 'grid', 'points', or 'kernel_at'");
            sc.body_.emplace(std::move(kb));
        } else if (sc.kind_ == "conformal-demo") {
            std::string mode = need_str(b, "mode", where);
            if (mode == "branch") {
                ConformalBranchBody cb{
                    parse_point(need(b, "r", where), where + ".r"),
                    parse_point(need(b, "s", where), where + ".s"),
                    parse_grid(need(b, "grid", where), where + ".grid"),
                    opt_num(b, "pair_offset", 1e-3),
                    opt_int(b, "pair_count", 9),
                    opt_num(b, "cr_margin", 0.05)};
                if (dist(cb.r, cb.s) <= 1e-12)
                    fail(where, "branch points must be distinct");
                if (!(cb.pair_offset > 0) || cb.pair_count < 1)
                    fail(where, "pair sampling must be positive");
                sc.body_.emplace(std::move(cb));
            } else if (mode == "inverse") {
                ConformalInverseBody ib{need_num(b, "r_min", where),
                                        need_num(b, "r_max", where),
                                        opt_int(b, "nr", 34),
                                        opt_int(b, "ntheta", 64)};
                if (!(ib.r_min > 0) || !(ib.r_max > ib.r_min) || ib.nr < 2 ||
                    ib.ntheta < 3)
                    fail(where, "annulus must satisfy 0 < r_min < r_max");
                sc.body_.emplace(std::move(ib));
            } else {
                fail(where + ".mode", "unknown mode '" + mode + "'");
            }
        } else {
            fail("scenario.kind", "unknown kind '" + sc.kind_ + "'");
        }

        if (doc.contains("checks")) {
            const Json& cs = doc.at("checks");
            if (!cs.is_array()) fail("checks", "expected an array");
            for (std::size_t i = 0; i < cs.size(); ++i)
                sc.checks_.push_back(
                    validate_check(cs[i], "checks[" + std::to_string(i) + "]"));
        }
        return sc;
    }

    static Scenario from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ScenarioError("cannot open scenario file " + path);
        Json doc;
        try {
            doc = Json::parse(in);
        } catch (const Json::parse_error& e) {
            throw ScenarioError(path + ": " + e.what());
        }
        return from_json(doc);
    }

    const std::string& id() const { return id_; }
    const std::string& kind() const { return kind_; }

    ScenarioReport run(const RunOptions& opt = {}) const {
        ScenarioReport rep;
        rep.id = id_;
        rep.kind = kind_;
        rep.tol = opt.tol;
        rep.seed = opt.seed;
        std::visit([&](const auto& body) { execute(body, opt, rep); },
                   *body_);
        run_checks(rep);
        return rep;
    }

private:
    Scenario() = default;

    static Json validate_check(const Json& c, const std::string& where) {
        using namespace scenario_detail;
        if (!c.is_object()) fail(where, "expected a check object");
        std::string type = need_str(c, "check", where);
        static const std::vector<std::string> known{
            "value-below", "value-above", "value-equals",
            "flag",        "vector-equals", "entry-equals"};
        if (std::find(known.begin(), known.end(), type) == known.end())
            fail(where + ".check", "unknown check '" + type + "'");
        need_str(c, "field", where);
        if (type == "value-below") need_num(c, "max", where);
        if (type == "value-above") need_num(c, "min", where);
        if (type == "value-equals" || type == "vector-equals" ||
            type == "entry-equals") {
            if (!(need_num(c, "tol", where) > 0))
                fail(where + ".tol", "tolerance must be positive");
        }
        if (type == "value-equals") need_num(c, "expect", where);
        if (type == "flag") {
            if (!need(c, "expect", where).is_boolean())
                fail(where + ".expect", "expected a boolean");
        }
        if (type == "vector-equals") need(c, "expect", where);
        if (type == "entry-equals") {
            need_int(c, "row", where);
            need_int(c, "col", where);
            need_num(c, "expect", where);
        }
        return c;
    }

    // --- runners, one per kind ---------------------------------------------

    static void execute(const scenario_detail::TransportBody& b,
                        const RunOptions& opt, ScenarioReport& rep) {
        auto res = transport(b.conn, b.path, b.xi0, opt.tol);
        rep.results["end_value"] = scenario_detail::vec_json(res.end_value);
        rep.results["steps"] = res.steps;
        rep.results["est_error"] = res.est_error;
    }

    static void execute(const scenario_detail::HolonomyBody& b,
                        const RunOptions& opt, ScenarioReport& rep) {
        auto res = loop_holonomy(b.conn, b.loop, opt.tol);
        Eigen::MatrixXd eye =
            Eigen::MatrixXd::Identity(res.matrix.rows(), res.matrix.cols());
        double deviation = (res.matrix - eye).norm();
        rep.results["holonomy"] = scenario_detail::mat_json(res.matrix);
        rep.results["deviation"] = deviation;
        rep.results["obstructed"] = deviation > 100.0 * opt.tol;
        rep.results["steps"] = res.steps;
        rep.results["est_error"] = res.est_error;
    }

    static void execute(const scenario_detail::EstimateBody& b,
                        const RunOptions& opt, ScenarioReport& rep) {
        auto gap = transport_gap(b.conn, b.g, b.grid, b.xi0, opt.tol);
        rep.results["lhs"] = gap.lhs;
        rep.results["rhs"] = gap.rhs;
        rep.results["R"] = gap.R;
        rep.results["G"] = gap.G;
        rep.results["L"] = gap.L;
        rep.results["area"] = gap.area;
        rep.results["margin"] = gap.rhs - gap.lhs;
        if (opt.artifacts) {
            std::ostringstream csv;
            csv << gap_csv_header() << "\n" << gap_csv_row(rep.id, gap) << "\n";
            rep.artifacts.emplace_back(rep.id + ".csv", csv.str());
        }
    }

    static void execute(const scenario_detail::RegionBody& b,
                        const RunOptions&, ScenarioReport& rep) {
        RegionDecomposition dec =
            b.construction == "segment_tube"
                ? segment_tube_decomposition(b.a, b.b, b.p0, b.p, b.budget)
                : disk_cover_decomposition(*b.F, b.p0, b.p, b.budget);
        rep.results["construction"] = dec.construction;
        rep.results["item_count"] = dec.items.size();
        rep.results["r_budget"] = r_budget(dec);
        rep.results["rplus_budget"] = rplus_budget(dec, b.G);
        rep.results["walk_length"] = dec.walk_length();
        rep.results["K_center"] =
            Json::array({dec.K_center.x, dec.K_center.y});
        rep.results["K_radius"] = dec.K_radius;
        Json items = Json::array();
        for (const auto& it : dec.items) {
            Json e;
            e["j0"] = Json::array({it.j0.x, it.j0.y});
            e["j1"] = Json::array({it.j1.x, it.j1.y});
            e["mu"] = it.mu;
            e["area"] = it.area_exact;
            e["L"] = it.L;
            e["entry_t"] = it.entry_t;
            e["exit_t"] = it.exit_t;
            items.push_back(e);
        }
        rep.results["items"] = items;
    }

    static void execute(const scenario_detail::ExtendBody& b,
                        const RunOptions& opt, ScenarioReport& rep) {
        SectionOracle oracle;
        const auto& removed = b.removed;
        double exclusion = b.exclusion;
        oracle.in_domain = [&removed, exclusion](const Vec2& q) {
            return removed.distance(q) > exclusion;
        };
        const auto& fields = b.value;
        const auto& env = b.vparams;
        oracle.value = [&fields, &env](const Vec2& q) {
            Eigen::VectorXd v(fields.size());
            for (std::size_t i = 0; i < fields.size(); ++i)
                v(static_cast<Eigen::Index>(i)) = fields[i].eval(q.x, q.y, env);
            return v;
        };
        oracle.margin = b.margin;

        std::vector<Vec2> pts = b.extra_sample;
        if (b.grid)
            for (const auto& q :
                 make_grid(b.grid->x0, b.grid->x1, b.grid->y0, b.grid->y1,
                           b.grid->nx, b.grid->ny))
                pts.push_back(q);
        std::vector<Vec2> inside;
        for (const auto& q : pts)
            if (oracle.in_domain(q)) inside.push_back(q);

        if (!inside.empty()) {
            double agreement = agreement_defect(
                b.conn, FiberMetric::identity(b.conn.rank()), oracle, b.p0,
                inside, opt.tol);
            rep.results["agreement"] = agreement;
            rep.results["sample_size"] = inside.size();
        }
        if (b.codim2) {
            Eigen::VectorXd v = codim2_extension(
                b.conn, oracle, b.codim2->first, b.codim2->second, opt.tol);
            rep.results["codim2_value"] = scenario_detail::vec_json(v);
        }

        if (opt.artifacts && b.grid) {
            auto grid_pts = make_grid(b.grid->x0, b.grid->x1, b.grid->y0,
                                      b.grid->y1, b.grid->nx, b.grid->ny);
            auto values = radial_extension(b.conn, b.p0,
                                           oracle.query(b.p0), grid_pts,
                                           opt.tol);
            std::vector<double> defects(grid_pts.size(), 0.0);
            for (std::size_t i = 0; i < grid_pts.size(); ++i)
                if (oracle.in_domain(grid_pts[i]))
                    defects[i] =
                        (values[i] - oracle.query(grid_pts[i])).norm();
            rep.artifacts.emplace_back(
                rep.id + ".csv", extension_csv(grid_pts, values, defects));
            if (b.conn.rank() >= 2) {
                std::vector<Vec2> arrows;
                arrows.reserve(values.size());
                for (const auto& v : values)
                    arrows.push_back({v(0), v(1)});
                rep.artifacts.emplace_back(rep.id + ".svg",
                                           svg_quiver(grid_pts, arrows));
            }
        }
    }

    static void execute(const scenario_detail::KostantBody& b,
                        const RunOptions& opt, ScenarioReport& rep) {
        std::vector<Vec2> grid_pts;
        if (b.grid)
            grid_pts = make_grid(b.grid->x0, b.grid->x1, b.grid->y0,
                                 b.grid->y1, b.grid->nx, b.grid->ny);

        if (!b.points.empty()) {
            Json ks = Json::array();
            for (const auto& q : b.points)
                ks.push_back(gaussian_curvature(b.m, q));
            rep.results["kappa"] = ks;
        }
        if (!grid_pts.empty()) {
            double worst = 0.0;
            for (const auto& q : grid_pts)
                worst = std::max(worst, lemma_check(b.m, q, b.h));
            rep.results["lemma_deviation_max"] = worst;
        }
        if (b.killing) {
            auto conv =
                killing_to_section(b.killing->first, b.killing->second, b.m);
            const auto& sample = grid_pts.empty() ? b.points : grid_pts;
            double skew = 0.0;
            for (const auto& q : sample)
                skew = std::max(skew, conv.skew_defect(q));
            rep.results["skew_defect_max"] = skew;
            rep.results["parallel_defect"] =
                parallel_defect(conv.section, b.m, sample);
            if (!b.kernel_at.empty()) {
                double align = 1.0;
                for (const auto& q : b.kernel_at) {
                    Eigen::Vector3d v = kernel_line(b.m, q);
                    Eigen::Vector3d s = conv.section.eval(q, b.m.params());
                    align = std::min(
                        align, std::fabs(v.dot(s)) / std::max(s.norm(), 1e-300));
                }
                rep.results["kernel_alignment_min"] = align;
            }
            if (opt.artifacts && !grid_pts.empty()) {
                std::vector<Eigen::VectorXd> vals;
                std::vector<Vec2> arrows;
                for (const auto& q : grid_pts) {
                    Eigen::Vector3d s = conv.section.eval(q, b.m.params());
                    vals.push_back(s);
                    arrows.push_back({s(0), s(1)});
                }
                rep.artifacts.emplace_back(rep.id + ".csv",
                                           extension_csv(grid_pts, vals));
                rep.artifacts.emplace_back(rep.id + ".svg",
                                           svg_quiver(grid_pts, arrows));
            }
        } else if (!b.kernel_at.empty()) {
            Json lines = Json::array();
            for (const auto& q : b.kernel_at) {
                Eigen::Vector3d v = kernel_line(b.m, q);
                lines.push_back(Json::array({v(0), v(1), v(2)}));
            }
            rep.results["kernel"] = lines;
        }
    }

    static void execute(const scenario_detail::ConformalBranchBody& b,
                        const RunOptions&, ScenarioReport& rep) {
        using C = std::complex<double>;
        C r{b.r.x, b.r.y}, s{b.s.x, b.s.y};
        C d = (s - r) / std::abs(s - r);
        C sqrt_d = std::sqrt(d);
        // branch of sqrt with the cut along direction d from the origin
        auto sqrt_cut = [&](C z) {
            C zp = z * std::conj(d);
            double phi = std::atan2(zp.imag(), zp.real());
            if (phi < 0) phi += 2 * M_PI;
            return std::sqrt(std::abs(z)) *
                   std::polar(1.0, 0.5 * phi) * sqrt_d;
        };
        auto w1 = [&](C z) { return sqrt_cut(z - r) * sqrt_cut(z - s); };
        auto modulus = [&](C z) {
            return std::sqrt(std::abs(z - r) * std::abs(z - s));
        };

        auto pts = make_grid(b.grid.x0, b.grid.x1, b.grid.y0, b.grid.y1,
                             b.grid.nx, b.grid.ny);
        int skipped = 0;
        double max_w1 = 0.0, sup_bound = 0.0, cr_max = 0.0;
        std::ostringstream csv;
        csv << "x,y,re,im\n";
        csv.precision(12);
        for (const auto& q : pts) {
            double d_cut = dist_point_segment(q, b.r, b.s);
            if (d_cut <= 1e-12) {
                ++skipped;
                continue;
            }
            C z{q.x, q.y};
            C w = w1(z);
            max_w1 = std::max(max_w1, std::abs(w));
            sup_bound = std::max(sup_bound, modulus(z));
            csv << q.x << "," << q.y << "," << w.real() << "," << w.imag()
                << "\n";
            if (d_cut > b.cr_margin) {
                double h = 1e-5;
                C wx = (w1(z + C{h, 0}) - w1(z - C{h, 0})) / (2 * h);
                C wy = (w1(z + C{0, h}) - w1(z - C{0, h})) / (2 * h);
                // f holomorphic iff d/dy f = i d/dx f
                cr_max = std::max(cr_max, std::abs(wy - C{0, 1} * wx));
            }
        }

        Vec2 dir = (b.s - b.r).normalized();
        Vec2 nrm = dir.perp();
        double jump_defect = 0.0;
        for (int k = 1; k <= b.pair_count; ++k) {
            double t = static_cast<double>(k) / (b.pair_count + 1);
            Vec2 z0 = b.r + t * (b.s - b.r);
            C zp{z0.x + b.pair_offset * nrm.x, z0.y + b.pair_offset * nrm.y};
            C zm{z0.x - b.pair_offset * nrm.x, z0.y - b.pair_offset * nrm.y};
            double jump = std::abs(w1(zp) - w1(zm));
            double expect = 2.0 * modulus(C{z0.x, z0.y});
            jump_defect = std::max(jump_defect, std::fabs(jump - expect));
        }

        rep.results["max_w1"] = max_w1;
        rep.results["sup_bound"] = sup_bound;
        rep.results["bounded"] = max_w1 <= sup_bound * (1 + 1e-9);
        rep.results["jump_defect_max"] = jump_defect;
        rep.results["cr_residual_max"] = cr_max;
        rep.results["skipped_on_cut"] = skipped;
        rep.artifacts.emplace_back(rep.id + ".csv", csv.str());
    }

    static void execute(const scenario_detail::ConformalInverseBody& b,
                        const RunOptions&, ScenarioReport& rep) {
        double max_field = 0.0;
        for (int i = 0; i < b.nr; ++i) {
            double rr = b.r_min + (b.r_max - b.r_min) * i / (b.nr - 1);
            for (int k = 0; k < b.ntheta; ++k) {
                double th = 2 * M_PI * k / b.ntheta;
                std::complex<double> z = std::polar(rr, th);
                max_field = std::max(max_field, std::abs(1.0 / z));
            }
        }
        rep.results["max_field"] = max_field;
        rep.results["r_min"] = b.r_min;
        rep.results["r_max"] = b.r_max;
    }

    // --- checks -------------------------------------------------------------

    // Dotted lookup in the results object; numeric keys index arrays.
    static const Json* find_field(const Json& results,
                                  const std::string& path) {
        const Json* cur = &results;
        std::size_t start = 0;
        while (start <= path.size()) {
            std::size_t dot = path.find('.', start);
            std::string key = path.substr(
                start, dot == std::string::npos ? dot : dot - start);
            if (cur->is_array() && !key.empty() &&
                key.find_first_not_of("0123456789") == std::string::npos) {
                std::size_t idx = std::stoul(key);
                if (idx >= cur->size()) return nullptr;
                cur = &(*cur)[idx];
            } else if (cur->is_object() && cur->contains(key)) {
                cur = &cur->at(key);
            } else {
                return nullptr;
            }
            if (dot == std::string::npos) break;
            start = dot + 1;
        }
        return cur;
    }

    void run_checks(ScenarioReport& rep) const {
        using namespace scenario_detail;
        for (const auto& c : checks_) {
            std::string type = c.at("check").get<std::string>();
            std::string field = c.at("field").get<std::string>();
            CheckOutcome out;
            out.name = c.contains("name") ? c.at("name").get<std::string>()
                                          : type + " " + field;
            const Json* v = find_field(rep.results, field);
            if (!v) {
                out.passed = false;
                out.detail = "result field '" + field + "' not present";
            } else if (type == "value-below") {
                double max = c.at("max").get<double>();
                double got = v->get<double>();
                out.passed = got <= max;
                out.detail = fmt_num(got) +
                             (out.passed ? " <= " : " > ") + fmt_num(max);
            } else if (type == "value-above") {
                double min = c.at("min").get<double>();
                double got = v->get<double>();
                out.passed = got >= min;
                out.detail = fmt_num(got) +
                             (out.passed ? " >= " : " < ") + fmt_num(min);
            } else if (type == "value-equals") {
                double expect = c.at("expect").get<double>();
                double tol = c.at("tol").get<double>();
                double got = v->get<double>();
                out.passed = std::fabs(got - expect) <= tol;
                out.detail = "|" + fmt_num(got) + " - " + fmt_num(expect) +
                             "| = " + fmt_num(std::fabs(got - expect)) +
                             (out.passed ? " <= " : " > ") + fmt_num(tol);
            } else if (type == "flag") {
                bool expect = c.at("expect").get<bool>();
                bool got = v->is_boolean() && v->get<bool>();
                out.passed = got == expect;
                out.detail = std::string("got ") + (got ? "true" : "false") +
                             ", expected " + (expect ? "true" : "false");
            } else if (type == "vector-equals") {
                const Json& expect = c.at("expect");
                double tol = c.at("tol").get<double>();
                if (!v->is_array() || !expect.is_array() ||
                    v->size() != expect.size()) {
                    out.passed = false;
                    out.detail = "vector shapes differ";
                } else {
                    double worst = 0.0;
                    for (std::size_t i = 0; i < v->size(); ++i)
                        worst = std::max(
                            worst, std::fabs((*v)[i].get<double>() -
                                             expect[i].get<double>()));
                    out.passed = worst <= tol;
                    out.detail = "max component error " + fmt_num(worst) +
                                 (out.passed ? " <= " : " > ") + fmt_num(tol);
                }
            } else { // entry-equals
                int row = c.at("row").get<int>();
                int col = c.at("col").get<int>();
                double expect = c.at("expect").get<double>();
                double tol = c.at("tol").get<double>();
                if (!v->is_array() || row < 0 ||
                    row >= static_cast<int>(v->size()) ||
                    !(*v)[row].is_array() || col < 0 ||
                    col >= static_cast<int>((*v)[row].size())) {
                    out.passed = false;
                    out.detail = "matrix entry out of range";
                } else {
                    double got = (*v)[row][col].get<double>();
                    out.passed = std::fabs(got - expect) <= tol;
                    out.detail = "|" + fmt_num(got) + " - " +
                                 fmt_num(expect) + "| = " +
                                 fmt_num(std::fabs(got - expect)) +
                                 (out.passed ? " <= " : " > ") + fmt_num(tol);
                }
            }
            rep.passed = rep.passed && out.passed;
            rep.checks.push_back(std::move(out));
        }
    }

    static std::string fmt_num(double v) {
        std::ostringstream o;
        o.precision(12);
        o << v;
        return o.str();
    }

    std::string id_, kind_;
    std::optional<scenario_detail::ScenarioBody> body_;
    std::vector<Json> checks_;
};

inline ScenarioReport run_scenario(const Scenario& sc,
                                   const RunOptions& opt = {}) {
    return sc.run(opt);
}

} // namespace partrans
