#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "partrans/estimate.hpp"
#include "test_util.hpp"

using namespace partrans;

namespace {

ScalarField sf(const std::string& src) { return ScalarField::parse(src); }

FieldMatrix fm(std::vector<std::vector<std::string>> rows) {
    FieldMatrix m;
    for (auto& r : rows) {
        std::vector<ScalarField> row;
        for (auto& s : r) row.push_back(sf(s));
        m.push_back(std::move(row));
    }
    return m;
}

ConnectionChart magnetic() {
    return ConnectionChart(2, fm({{"0", "0"}, {"0", "0"}}),
                           fm({{"0", "-x"}, {"x", "0"}}), PlaneChart{});
}

// Staircase curves around the unit square, shared endpoints (0,0) -> (1,1).
PathSpec low_stair() { return PathSpec::polyline({{0, 0}, {1, 0}, {1, 1}}); }
PathSpec high_stair() { return PathSpec::polyline({{0, 0}, {0, 1}, {1, 1}}); }

double shoelace(const std::vector<Vec2>& poly) {
    double acc = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[(i + 1) % poly.size()];
        acc += a.cross(b);
    }
    return 0.5 * std::fabs(acc);
}

} // namespace

TEST_CASE("gronwall bound closed forms") {
    auto one = [](double) { return 1.0; };
    auto zero = [](double) { return 0.0; };
    auto id = [](double x) { return x; };

    CHECK(testutil::close_rel(gronwall_bound(1.0, one, zero, 0.0, 1.0),
                              std::exp(1.0), 1e-9));
    CHECK(testutil::close_rel(gronwall_bound(0.0, zero, one, 0.0, 2.0), 2.0,
                              1e-9));
    CHECK(testutil::close_rel(gronwall_bound(1.0, id, zero, 0.0, 1.0),
                              std::exp(0.5), 1e-9));

    CHECK(gronwall_bound(3.25, one, one, 0.7, 0.7) == 3.25);
    CHECK_THROWS_AS(gronwall_bound(1.0, one, zero, 1.0, 0.0), EstimateError);

    // f with zero forcing reduces to u0 e^{int f}.
    auto f = [](double x) { return 0.3 + std::sin(x); };
    double expect = 2.0 * std::exp(0.3 + 1.0 - std::cos(1.0));
    CHECK(testutil::close_rel(gronwall_bound(2.0, f, zero, 0.0, 1.0), expect,
                              1e-9));
}

TEST_CASE("gronwall bound equals the equality-case ODE") {
    // u' = f u + g solved as an augmented 2x2 linear system gives an
    // independent route to the same value.
    testutil::FieldGen gen(420260817u);
    for (int iter = 0; iter < 10; ++iter) {
        ScalarField ff = gen.field(2);
        ScalarField gf = gen.field(2);
        double u0 = gen.uniform(0.1, 2.0);
        double t1 = gen.uniform(0.4, 1.3);

        auto f = [&](double x) { return ff.eval(x, 0.37); };
        auto g = [&](double x) { return gf.eval(x, 0.37); };
        double bound = gronwall_bound(u0, f, g, 0.0, t1);

        auto M = [&](double u) {
            Eigen::MatrixXd m(2, 2);
            double x = u * t1;
            m << f(x) * t1, g(x) * t1, 0.0, 0.0;
            return m;
        };
        Eigen::MatrixXd X0(2, 1);
        X0 << u0, 1.0;
        long steps = 0;
        double est = 0.0;
        Eigen::MatrixXd X = ode::integrate_linear(M, X0, 1e-12, steps, est);
        CHECK(testutil::close_rel(bound, X(0, 0), 1e-7));
    }
}

TEST_CASE("quadrature failure is reported") {
    auto rough = [](double x) { return 1.0 / std::sqrt(x + 1e-14); };
    CHECK_THROWS_AS(quad::adaptive_simpson(rough, 0.0, 1.0, 1e-16),
                    EstimateError);
}

TEST_CASE("homotopy area closed forms") {
    // Constant homotopy: nothing is swept.
    auto stay = HomotopyGrid::linear_sweep(low_stair(), low_stair());
    CHECK(homotopy_area(stay) == 0.0);

    // gamma(t,s) = (t,s) sweeps the unit square with Jacobian 1.
    auto square = HomotopyGrid::from_formula(sf("x"), sf("y"));
    CHECK(testutil::close_abs(homotopy_area(square), 1.0, 1e-12));
    CHECK_FALSE(square.endpoints_fixed());

    // Staircase sweep also fills the unit square exactly once.
    auto stairs = HomotopyGrid::linear_sweep(low_stair(), high_stair());
    CHECK(stairs.endpoints_fixed());
    CHECK(testutil::close_abs(homotopy_area(stairs), 1.0, 1e-9));

    // Graph sweep under 0.3 sin(pi t): area 0.6/pi.
    auto bow = HomotopyGrid::from_formula(sf("x"), sf("y*0.3*sin(pi*x)"), 129,
                                          65, {{"pi", M_PI}});
    CHECK(bow.endpoints_fixed());
    CHECK(testutil::close_rel(homotopy_area(bow), 0.6 / M_PI, 1e-6));

    // Embedded homotopy: area agrees with the shoelace area of the swept
    // region's boundary polygon.
    std::vector<Vec2> poly;
    for (int i = 0; i < bow.nt(); ++i) poly.push_back(bow.node(i, bow.ns() - 1));
    for (int i = bow.nt() - 1; i >= 0; --i) poly.push_back(bow.node(i, 0));
    CHECK(testutil::close_rel(homotopy_area(bow), shoelace(poly), 1e-4));
}

TEST_CASE("max curve length") {
    auto square = HomotopyGrid::from_formula(sf("x"), sf("y"));
    CHECK(testutil::close_abs(max_curve_length(square), 1.0, 1e-10));

    auto point = HomotopyGrid::from_formula(sf("0.3"), sf("0.4"), 9, 5);
    CHECK(max_curve_length(point) == 0.0);

    // Sweep rows interpolate between the rail lengths; the Hermite
    // reconstruction may overshoot slightly at the staircase corner.
    auto stairs = HomotopyGrid::linear_sweep(low_stair(), high_stair());
    double L = max_curve_length(stairs);
    CHECK(L >= 2.0 - 1e-9);
    CHECK(L <= 2.0 + 5e-3);
}

TEST_CASE("grid validation") {
    CHECK_THROWS_AS(HomotopyGrid::from_formula(sf("x"), sf("y"), 128, 65),
                    EstimateError);
    CHECK_THROWS_AS(HomotopyGrid::from_formula(sf("x"), sf("y"), 129, 1),
                    EstimateError);
    CHECK_THROWS_AS(
        HomotopyGrid::linear_sweep(PathSpec::segment({0, 0}, {1, 0}),
                                   PathSpec::segment({0, 0}, {1, 0.5})),
        EstimateError);
    // Endpoint rows not fixed: the gap estimate refuses.
    auto square = HomotopyGrid::from_formula(sf("x"), sf("y"));
    Eigen::VectorXd xi(2);
    xi << 1.0, 0.0;
    CHECK_THROWS_AS(transport_gap(magnetic(), FiberMetric::identity(2), square, xi),
                    EstimateError);
}

TEST_CASE("transport gap on the flat connection") {
    ConnectionChart flat(2, zero_field_matrix(2), zero_field_matrix(2),
                         PlaneChart{});
    Eigen::VectorXd xi(2);
    xi << 0.4, -1.2;
    auto rep = transport_gap(flat, FiberMetric::identity(2),
                             HomotopyGrid::linear_sweep(low_stair(), high_stair()),
                             xi);
    CHECK(rep.lhs == 0.0);
    CHECK(rep.rhs == 0.0);
    CHECK(rep.R == 0.0);
}

TEST_CASE("transport gap on the magnetic staircase sweep") {
    ConnectionChart mag = magnetic();
    FiberMetric g = FiberMetric::identity(2);
    Eigen::VectorXd xi(2);
    xi << 1.0, 0.0;

    auto rep = transport_gap(
        mag, g, HomotopyGrid::linear_sweep(low_stair(), high_stair()), xi);
    double expect_lhs = 2.0 * std::sin(0.5);
    CHECK(testutil::close_abs(rep.lhs, expect_lhs, 1e-7));
    CHECK(testutil::close_abs(rep.R, 1.05, 1e-12));
    CHECK(rep.G == 0.0);
    CHECK(testutil::close_abs(rep.area, 1.0, 1e-9));
    CHECK(testutil::close_abs(rep.rhs, 1.05, 1e-6));
    CHECK(rep.lhs <= rep.rhs * (1.0 + 1e-6));

    auto row = gap_csv_row("mag-stairs", rep);
    CHECK(row.substr(0, 11) == "mag-stairs,");
    CHECK(gap_csv_header() == "id,lhs,rhs,R,G,L,area,margin");
}

TEST_CASE("transport gap on a formula sweep") {
    ConnectionChart mag = magnetic();
    FiberMetric g = FiberMetric::identity(2);
    Eigen::VectorXd xi(2);
    xi << 0.0, 1.0;

    auto bow = HomotopyGrid::from_formula(sf("x"), sf("y*0.3*sin(pi*x)"), 129,
                                          65, {{"pi", M_PI}});
    auto rep = transport_gap(mag, g, bow, xi);
    double swept = 0.6 / M_PI;
    CHECK(testutil::close_abs(rep.lhs, 2.0 * std::sin(0.5 * swept), 1e-6));
    CHECK(rep.lhs <= rep.rhs * (1.0 + 1e-6));
    CHECK(testutil::close_rel(rep.rhs, 1.05 * swept, 1e-4));
}

TEST_CASE("closed rank-one forms are path independent") {
    ConnectionChart conn(1, fm({{"1"}}), fm({{"0"}}), PlaneChart{});
    Eigen::VectorXd xi(1);
    xi << 1.0;
    auto rep = transport_gap(
        conn, FiberMetric::identity(1),
        HomotopyGrid::linear_sweep(
            PathSpec::segment({0, 0}, {1, 1}),
            PathSpec::polyline({{0, 0}, {1, 0}, {1, 1}})),
        xi);
    CHECK(rep.rhs == 0.0);
    CHECK(rep.lhs <= 5e-10);
}

TEST_CASE("norm growth ratios") {
    Eigen::VectorXd xi(2);
    xi << 1.0, 0.0;
    auto stairs = HomotopyGrid::linear_sweep(low_stair(), high_stair());

    SECTION("metric pair stays at ratio 1") {
        double ratio = norm_growth_check(magnetic(), FiberMetric::identity(2),
                                         stairs, xi);
        CHECK(testutil::close_abs(ratio, 1.0, 1e-8));
    }

    SECTION("zero vector reports zero") {
        Eigen::VectorXd z = Eigen::VectorXd::Zero(2);
        CHECK(norm_growth_check(magnetic(), FiberMetric::identity(2), stairs,
                                z) == 0.0);
    }

    SECTION("growing rank-one transport stays below the certified rate") {
        ConnectionChart conn(1, fm({{"-1"}}), fm({{"0"}}), PlaneChart{});
        auto seg = PathSpec::segment({0, 0}, {1, 0});
        auto rigid = HomotopyGrid::linear_sweep(seg, seg, 65, 5);
        Eigen::VectorXd one(1);
        one << 1.0;
        double ratio =
            norm_growth_check(conn, FiberMetric::identity(1), rigid, one);
        // growth e^t against e^{G L/2} with G = 2.1, L = 1
        CHECK(testutil::close_abs(ratio, std::exp(1.0 - 1.05), 1e-6));
        CHECK(ratio <= 1.0 + 10.0 * kTransportDefaultTol);
    }

    SECTION("generic non-metric pair respects the contract") {
        ConnectionChart conn(
            2, fm({{"0.3*sin(x+y)", "0.2+0.1*x"}, {"-0.1", "0.25*cos(x)"}}),
            fm({{"0.1*y", "-0.3"}, {"0.2*exp(0.5*x)", "0.15*x*y"}}),
            PlaneChart{});
        FiberMetric g(2, fm({{"exp(0.2*x)+1", "0.1*sin(y)"},
                             {"0.1*sin(y)", "2+0.1*x*y"}}));
        double ratio = norm_growth_check(conn, g, stairs, xi);
        CHECK(ratio <= 1.0 + 10.0 * kTransportDefaultTol);
        CHECK(ratio > 0.1);
    }
}
