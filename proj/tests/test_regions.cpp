#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "partrans/estimate.hpp"
#include "partrans/regions.hpp"
#include "test_util.hpp"

using namespace partrans;
using testutil::close_abs;
using testutil::close_rel;

namespace {

// Shared worked geometry: removed segment [0,1] x {0}, base segment from
// (0.5, 0.5) straight down to (0.5, -0.5).
const Vec2 kA{0, 0}, kB{1, 0}, kP0{0.5, 0.5}, kP{0.5, -0.5};

RegionDecomposition tube(double delta) {
    return segment_tube_decomposition(kA, kB, kP0, kP, delta);
}

ConnectionChart magnetic() {
    FieldMatrix zero{{ScalarField::parse("0"), ScalarField::parse("0")},
                     {ScalarField::parse("0"), ScalarField::parse("0")}};
    FieldMatrix ay{{ScalarField::parse("0"), ScalarField::parse("-x")},
                   {ScalarField::parse("x"), ScalarField::parse("0")}};
    return ConnectionChart(2, zero, ay, PlaneChart{});
}

} // namespace

TEST_CASE("tube detour around a removed segment") {
    double delta = 0.1;
    auto dec = tube(delta);

    REQUIRE(dec.construction == "segment-tube");
    REQUIRE(dec.items.size() == 1);
    const RegionItem& it = dec.items[0];

    // certified cover area is the exact tube area
    CHECK(close_abs(it.mu, 2 * delta + M_PI * delta * delta, 1e-6));
    // enclosed region is half the tube: delta |I| + pi delta^2 / 2
    CHECK(close_abs(it.area_exact, delta + 0.5 * M_PI * delta * delta, 1e-9));
    CHECK(it.area_exact <= it.mu);

    // entry/exit where the base segment pierces the tube wall
    CHECK(close_abs(it.j0.y, delta, 1e-10));
    CHECK(close_abs(it.j1.y, -delta, 1e-10));
    CHECK(close_abs(it.entry_t, 0.4, 1e-10));
    CHECK(close_abs(it.exit_t, 0.6, 1e-10));

    // detour runs along the wall: L = 1 + pi delta, and the walk is the two
    // straight runs plus the detour
    CHECK(close_abs(it.gamma.length(), 1 + M_PI * delta, 1e-9));
    CHECK(it.L <= 1 + M_PI * delta + 1e-9);
    CHECK(close_abs(dec.walk_length(), 0.8 + 1 + M_PI * delta, 1e-9));

    // ties between the two wall routes break counterclockwise: around the
    // left cap, through (-delta, 0)
    Vec2 apex = it.gamma.position(0.5);
    CHECK(apex.x < 0.0);
    CHECK(close_abs(dist(apex, kA), delta, 1e-9));

    // the detour hugs the tube wall
    for (int k = 0; k <= 50; ++k) {
        Vec2 q = it.gamma.position(k / 50.0);
        CHECK(close_abs(dist_point_segment(q, kA, kB), delta, 1e-9));
    }

    // Jordan closure
    CHECK(dist(it.gamma.start(), it.j0) <= 1e-10);
    CHECK(dist(it.gamma.end(), it.j1) <= 1e-10);

    // stored homotopy sweeps the enclosed region once and stays below the
    // certified area and length bound
    REQUIRE(it.homotopy.has_value());
    CHECK(it.homotopy->endpoints_fixed());
    CHECK(close_rel(homotopy_area(*it.homotopy), it.area_exact, 1e-3));
    CHECK(homotopy_area(*it.homotopy) <= it.mu);
    CHECK(max_curve_length(*it.homotopy) <= it.L + 1e-6);
    CHECK(it.homotopy_kind == "linear");

    // K_p covers the construction with the 1.5 safety factor
    CHECK(close_abs(dec.K_center.x, 0.5, 1e-12));
    CHECK(close_abs(dec.K_center.y, 0.0, 1e-12));
    CHECK(close_abs(dec.K_radius, 1.5 * (0.5 + delta), 1e-12));
}

TEST_CASE("tube cover area bound holds across delta") {
    for (double delta : {0.2, 0.1, 0.05, 0.01}) {
        auto dec = tube(delta);
        REQUIRE(dec.items.size() == 1);
        double bound = 2 * delta + M_PI * delta * delta;
        CHECK(dec.items[0].mu <= bound + 1e-6);
        CHECK(close_abs(dec.items[0].mu, bound, 1e-6));
        CHECK(dec.items[0].area_exact <= bound + 1e-6);
        CHECK(homotopy_area(*dec.items[0].homotopy) <= bound + 1e-6);
    }
}

TEST_CASE("tube budgets") {
    // worked case G=1, delta=0.01: budget = e^{(0.98 + L)/2} e^{L} mu,
    // detour L = 1 + pi delta
    double delta = 0.01;
    auto dec = tube(delta);
    double L = 1 + M_PI * delta;
    double mu = 2 * delta + M_PI * delta * delta;
    double expect = std::exp(0.5 * (0.98 + L)) * std::exp(L) * mu;
    CHECK(close_rel(rplus_budget(dec, 1.0), expect, 1e-8));
    CHECK(rplus_budget(dec, 1.0) <= 0.7392);

    // G = 0 collapses to the plain area budget, exactly
    CHECK(rplus_budget(dec, 0.0) == r_budget(dec));
    CHECK(close_abs(r_budget(dec), mu, 1e-12));

    // budgets shrink monotonically with delta
    double prev = std::numeric_limits<double>::infinity();
    for (double d : {0.2, 0.1, 0.05, 0.025, 0.0125}) {
        double cur = rplus_budget(tube(d), 1.0);
        CHECK(cur < prev);
        prev = cur;
    }
}

TEST_CASE("tube rejects oversized delta and degenerate input") {
    CHECK_THROWS_AS(tube(0.6), RegionError);  // cap is min(0.5, 0.5, 0.5)
    CHECK_THROWS_AS(tube(0.5), RegionError);  // cap is exclusive
    CHECK_THROWS_AS(tube(0.0), RegionError);
    CHECK_THROWS_AS(tube(-0.1), RegionError);
    // base point on the removed segment: cap collapses to zero
    CHECK_THROWS_AS(
        segment_tube_decomposition(kA, kB, {0.5, 0.0}, kP, 0.01), RegionError);
}

TEST_CASE("tube is trivial when the base segment misses the removed set") {
    auto dec = segment_tube_decomposition(kA, kB, {-0.5, 0.5}, {1.5, 0.7}, 0.1);
    CHECK(dec.construction == "trivial");
    CHECK(dec.items.empty());
    CHECK(r_budget(dec) == 0.0);
    CHECK(rplus_budget(dec, 3.0) == 0.0);
    CHECK(close_abs(dec.walk_length(), dist({-0.5, 0.5}, {1.5, 0.7}), 1e-12));
}

TEST_CASE("choose_delta finds the largest budget-feasible delta") {
    // G = 0: budget(delta) = 2 delta + pi delta^2, so eps = 0.01 solves to
    // delta* = (-1 + sqrt(1 + 0.01 pi)) / pi, then snaps down to the 1e-6 grid
    double eps = 0.01;
    double delta = choose_delta(kA, kB, kP0, kP, 0.0, eps);
    double exact = (-1.0 + std::sqrt(1.0 + eps * M_PI)) / M_PI;
    CHECK(delta <= exact);
    CHECK(delta >= exact - 1e-6);
    CHECK(std::fabs(delta / 1e-6 - std::round(delta / 1e-6)) < 1e-6);

    // feasible at delta, infeasible one grid step up
    CHECK(rplus_budget(tube(delta), 0.0) < eps);
    CHECK(rplus_budget(tube(delta + 1e-6), 0.0) >= eps);

    // huge eps: returns just under the geometric cap
    double wide = choose_delta(kA, kB, kP0, kP, 0.0, 10.0);
    CHECK(close_rel(wide, 0.5 * (1.0 - 1e-6), 1e-9));

    // re-verification property at G = 1
    for (double e : {1e-1, 1e-2}) {
        double d = choose_delta(kA, kB, kP0, kP, 1.0, e);
        CHECK(rplus_budget(tube(d), 1.0) < e);
        double cap = 0.5;
        if (2 * d <= cap * (1.0 - 1e-6))
            CHECK(rplus_budget(tube(2 * d), 1.0) >= e);
    }
}

TEST_CASE("single point disk cover") {
    auto F = RemovedSet::points({{0, 0}});
    auto dec = disk_cover_decomposition(F, {-1, 0}, {1, 0}, 0.01);

    REQUIRE(dec.items.size() == 1);
    const RegionItem& it = dec.items[0];
    double rho = std::sqrt(0.01 / M_PI);

    // full budget spent on one disk
    CHECK(close_abs(it.mu, 0.01, 1e-12));
    CHECK(close_abs(r_budget(dec), 0.01, 1e-12));
    // chord is the diameter, detour is the half circle
    CHECK(close_abs(dist(it.j0, it.j1), 2 * rho, 1e-9));
    CHECK(close_abs(it.gamma.length(), M_PI * rho, 1e-9));
    CHECK(close_abs(it.L, M_PI * rho, 1e-9));
    // half-disk enclosed area
    CHECK(close_abs(it.area_exact, 0.5 * M_PI * rho * rho, 1e-9));
    CHECK(homotopy_area(*it.homotopy) <= it.mu);
    // detour stays on the cover circle, so the removed point keeps distance rho
    for (int k = 0; k <= 40; ++k)
        CHECK(close_abs(dist(it.gamma.position(k / 40.0), {0, 0}), rho, 1e-9));
}

TEST_CASE("two point components give two ordered items") {
    auto F = RemovedSet::points({{0.5, 0}, {-0.5, 0}});
    // eps chosen so each disk gets radius 0.05: eps_k = pi 0.05^2
    double eps = 2 * M_PI * 0.0025;
    auto dec = disk_cover_decomposition(F, {-1, 0}, {1, 0}, eps);

    REQUIRE(dec.items.size() == 2);
    CHECK(dec.items[0].entry_t < dec.items[1].entry_t);
    // left disk first along the walk
    CHECK(dec.items[0].j0.x < 0);
    CHECK(dec.items[1].j0.x > 0);
    CHECK(close_abs(dec.items[0].j0.x, -0.55, 1e-9));
    CHECK(close_abs(dec.items[0].j1.x, -0.45, 1e-9));
    // r_budget is the summed disk areas
    CHECK(close_abs(r_budget(dec), 2 * M_PI * 0.0025, 1e-12));
    CHECK(rplus_budget(dec, 0.0) == r_budget(dec));
    // separate detours, straight runs in between
    CHECK(dec.items[0].exit_t < dec.items[1].entry_t);
    double expect_walk = 2.0 - 4 * 0.05 + 2 * M_PI * 0.05;
    CHECK(close_abs(dec.walk_length(), expect_walk, 1e-8));
}

TEST_CASE("disk cover with no crossing is empty") {
    auto F = RemovedSet::points({{0, 0}});
    auto dec = disk_cover_decomposition(F, {1, 1}, {2, 1}, 0.01);
    CHECK(dec.items.empty());
    CHECK(r_budget(dec) == 0.0);
    CHECK(close_abs(dec.walk_length(), 1.0, 1e-12));
}

TEST_CASE("segment component becomes a disk chain") {
    auto F = RemovedSet::segment({-0.3, 0}, {0.4, 0});
    double eps = 0.05;
    auto dec = disk_cover_decomposition(F, {0, -1}, {0.05, 1}, eps);

    REQUIRE(dec.items.size() == 1);
    const RegionItem& it = dec.items[0];
    CHECK(r_budget(dec) <= eps * (1 + 1e-9));
    CHECK(it.mu <= eps * (1 + 1e-9));
    CHECK(it.area_exact <= it.mu);
    CHECK(homotopy_area(*it.homotopy) <= it.mu * (1 + 1e-6) + 1e-12);
    CHECK(max_curve_length(*it.homotopy) <= it.L + 1e-6);

    // the detour keeps a uniform clearance from the removed segment: at
    // least the scallop height rho sqrt(3)/2
    double rho_star = 0.25 * (-0.7 + std::sqrt(0.7 * 0.7 + 8 * eps / M_PI));
    for (int k = 0; k <= 80; ++k) {
        Vec2 q = it.gamma.position(k / 80.0);
        double d = dist_point_segment(q, {-0.3, 0}, {0.4, 0});
        CHECK(d >= 0.8 * rho_star);
        CHECK(d <= rho_star * (1 + 1e-6));
    }

    // going around the wall costs real length: longer than the straight
    // segment, bounded by half the cover perimeter plus the straight runs
    CHECK(dec.walk_length() > dist({0, -1}, {0.05, 1}));
    CHECK(it.gamma.length() < 0.5 * (2 * 0.7 + 2 * M_PI * rho_star) + 0.1);
}

TEST_CASE("disjoint segment components split the budget") {
    auto F = RemovedSet::segments({{Vec2{-0.6, 0}, Vec2{-0.2, 0}},
                                   {Vec2{0.2, 0}, Vec2{0.6, 0}}});
    double eps = 0.02;
    // near-grazing base line that still pierces both chains
    auto dec = disk_cover_decomposition(F, {-1, -0.004}, {1, 0.004}, eps);

    // the base line crosses both chains
    REQUIRE(dec.items.size() == 2);
    CHECK(dec.items[0].entry_t < dec.items[1].entry_t);
    CHECK(r_budget(dec) <= eps * (1 + 1e-9));
    // each component respects its half share
    for (const auto& it : dec.items) CHECK(it.mu <= 0.5 * eps * (1 + 1e-9));
    CHECK(rplus_budget(dec, 0.0) == r_budget(dec));
    CHECK(rplus_budget(dec, 2.0) > r_budget(dec));
}

TEST_CASE("removed set validation") {
    CHECK_THROWS_AS(RemovedSet::points({}), RegionError);
    CHECK_THROWS_AS(RemovedSet::segment({0, 0}, {0, 0}), RegionError);
    // overlapping segments are not a disjoint union
    CHECK_THROWS_AS(RemovedSet::segments({{Vec2{0, 0}, Vec2{1, 0}},
                                          {Vec2{0.5, 0}, Vec2{1.5, 0}}}),
                    RegionError);
    auto F = RemovedSet::points({{0, 0}});
    CHECK_THROWS_AS(disk_cover_decomposition(F, {0, 0}, {1, 0}, 0.01),
                    RegionError);
    CHECK_THROWS_AS(disk_cover_decomposition(F, {-1, 0}, {1, 0}, 0.0),
                    RegionError);
    CHECK_THROWS_AS(disk_cover_decomposition(F, {-1, 0}, {1, 0}, -1.0),
                    RegionError);
}

TEST_CASE("removed set distances") {
    auto pts = RemovedSet::points({{1, 0}, {-1, 0}});
    CHECK(close_abs(pts.distance({0, 0}), 1.0, 1e-12));
    CHECK(close_abs(pts.distance({1, 2}), 2.0, 1e-12));
    CHECK(close_abs(pts.segment_distance({-2, 1}, {2, 1}), 1.0, 1e-12));

    auto seg = RemovedSet::segment({0, 0}, {1, 0});
    CHECK(close_abs(seg.distance({0.5, 0.3}), 0.3, 1e-12));
    CHECK(close_abs(seg.distance({2, 0}), 1.0, 1e-12));
    CHECK(close_abs(seg.segment_distance({0.2, -0.1}, {0.8, -0.2}), 0.1, 1e-12));
}

TEST_CASE("signed Green area closed forms") {
    // unit square, counterclockwise
    auto sq = PathSpec::polyline({{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0, 0}});
    CHECK(close_abs(signed_green(sq), 1.0, 1e-12));
    // clockwise flips the sign
    auto sq_cw = PathSpec::polyline({{0, 0}, {0, 1}, {1, 1}, {1, 0}, {0, 0}});
    CHECK(close_abs(signed_green(sq_cw), -1.0, 1e-12));
    // full circle about an off-origin center: area independent of center
    auto circ = PathSpec::arc({3, -2}, 0.5, 0.0, 2 * M_PI);
    CHECK(close_abs(signed_green(circ), M_PI * 0.25, 1e-12));
    // chord + half circle encloses the half disk
    auto half = PathSpec::arc({0, 0}, 1.0, 0.0, M_PI);
    CHECK(close_abs(enclosed_area({1, 0}, {-1, 0}, half), 0.5 * M_PI, 1e-12));
}

TEST_CASE("region homotopies feed the transport gap estimate") {
    auto conn = magnetic();
    FiberMetric g = FiberMetric::identity(2);
    auto dec = tube(0.1);
    const RegionItem& it = dec.items[0];

    Eigen::VectorXd xi0(2);
    xi0 << 1.0, 0.0;
    auto rep = transport_gap(conn, g, *it.homotopy, xi0, 1e-10);
    CHECK(rep.lhs <= rep.rhs * (1 + 1e-6));
    CHECK(rep.area <= it.mu);
    CHECK(rep.L <= it.L + 1e-6);
    CHECK(rep.lhs > 1e-4); // curvature makes the two routes genuinely differ
}

TEST_CASE("warped sweep matches the plain sweep where both resolve") {
    auto dec = tube(0.05);
    const RegionItem& it = dec.items[0];
    auto plain = HomotopyGrid::linear_sweep(PathSpec::segment(it.j0, it.j1),
                                            it.gamma, 65, 33);
    CHECK(close_rel(homotopy_area(*it.homotopy), homotopy_area(plain), 5e-3));
    CHECK(close_rel(max_curve_length(*it.homotopy), max_curve_length(plain),
                    5e-3));
}

TEST_CASE("warp knot validation") {
    auto g0 = PathSpec::segment({0, 0}, {1, 0});
    auto g1 = PathSpec::arc({0.5, 0}, 0.5, M_PI, 2 * M_PI);
    CHECK_THROWS_AS(
        HomotopyGrid::linear_sweep_warped(g0, g1, {0.0, 0.5}, {0.0, 1.0}, 9, 5),
        EstimateError);
    CHECK_THROWS_AS(HomotopyGrid::linear_sweep_warped(g0, g1, {0.0, 0.6, 0.5, 1.0},
                                                      {0.0, 0.3, 0.6, 1.0}, 9, 5),
                    EstimateError);
    // reparameterizing the sweep leaves the swept area alone: both equal
    // the half-disk area
    auto h = HomotopyGrid::linear_sweep_warped(g0, g1, {0.0, 0.25, 1.0},
                                               {0.0, 0.5, 1.0}, 65, 33);
    auto plain = HomotopyGrid::linear_sweep(g0, g1, 65, 33);
    CHECK(close_rel(homotopy_area(h), homotopy_area(plain), 1e-5));
    CHECK(close_rel(homotopy_area(h), 0.5 * M_PI * 0.25, 1e-5));
}
