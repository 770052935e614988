#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "partrans/expr.hpp"
#include "test_util.hpp"

using partrans::EvalError;
using partrans::Jet;
using partrans::ParseError;
using partrans::ScalarField;

TEST_CASE("parse and evaluate basic expressions") {
    CHECK(ScalarField::parse("1+2*3").eval(0, 0) == 7.0);
    CHECK(ScalarField::parse("2-3-4").eval(0, 0) == -5.0);
    CHECK(ScalarField::parse("2/4/2").eval(0, 0) == 0.25);
    CHECK(ScalarField::parse("x*y + y").eval(2, 3) == 9.0);
    CHECK(ScalarField::parse("-x^2").eval(3, 0) == -9.0);
    CHECK(ScalarField::parse("(1+x)^3").eval(1, 0) == 8.0);
    CHECK(ScalarField::parse("x^-2").eval(2, 0) == 0.25);
    CHECK(testutil::close_rel(ScalarField::parse("x^2^3").eval(1.1, 0),
                              std::pow(1.1, 8), 1e-14));
    CHECK(testutil::close_rel(ScalarField::parse("exp(x)*sin(y)").eval(0.5, 0.25),
                              std::exp(0.5) * std::sin(0.25), 1e-15));
    CHECK(testutil::close_rel(ScalarField::parse("atan(x)+log(y)+sqrt(x)").eval(2, 3),
                              std::atan(2.0) + std::log(3.0) + std::sqrt(2.0),
                              1e-15));
    CHECK(ScalarField::parse("x * -y").eval(2, 3) == -6.0);
    CHECK(ScalarField::parse("  x + 1 ").eval(1, 0) == 2.0);
    CHECK(ScalarField::parse("1e-3 + x").eval(0, 0) == 1e-3);
}

TEST_CASE("named parameters resolve at evaluation time") {
    ScalarField f = ScalarField::parse("a*x + b");
    CHECK(f.eval(5, 0, {{"a", 2.0}, {"b", 3.0}}) == 13.0);
    CHECK(f.eval(5, 0, {{"a", -1.0}, {"b", 0.5}}) == -4.5);

    try {
        f.eval(1, 0, {{"a", 2.0}});
        FAIL("expected unresolved parameter error");
    } catch (const EvalError& e) {
        CHECK(e.offset() == 6); // offset of 'b'
    }
}

TEST_CASE("parse errors carry byte offsets") {
    auto offset_of = [](const std::string& src) -> std::size_t {
        try {
            ScalarField::parse(src);
        } catch (const ParseError& e) {
            return e.offset();
        }
        return static_cast<std::size_t>(-2);
    };

    // "exp(x*+y)": '*' has no right operand; the parser trips on '+'.
    CHECK(offset_of("exp(x*+y)") == 6);
    CHECK(offset_of("(x+y") == 4);
    CHECK(offset_of("x^2.5") == 2);
    CHECK(offset_of("x^y") == 2);
    CHECK(offset_of("foo(x)") == 0);
    CHECK(offset_of("x$y") == 1);
    CHECK(offset_of("x+") == 2);
    CHECK(offset_of("x y") == 2);
    CHECK(offset_of("sin x") == 4);
}

TEST_CASE("domain errors carry the failing node's offset") {
    auto eval_offset = [](const std::string& src, double x, double y) {
        try {
            ScalarField::parse(src).eval(x, y);
        } catch (const EvalError& e) {
            return e.offset();
        }
        return static_cast<std::size_t>(-2);
    };

    CHECK(eval_offset("log(x)", -1, 0) == 0);
    CHECK(eval_offset("log(x)", 0, 0) == 0);
    CHECK(eval_offset("1+sqrt(y)", 0, -2) == 2);
    CHECK(eval_offset("1/x", 0, 0) == 1);
    CHECK(eval_offset("x^-1", 0, 0) == 1);
    CHECK(ScalarField::parse("x^0").eval(0, 0) == 1.0);
}

TEST_CASE("jets match hand-derived partials") {
    // 4/(1+x^2+y^2)^2 at (1,0): value 1, d/dx = -16x/(1+x^2+y^2)^3 = -2.
    ScalarField f = ScalarField::parse("4/(1+x^2+y^2)^2");
    Jet j = f.eval_jet(1, 0, 1);
    CHECK(testutil::close_abs(j.value(), 1.0, 1e-14));
    CHECK(testutil::close_abs(j.partial(1, 0), -2.0, 1e-13));
    CHECK(testutil::close_abs(j.partial(0, 1), 0.0, 1e-13));

    // e^{xy} sin y: all partials to order 2, closed forms derived by hand.
    double x = 0.7, y = -0.3;
    ScalarField g = ScalarField::parse("exp(x*y)*sin(y)");
    Jet jg = g.eval_jet(x, y, 2);
    double E = std::exp(x * y), S = std::sin(y), C = std::cos(y);
    CHECK(testutil::close_rel(jg.value(), E * S, 1e-14));
    CHECK(testutil::close_rel(jg.partial(1, 0), y * E * S, 1e-14));
    CHECK(testutil::close_rel(jg.partial(0, 1), x * E * S + E * C, 1e-14));
    CHECK(testutil::close_rel(jg.partial(2, 0), y * y * E * S, 1e-14));
    CHECK(testutil::close_rel(jg.partial(1, 1), E * S + x * y * E * S + y * E * C,
                              1e-14));
    CHECK(testutil::close_rel(jg.partial(0, 2),
                              x * x * E * S + 2 * x * E * C - E * S, 1e-14));
}

TEST_CASE("jets are exact on polynomials up to order 4") {
    ScalarField f = ScalarField::parse("(x+2*y)^4");
    Jet j = f.eval_jet(0.3, -0.2, 4);
    double u = 0.3 + 2 * (-0.2);
    CHECK(testutil::close_rel(j.value(), u * u * u * u, 1e-13));
    CHECK(testutil::close_rel(j.partial(1, 0), 4 * u * u * u, 1e-13));
    CHECK(testutil::close_rel(j.partial(0, 1), 8 * u * u * u, 1e-13));
    CHECK(testutil::close_rel(j.partial(2, 0), 12 * u * u, 1e-13));
    CHECK(testutil::close_rel(j.partial(1, 1), 24 * u * u, 1e-13));
    CHECK(testutil::close_abs(j.partial(2, 2), 96.0, 1e-11));
    CHECK(testutil::close_abs(j.partial(0, 4), 384.0, 1e-11));
    CHECK(testutil::close_abs(j.partial(3, 1), 48.0, 1e-11));
}

TEST_CASE("high-order jets of transcendental functions match closed forms") {
    // exp(x)sin(y): d^{a+b}/dx^a dy^b = e^x sin^{(b)}(y).
    ScalarField f = ScalarField::parse("exp(x)*sin(y)");
    double x = 0.4, y = 1.1;
    Jet j = f.eval_jet(x, y, 4);
    double E = std::exp(x), S = std::sin(y), C = std::cos(y);
    double dS[5] = {S, C, -S, -C, S};
    for (int a = 0; a <= 4; ++a)
        for (int b = 0; a + b <= 4; ++b)
            CHECK(testutil::close_rel(j.partial(a, b), E * dS[b], 1e-12));

    // log(x+2) on the x-axis: d^k/dx^k = (-1)^{k-1} (k-1)! / (x+2)^k.
    Jet jl = ScalarField::parse("log(x+2)").eval_jet(0, 0, 4);
    CHECK(testutil::close_rel(jl.value(), std::log(2.0), 1e-14));
    CHECK(testutil::close_rel(jl.partial(1, 0), 0.5, 1e-14));
    CHECK(testutil::close_rel(jl.partial(2, 0), -0.25, 1e-14));
    CHECK(testutil::close_rel(jl.partial(3, 0), 0.25, 1e-14));
    CHECK(testutil::close_rel(jl.partial(4, 0), -0.375, 1e-13));

    // atan(x): third derivative (6x^2-2)/(1+x^2)^3 at x = 0.5.
    Jet ja = ScalarField::parse("atan(x)").eval_jet(0.5, 0, 3);
    CHECK(testutil::close_rel(ja.partial(3, 0), -0.256, 1e-13));

    // sqrt(1+x^2) at x=1: f' = x/sqrt(1+x^2), f'' = 1/(1+x^2)^{3/2}.
    Jet js = ScalarField::parse("sqrt(1+x^2)").eval_jet(1, 0, 2);
    CHECK(testutil::close_rel(js.partial(1, 0), 1.0 / std::sqrt(2.0), 1e-14));
    CHECK(testutil::close_rel(js.partial(2, 0), std::pow(2.0, -1.5), 1e-13));
}

TEST_CASE("jets agree with central finite differences on random fields") {
    testutil::FieldGen gen(20260817u);
    const double h = 1e-4;
    int tested = 0;
    for (int iter = 0; iter < 50; ++iter) {
        ScalarField f = gen.field(3);
        double x = gen.uniform(-1.0, 1.0);
        double y = gen.uniform(-1.0, 1.0);
        Jet j = f.eval_jet(x, y, 2);
        auto F = [&](double a, double b) { return f.eval(a, b); };
        double fx = (F(x + h, y) - F(x - h, y)) / (2 * h);
        double fy = (F(x, y + h) - F(x, y - h)) / (2 * h);
        double fxx = (F(x + h, y) - 2 * F(x, y) + F(x - h, y)) / (h * h);
        double fyy = (F(x, y + h) - 2 * F(x, y) + F(x, y - h)) / (h * h);
        double fxy = (F(x + h, y + h) - F(x + h, y - h) - F(x - h, y + h) +
                      F(x - h, y - h)) /
                     (4 * h * h);
        auto tol = [](double d) { return 1e-5 * (1.0 + std::fabs(d)); };
        REQUIRE(testutil::close_abs(j.partial(1, 0), fx, tol(fx)));
        REQUIRE(testutil::close_abs(j.partial(0, 1), fy, tol(fy)));
        REQUIRE(testutil::close_abs(j.partial(2, 0), fxx, tol(fxx)));
        REQUIRE(testutil::close_abs(j.partial(0, 2), fyy, tol(fyy)));
        REQUIRE(testutil::close_abs(j.partial(1, 1), fxy, tol(fxy)));
        ++tested;
    }
    CHECK(tested == 50);
}

TEST_CASE("third and fourth order jets cross-check against wide-step Richardson FD") {
    // Richardson-extrapolated central differences at h=0.05 for d3/dx3 and
    // d4/dx4 on a transcendental field; truncation is O(h^4) after
    // extrapolation, well inside the tolerance.
    ScalarField f = ScalarField::parse("exp(0.7*sin(x)) + cos(x*y)");
    double x = 0.3, y = 0.8;
    auto F = [&](double a) { return f.eval(a, y); };
    auto d3 = [&](double h) {
        return (F(x + 2 * h) - 2 * F(x + h) + 2 * F(x - h) - F(x - 2 * h)) /
               (2 * h * h * h);
    };
    auto d4 = [&](double h) {
        return (F(x + 2 * h) - 4 * F(x + h) + 6 * F(x) - 4 * F(x - h) +
                F(x - 2 * h)) /
               (h * h * h * h);
    };
    double h = 0.05;
    double r3 = (4.0 * d3(h / 2) - d3(h)) / 3.0;
    double r4 = (4.0 * d4(h / 2) - d4(h)) / 3.0;
    Jet j = f.eval_jet(x, y, 4);
    CHECK(testutil::close_abs(j.partial(3, 0), r3, 1e-5 * (1 + std::fabs(r3))));
    CHECK(testutil::close_abs(j.partial(4, 0), r4, 1e-4 * (1 + std::fabs(r4))));
}

TEST_CASE("jet evaluation is linear in the field") {
    testutil::FieldGen gen(777u);
    for (int iter = 0; iter < 20; ++iter) {
        ScalarField f = gen.field(2);
        ScalarField g = gen.field(2);
        double a = gen.uniform(-2, 2), b = gen.uniform(-2, 2);
        ScalarField lin = ScalarField::constant(a) * f + ScalarField::constant(b) * g;
        double x = gen.uniform(-1, 1), y = gen.uniform(-1, 1);
        Jet jf = f.eval_jet(x, y, 3);
        Jet jg = g.eval_jet(x, y, 3);
        Jet jl = lin.eval_jet(x, y, 3);
        for (int i = 0; i <= 3; ++i)
            for (int k = 0; i + k <= 3; ++k) {
                double want = a * jf.partial(i, k) + b * jg.partial(i, k);
                REQUIRE(testutil::close_abs(jl.partial(i, k), want,
                                            1e-12 * (1 + std::fabs(want))));
            }
    }
}

TEST_CASE("derivative wrapper fields evaluate shifted jets") {
    ScalarField f = ScalarField::parse("exp(x)*sin(y)");
    ScalarField fx = f.derivative(1, 0);
    ScalarField fxy = f.derivative(1, 1);
    double x = 0.2, y = 0.9;
    CHECK(testutil::close_rel(fx.eval(x, y), std::exp(x) * std::sin(y), 1e-13));
    CHECK(testutil::close_rel(fxy.eval(x, y), std::exp(x) * std::cos(y), 1e-13));
    Jet j = fx.eval_jet(x, y, 2);
    CHECK(testutil::close_rel(j.partial(0, 2), -std::exp(x) * std::sin(y), 1e-12));

    CHECK_THROWS_AS(f.derivative(2, 2).eval_jet(0, 0, 1), EvalError);
    CHECK_THROWS_AS(f.eval_jet(0, 0, 5), EvalError);
    CHECK_THROWS_AS(f.eval_jet(0, 0, 1).partial(2, 0), EvalError);
}
