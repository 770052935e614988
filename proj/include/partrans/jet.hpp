#pragma once

// Truncated bivariate Taylor arithmetic: the evaluation engine behind exact
// partial derivatives up to total order 4. A Jet stores normalized Taylor
// coefficients c[i][j] = (d^{i+j} f / dx^i dy^j) / (i! j!) for i+j <= order.
// All derivative propagation happens through these jets; no finite
// differencing is involved anywhere in this header.

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace partrans {

inline constexpr int kJetMaxOrder = 4;

// Raised when evaluation hits a point outside a function's domain (log of a
// non-positive number, division by zero, sqrt of a negative number, ...).
// `offset` is the byte offset of the offending node in the source expression,
// or npos for programmatically built fields.
class EvalError : public std::runtime_error {
public:
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    explicit EvalError(const std::string& what, std::size_t offset = npos)
        : std::runtime_error(what), offset_(offset) {}

    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

struct Jet {
    int order = 0;                               // truncation order, 0..4
    std::array<std::array<double, kJetMaxOrder + 1>, kJetMaxOrder + 1> c{};

    static Jet constant(double v, int order) {
        check_order(order);
        Jet j;
        j.order = order;
        j.c[0][0] = v;
        return j;
    }

    // Coordinate jets: seed value plus a unit first derivative.
    static Jet var_x(double v, int order) {
        Jet j = constant(v, order);
        if (order >= 1) j.c[1][0] = 1.0;
        return j;
    }

    static Jet var_y(double v, int order) {
        Jet j = constant(v, order);
        if (order >= 1) j.c[0][1] = 1.0;
        return j;
    }

    double value() const { return c[0][0]; }

    // Raw partial d^{i+j} f / dx^i dy^j.
    double partial(int i, int j) const {
        if (i < 0 || j < 0 || i + j > order)
            throw EvalError("jet partial (" + std::to_string(i) + "," +
                            std::to_string(j) + ") exceeds order " +
                            std::to_string(order));
        return c[i][j] * factorial(i) * factorial(j);
    }

    static void check_order(int order) {
        if (order < 0 || order > kJetMaxOrder)
            throw EvalError("jet order " + std::to_string(order) +
                            " outside supported range [0," +
                            std::to_string(kJetMaxOrder) + "]");
    }

    static double factorial(int n) {
        static const double f[] = {1, 1, 2, 6, 24};
        return f[n];
    }
};

inline Jet operator+(const Jet& a, const Jet& b) {
    Jet r = a;
    for (int i = 0; i <= r.order; ++i)
        for (int j = 0; i + j <= r.order; ++j) r.c[i][j] += b.c[i][j];
    return r;
}

inline Jet operator-(const Jet& a, const Jet& b) {
    Jet r = a;
    for (int i = 0; i <= r.order; ++i)
        for (int j = 0; i + j <= r.order; ++j) r.c[i][j] -= b.c[i][j];
    return r;
}

inline Jet operator-(const Jet& a) {
    Jet r = a;
    for (int i = 0; i <= r.order; ++i)
        for (int j = 0; i + j <= r.order; ++j) r.c[i][j] = -r.c[i][j];
    return r;
}

inline Jet operator*(const Jet& a, const Jet& b) {
    Jet r;
    r.order = a.order;
    for (int i = 0; i <= r.order; ++i)
        for (int j = 0; i + j <= r.order; ++j) {
            double s = 0.0;
            for (int k = 0; k <= i; ++k)
                for (int l = 0; l <= j; ++l) s += a.c[k][l] * b.c[i - k][j - l];
            r.c[i][j] = s;
        }
    return r;
}

inline Jet operator*(double s, const Jet& a) {
    Jet r = a;
    for (int i = 0; i <= r.order; ++i)
        for (int j = 0; i + j <= r.order; ++j) r.c[i][j] *= s;
    return r;
}

// Division by power-series inversion, filled in increasing total degree so
// every term on the right-hand side is already known.
inline Jet operator/(const Jet& a, const Jet& b) {
    if (b.c[0][0] == 0.0) throw EvalError("division by zero");
    Jet r;
    r.order = a.order;
    for (int d = 0; d <= r.order; ++d)
        for (int i = 0; i <= d; ++i) {
            int j = d - i;
            double s = a.c[i][j];
            for (int k = 0; k <= i; ++k)
                for (int l = 0; l <= j; ++l) {
                    if (k == i && l == j) continue;
                    s -= r.c[k][l] * b.c[i - k][j - l];
                }
            r.c[i][j] = s / b.c[0][0];
        }
    return r;
}

namespace detail {

// g(u) for univariate g with raw derivative values g0..g4 at u.value().
// Evaluates the truncated series sum_k (gk/k!) (u - u0)^k by Horner.
inline Jet compose_univariate(const Jet& u, const std::array<double, 5>& g) {
    Jet w = u;
    w.c[0][0] = 0.0;
    Jet r = Jet::constant(g[u.order] / Jet::factorial(u.order), u.order);
    for (int k = u.order - 1; k >= 0; --k) {
        r = r * w;
        r.c[0][0] += g[k] / Jet::factorial(k);
    }
    return r;
}

} // namespace detail

inline Jet jet_exp(const Jet& u) {
    double e = std::exp(u.value());
    return detail::compose_univariate(u, {e, e, e, e, e});
}

inline Jet jet_log(const Jet& u, std::size_t offset = EvalError::npos) {
    double v = u.value();
    if (!(v > 0.0)) throw EvalError("log of a non-positive number", offset);
    return detail::compose_univariate(
        u, {std::log(v), 1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v),
            -6.0 / (v * v * v * v)});
}

inline Jet jet_sin(const Jet& u) {
    double s = std::sin(u.value()), c = std::cos(u.value());
    return detail::compose_univariate(u, {s, c, -s, -c, s});
}

inline Jet jet_cos(const Jet& u) {
    double s = std::sin(u.value()), c = std::cos(u.value());
    return detail::compose_univariate(u, {c, -s, -c, s, c});
}

inline Jet jet_sqrt(const Jet& u, std::size_t offset = EvalError::npos) {
    double v = u.value();
    if (v < 0.0) throw EvalError("sqrt of a negative number", offset);
    if (v == 0.0) {
        if (u.order == 0) return Jet::constant(0.0, 0);
        throw EvalError("sqrt derivative at zero", offset);
    }
    double s = std::sqrt(v);
    return detail::compose_univariate(
        u, {s, 0.5 / s, -0.25 / (v * s), 0.375 / (v * v * s),
            -0.9375 / (v * v * v * s)});
}

inline Jet jet_atan(const Jet& u) {
    double v = u.value();
    double d = 1.0 + v * v;
    return detail::compose_univariate(
        u, {std::atan(v), 1.0 / d, -2.0 * v / (d * d),
            (6.0 * v * v - 2.0) / (d * d * d),
            24.0 * v * (1.0 - v * v) / (d * d * d * d)});
}

inline Jet jet_pow_int(const Jet& u, long long n,
                       std::size_t offset = EvalError::npos) {
    if (n < 0) {
        if (u.value() == 0.0)
            throw EvalError("zero raised to a negative power", offset);
        return Jet::constant(1.0, u.order) / jet_pow_int(u, -n, offset);
    }
    Jet r = Jet::constant(1.0, u.order);
    Jet base = u;
    while (n > 0) {
        if (n & 1) r = r * base;
        n >>= 1;
        if (n > 0) base = base * base;
    }
    return r;
}

} // namespace partrans
