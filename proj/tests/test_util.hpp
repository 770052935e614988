#pragma once

// Shared helpers for the suite: deterministic RNG, approximate comparison,
// and a generator of random scalar fields that are smooth on [-2,2]^2 with
// moderate derivative magnitudes (log/sqrt/division only ever see arguments
// bounded away from zero).

#include <cmath>
#include <random>

#include "partrans/expr.hpp"

namespace testutil {

inline bool close_abs(double a, double b, double tol) {
    return std::fabs(a - b) <= tol;
}

inline bool close_rel(double a, double b, double tol) {
    return std::fabs(a - b) <= tol * std::max(1.0, std::max(std::fabs(a), std::fabs(b)));
}

class FieldGen {
public:
    explicit FieldGen(std::uint64_t seed) : rng_(seed) {}

    partrans::ScalarField field(int depth = 3) { return expr(depth); }

    // Positive field bounded away from zero, for safe log/sqrt/div arguments.
    partrans::ScalarField positive(int depth = 2) {
        using partrans::ScalarField;
        return ScalarField::constant(1.5) +
               ScalarField::constant(0.9) * partrans::sf_sin(expr(depth));
    }

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(rng_);
    }

    int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }

    std::mt19937_64& rng() { return rng_; }

private:
    partrans::ScalarField expr(int depth) {
        using partrans::ScalarField;
        if (depth <= 0) {
            switch (pick(3)) {
                case 0: return ScalarField::x();
                case 1: return ScalarField::y();
                default: return ScalarField::constant(uniform(-2.0, 2.0));
            }
        }
        switch (pick(9)) {
            case 0: return expr(depth - 1) + expr(depth - 1);
            case 1: return expr(depth - 1) - expr(depth - 1);
            case 2: return ScalarField::constant(uniform(-1.0, 1.0)) * expr(depth - 1);
            case 3: return expr(depth - 1) * expr(depth - 1);
            case 4: return partrans::sf_sin(expr(depth - 1));
            case 5: return partrans::sf_cos(expr(depth - 1));
            case 6: return partrans::sf_atan(expr(depth - 1));
            case 7:
                switch (pick(3)) {
                    case 0: return partrans::sf_log(positive(depth - 1));
                    case 1: return partrans::sf_sqrt(positive(depth - 1));
                    default:
                        return expr(depth - 1) / positive(depth - 1);
                }
            default:
                return partrans::sf_exp(ScalarField::constant(0.7) *
                                        partrans::sf_sin(expr(depth - 1)));
        }
    }

    std::mt19937_64 rng_;
};

} // namespace testutil
