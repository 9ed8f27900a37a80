#pragma once

// Poisson pmf / tail helpers shared by the exact recursion, the start-look
// probabilities and the solvers. Tails are regularized incomplete gamma
// integrals; pmf rows are built by upward recursion so every summand stays
// nonnegative.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace maxsprt {

namespace detail {

inline double lgamma_pos(double x) {
    int sign = 0;
    return ::lgamma_r(x, &sign);
}

// Regularized lower incomplete gamma P(a, x) by series; valid for x < a + 1.
inline double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 1000; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (del < sum * 1e-17) break;
    }
    return sum * std::exp(-x + a * std::log(x) - lgamma_pos(a));
}

// Regularized upper incomplete gamma Q(a, x) by Lentz continued fraction;
// valid for x >= a + 1.
inline double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 1000; ++i) {
        double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-17) break;
    }
    return std::exp(-x + a * std::log(x) - lgamma_pos(a)) * h;
}

} // namespace detail

// P(Poisson(x) = k)
inline double poisson_pmf(std::int64_t k, double x) {
    if (!(x >= 0.0) || !std::isfinite(x))
        throw std::domain_error("poisson_pmf: mean must be finite and nonnegative");
    if (k < 0) return 0.0;
    if (x == 0.0) return k == 0 ? 1.0 : 0.0;
    double lp = static_cast<double>(k) * std::log(x) - x -
                detail::lgamma_pos(static_cast<double>(k) + 1.0);
    return lp > -745.0 ? std::exp(lp) : 0.0;
}

// P(Poisson(x) >= m), equivalently P(Gamma(m, 1) <= x).
inline double poisson_tail_ge(std::int64_t m, double x) {
    if (!(x >= 0.0) || !std::isfinite(x))
        throw std::domain_error("poisson_tail_ge: mean must be finite and nonnegative");
    if (m <= 0) return 1.0;
    if (x == 0.0) return 0.0;
    double a = static_cast<double>(m);
    if (x < a + 1.0) return detail::gamma_p_series(a, x);
    return 1.0 - detail::gamma_q_cf(a, x);
}

// Fills p with P(Poisson(x) = k) for k = 0..kmax and returns the last index
// whose mass exceeds a negligibility floor (-1 if the whole row is
// negligible). The dropped tail is below 1e-22 per term.
inline std::int64_t poisson_pmf_row(std::vector<double>& p, std::int64_t kmax, double x) {
    p.assign(static_cast<std::size_t>(kmax + 1), 0.0);
    if (kmax < 0) return -1;
    if (x < 680.0) {
        double v = std::exp(-x);
        for (std::int64_t k = 0; k <= kmax; ++k) {
            p[static_cast<std::size_t>(k)] = v;
            v *= x / static_cast<double>(k + 1);
        }
    } else {
        for (std::int64_t k = 0; k <= kmax; ++k)
            p[static_cast<std::size_t>(k)] = poisson_pmf(k, x);
    }
    std::int64_t hi = kmax;
    while (hi >= 0 && p[static_cast<std::size_t>(hi)] < 1e-22 &&
           static_cast<double>(hi) > x)
        --hi;
    return hi;
}

} // namespace maxsprt
