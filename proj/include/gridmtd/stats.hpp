#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include "gridmtd/errors.hpp"

namespace gridmtd {

namespace detail {

/// Regularized lower incomplete gamma P(a, x), series expansion.
/// Converges fast for x < a + 1.
inline double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < 500; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

/// Regularized upper incomplete gamma Q(a, x), Lentz continued fraction.
/// Converges fast for x > a + 1.
inline double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

} // namespace detail

/// Regularized lower incomplete gamma P(a, x) = γ(a, x) / Γ(a).
inline double gamma_p(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw NumericalError("gamma_p: invalid arguments");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return detail::gamma_p_series(a, x);
    return 1.0 - detail::gamma_q_cf(a, x);
}

/// Chi-square CDF with k degrees of freedom.
inline double chi_square_cdf(double x, int dof) {
    if (x <= 0.0) return 0.0;
    return gamma_p(0.5 * dof, 0.5 * x);
}

/// Chi-square quantile: smallest x with CDF(x) >= p. Bisection on a
/// bracket wide enough for any dof this toolkit meets; the detector
/// threshold calibration needs ~1e-12 accuracy, far below Monte Carlo
/// resolution.
inline double chi_square_quantile(double p, int dof) {
    if (!(p > 0.0 && p < 1.0) || dof < 1)
        throw NumericalError("chi_square_quantile: need 0 < p < 1 and dof >= 1");
    double lo = 0.0;
    double hi = dof + 20.0 * std::sqrt(2.0 * dof) + 50.0;
    while (chi_square_cdf(hi, dof) < p) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (chi_square_cdf(mid, dof) < p)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-13 * (1.0 + hi)) break;
    }
    return 0.5 * (lo + hi);
}

} // namespace gridmtd
