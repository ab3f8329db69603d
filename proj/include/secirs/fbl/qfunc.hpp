// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <stdexcept>

namespace secirs::fbl {

/// Standard Gaussian tail probability Q(x) = 0.5 erfc(x / sqrt(2)).
inline double qfunc(double x) { return 0.5 * std::erfc(x * 0.7071067811865475244); }

namespace detail {
/// Acklam-style rational approximation of the standard normal quantile,
/// used only as the Newton starting point.
inline double norm_quantile_approx(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - plow) {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5, r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}
}  // namespace detail

/// Inverse Gaussian tail: returns x with Q(x) = p. Rational initial guess
/// refined by Newton iterations on the complementary error function; the
/// fixed point satisfies |Q(x) - p| at machine level.
inline double qfunc_inv(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("qfunc_inv: probability must lie in (0, 1)");
    if (p == 0.5) return 0.0;
    double x = -detail::norm_quantile_approx(p);  // Q(x) = 1 - CDF(x)
    for (int it = 0; it < 8; ++it) {
        const double f = qfunc(x) - p;
        if (f == 0.0) break;
        const double pdf = 0.3989422804014326779 * std::exp(-0.5 * x * x);
        if (pdf <= 0.0) break;
        const double step = f / pdf;  // Q'(x) = -pdf
        x += step;
        if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(x))) break;
    }
    return x;
}

}  // namespace secirs::fbl
