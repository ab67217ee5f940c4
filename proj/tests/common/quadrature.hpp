#pragma once

#include <cmath>
#include <functional>
#include <numbers>

// Distribution functions by direct numerical integration of the densities,
// independent of the incomplete-beta code they check.
namespace advattrib::testdata {

namespace detail {

inline double simpson(const std::function<double(double)>& f, double a, double b, double fa,
                      double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double diff = left + right - whole;
    if (depth <= 0 || std::abs(diff) <= 15.0 * tol) {
        return left + right + diff / 15.0;
    }
    return simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
           simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson integral of f over [a, b].
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-14) {
    if (a == b) {
        return 0.0;
    }
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::simpson(f, a, b, fa, fm, fb, whole, tol, 60);
}

inline double t_density(double t, double df) {
    const double logc = std::lgamma((df + 1.0) / 2.0) - std::lgamma(df / 2.0) -
                        0.5 * std::log(df * std::numbers::pi);
    return std::exp(logc - (df + 1.0) / 2.0 * std::log1p(t * t / df));
}

/// P(T <= t) = 1/2 + integral of the density from 0 to t, split into unit
/// pieces so the adaptive rule sees a smooth integrand.
inline double t_cdf_quadrature(double t, double df) {
    const double x = std::abs(t);
    double area = 0.0;
    for (double lo = 0.0; lo < x; lo += 1.0) {
        area += integrate([df](double u) { return t_density(u, df); }, lo, std::min(lo + 1.0, x));
    }
    return t >= 0 ? 0.5 + area : 0.5 - area;
}

/// F density after the substitution x = u^2, which removes the x^(d1/2 - 1)
/// singularity at zero: P(F <= f) = integral over [0, sqrt(f)] of g(u) du.
inline double f_cdf_quadrature(double f, double d1, double d2) {
    const double logB = std::lgamma(d1 / 2.0) + std::lgamma(d2 / 2.0) - std::lgamma((d1 + d2) / 2.0);
    auto g = [=](double u) {
        if (u == 0.0) {
            return d1 == 1.0 ? 2.0 * std::exp(0.5 * std::log(d1 / d2) - logB) : 0.0;
        }
        const double x = u * u;
        const double logDensity = 0.5 * d1 * std::log(d1 / d2) + (0.5 * d1 - 1.0) * std::log(x) -
                                  0.5 * (d1 + d2) * std::log1p(d1 * x / d2) - logB;
        return 2.0 * u * std::exp(logDensity);
    };
    const double top = std::sqrt(f);
    double area = 0.0;
    const double step = 0.25;
    for (double lo = 0.0; lo < top; lo += step) {
        area += integrate(g, lo, std::min(lo + step, top));
    }
    return area;
}

}  // namespace advattrib::testdata
