#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace obatalab::quad {

inline constexpr double kDefaultRelTol = 1e-12;

/// Adaptive 15-point Gauss-Kronrod on [a, b]; a > b integrates with reversed sign.
/// The interval is mapped onto [-1, 1] before calling Boost, whose recursion compares an
/// unscaled error estimate with a scaled tolerance and never terminates on short intervals.
template <class F>
double integrate(F&& f, double a, double b, double rel_tol = kDefaultRelTol) {
    if (a == b) return 0.0;
    if (a > b) return -integrate(f, b, a, rel_tol);
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    auto mapped = [&](double x) { return f(std::clamp(mid + half * x, a, b)); };
    double err = 0.0;
    return half * boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
                      mapped, -1.0, 1.0, 15, rel_tol, &err);
}

/// Clamped power: sin slightly below zero from rounding near pi counts as zero.
inline double clamped_pow(double base, double exponent) {
    return std::pow(std::max(base, 0.0), exponent);
}

namespace detail {

/// Integral of sin^p over [0, x] for x in [0, pi/2]. The integrand behaves like t^p at 0,
/// which defeats Gauss-Kronrod for fractional p, so tanh-sinh (or a series) is used.
inline double sin_power_from_zero(double p, double x, double rel_tol) {
    if (x <= 0.0) return 0.0;
    if (x < 1e-4) {
        // sin^p t = t^p (1 - p t^2 / 6 + p (5p - 2) t^4 / 360 + ...)
        const double x2 = x * x;
        return std::pow(x, p + 1.0) *
               (1.0 / (p + 1.0) - p * x2 / (6.0 * (p + 3.0)) + p * (5.0 * p - 2.0) * x2 * x2 / (360.0 * (p + 5.0)));
    }
    thread_local boost::math::quadrature::tanh_sinh<double> ts;
    auto f = [p](double t) { return clamped_pow(std::sin(t), p); };
    return ts.integrate(f, 0.0, x, rel_tol);
}

/// Integral of sin^p over [lo, hi] inside [0, pi/2].
inline double sin_power_half(double p, double lo, double hi, double rel_tol) {
    if (hi <= lo) return 0.0;
    if (p == std::floor(p) || lo >= 0.01 * (hi - lo)) {
        return integrate([p](double t) { return clamped_pow(std::sin(t), p); }, lo, hi, rel_tol);
    }
    return sin_power_from_zero(p, hi, rel_tol) - sin_power_from_zero(p, lo, rel_tol);
}

}  // namespace detail

/// Integral of sin(t)^p over [a, b] intersected with [0, pi], p >= 0.
inline double sin_power_integral(double p, double a, double b, double rel_tol = kDefaultRelTol) {
    constexpr double pi = 3.141592653589793238462643383279502884;
    constexpr double half_pi = 0.5 * pi;
    a = std::max(a, 0.0);
    b = std::min(b, pi);
    if (b <= a) return 0.0;
    double s = 0.0;
    if (a < half_pi) s += detail::sin_power_half(p, a, std::min(b, half_pi), rel_tol);
    // reflect the part beyond pi/2 onto [0, pi/2]
    if (b > half_pi) s += detail::sin_power_half(p, pi - b, pi - std::max(a, half_pi), rel_tol);
    return s;
}

/// Integral of cos(t)^p over [a, b] intersected with [-pi/2, pi/2], p >= 0.
inline double cos_power_integral(double p, double a, double b, double rel_tol = kDefaultRelTol) {
    constexpr double half_pi = 1.570796326794896619231321691639751442;
    if (a >= 0.0) return sin_power_integral(p, half_pi - std::min(b, half_pi), half_pi - a, rel_tol);
    if (b <= 0.0) return cos_power_integral(p, -b, -a, rel_tol);
    return cos_power_integral(p, 0.0, -a, rel_tol) + cos_power_integral(p, 0.0, b, rel_tol);
}

}  // namespace obatalab::quad
