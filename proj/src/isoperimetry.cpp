#include "obatalab/isoperimetry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "obatalab/core_measure.hpp"
#include "obatalab/errors.hpp"
#include "obatalab/quadrature.hpp"

namespace obatalab::iso {

namespace {

constexpr double kPi = measure::kPi;

void validate(double N, double b, double v, double D) {
    if (!(N > 1.0)) throw ParameterDomainError("dimension parameter N must exceed 1");
    if (!(D > 0.0 && D <= kPi)) throw ParameterDomainError("diameter must lie in (0, pi]");
    if (!(v >= 0.0 && v <= 1.0)) throw ParameterDomainError("volume fraction must lie in [0, 1]");
    if (!(b >= 0.0 && b <= kPi - D + 1e-15)) throw ParameterDomainError("offset b must lie in [0, pi - D]");
}

double sin_pow(double N, double t) {
    return quad::clamped_pow(std::sin(t), N - 1.0);
}

double sin_mass(double N, double a, double b) {
    return quad::sin_power_integral(N - 1.0, a, std::min(b, kPi));
}

double golden_min(double N, double v, double D, double lo, double hi, std::size_t& evals, double& best_b) {
    const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double x1 = b - ratio * (b - a);
    double x2 = a + ratio * (b - a);
    double f1 = g_eval(N, x1, v, D);
    double f2 = g_eval(N, x2, v, D);
    evals += 2;
    while (b - a > 1e-9) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = g_eval(N, x1, v, D);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = g_eval(N, x2, v, D);
        }
        ++evals;
    }
    if (f1 <= f2) {
        best_b = x1;
        return f1;
    }
    best_b = x2;
    return f2;
}

}  // namespace

double solve_R(double N, double b, double v, double D) {
    validate(N, b, v, D);
    const double top = std::min(b + D, kPi);
    if (v == 0.0) return b;
    if (v == 1.0) return top;
    const double total = sin_mass(N, b, top);
    const double target = v * total;
    const double tol = 1e-12 * target;
    double lo = b, hi = top;
    double F_lo = 0.0;
    // bisection with incremental integrals to a coarse bracket
    for (int it = 0; it < 30; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double F_mid = F_lo + sin_mass(N, lo, mid);
        if (F_mid < target) {
            lo = mid;
            F_lo = F_mid;
        } else {
            hi = mid;
        }
    }
    // safeguarded Newton polish on a directly integrated residual
    double R = 0.5 * (lo + hi);
    for (int it = 0; it < 50; ++it) {
        const double F = sin_mass(N, b, R);
        const double res = F - target;
        if (std::abs(res) <= tol) break;
        if (res < 0.0) lo = R;
        else hi = R;
        const double slope = sin_pow(N, R);
        double next = slope > 0.0 ? R - res / slope : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (next == R) break;
        R = next;
    }
    return R;
}

double g_eval(double N, double b, double v, double D) {
    validate(N, b, v, D);
    const double R = solve_R(N, b, v, D);
    return sin_pow(N, R) / sin_mass(N, b, b + D);
}

ProfileResult profile(const ProfileQuery& q) {
    validate(q.N, 0.0, q.v, q.D);
    if (!(q.v > 0.0 && q.v < 1.0)) throw ParameterDomainError("profile needs 0 < v < 1");
    ProfileResult out;
    const double span = kPi - q.D;
    if (span <= 0.0) {
        out.value = g_eval(q.N, 0.0, q.v, q.D);
        out.argmin_b = 0.0;
        out.R_at_argmin = solve_R(q.N, 0.0, q.v, q.D);
        out.iterations = 1;
        return out;
    }
    constexpr std::size_t kScan = 129;
    std::vector<double> scan(kScan);
    std::size_t best = 0;
    for (std::size_t j = 0; j < kScan; ++j) {
        scan[j] = g_eval(q.N, span * static_cast<double>(j) / (kScan - 1), q.v, q.D);
        if (scan[j] < scan[best]) best = j;
    }
    std::size_t evals = kScan;
    const double lo = span * static_cast<double>(best == 0 ? 0 : best - 1) / (kScan - 1);
    const double hi = span * static_cast<double>(std::min(best + 1, kScan - 1)) / (kScan - 1);
    double b_star = 0.0;
    const double refined = golden_min(q.N, q.v, q.D, lo, hi, evals, b_star);
    out.value = scan[best];
    out.argmin_b = span * static_cast<double>(best) / (kScan - 1);
    if (refined < out.value) {
        out.value = refined;
        out.argmin_b = b_star;
    }
    out.R_at_argmin = solve_R(q.N, out.argmin_b, q.v, q.D);
    out.iterations = evals;
    return out;
}

OdeResidualReport profile_ode_residual(double N, std::span<const double> v_grid, double step) {
    if (!(N > 1.0)) throw ParameterDomainError("dimension parameter N must exceed 1");
    if (!(step > 0.0 && step < 0.1)) throw ParameterDomainError("finite-difference step must lie in (0, 0.1)");
    OdeResidualReport rep;
    rep.band = std::max(2.0 * step, 0.01);
    const double p = N / (N - 1.0);
    const double q = (N - 2.0) / (N - 1.0);
    auto I = [&](double v) { return g_eval(N, 0.0, v, kPi); };
    for (double v : v_grid) {
        if (!(v > rep.band && v < 1.0 - rep.band)) {
            ++rep.excluded;
            continue;
        }
        const double Im = I(v - step), I0 = I(v), Ip = I(v + step);
        const double second = (std::pow(Ip, p) - 2.0 * std::pow(I0, p) + std::pow(Im, p)) / (step * step);
        const double res = std::abs(second * std::pow(I0, q) + N) / N;
        rep.residuals.push_back(res);
        rep.evaluated.push_back(v);
        rep.max_residual = std::max(rep.max_residual, res);
    }
    return rep;
}

namespace {

struct BbgParts {
    double inner;  // int_0^{D/2} cos^{N-1}
    double outer;  // int_{D/2}^{pi/2} cos^{N-1}
};

BbgParts bbg_parts(double N, double D) {
    if (!(N > 1.0)) throw ParameterDomainError("dimension parameter N must exceed 1");
    if (!(D > 0.0 && D <= kPi)) throw ParameterDomainError("diameter must lie in (0, pi]");
    const double half = 0.5 * D;
    const double inner = quad::cos_power_integral(N - 1.0, 0.0, half);
    // substitute s = pi/2 - t so the short outer piece is integrated near s = 0
    const double eps_half = 0.5 * (kPi - D);
    const double outer = eps_half > 0.0 ? quad::sin_power_integral(N - 1.0, 0.0, eps_half) : 0.0;
    return {inner, outer};
}

}  // namespace

double bbg_constant(double N, double D) {
    const auto [inner, outer] = bbg_parts(N, D);
    return std::exp(std::log1p(outer / inner) / N);
}

double bbg_constant_excess(double N, double D) {
    const auto [inner, outer] = bbg_parts(N, D);
    return std::expm1(2.0 / N * std::log1p(outer / inner));
}

double bbg_ratio_check(double N, double D, std::span<const double> v_grid) {
    if (v_grid.empty()) throw ParameterDomainError("volume grid is empty");
    const double C = bbg_constant(N, D);
    double worst = std::numeric_limits<double>::infinity();
    for (double v : v_grid) {
        const double ratio = profile({N, D, v}).value / profile({N, kPi, v}).value;
        worst = std::min(worst, ratio - C);
    }
    return worst;
}

double asymptotic_target(double N) {
    if (!(N > 1.0)) throw ParameterDomainError("dimension parameter N must exceed 1");
    return std::pow(2.0, N - 1.0) * N * N * quad::cos_power_integral(N - 1.0, 0.0, 0.5 * kPi);
}

AsymptoticReport asymptotic_constant(double N, std::span<const double> D_sweep) {
    if (D_sweep.size() < 2) throw ParameterDomainError("asymptotic sweep needs at least two diameters");
    AsymptoticReport rep;
    rep.target = asymptotic_target(N);
    double prev = -1.0;
    for (double D : D_sweep) {
        if (!(D > prev)) throw ParameterDomainError("diameter sweep must be increasing");
        if (!(D < kPi)) throw ParameterDomainError("diameter sweep must stay below pi");
        prev = D;
        const double eps = kPi - D;
        const auto [inner, outer] = bbg_parts(N, D);
        double log_excess;
        if (outer > 1e-280) {
            log_excess = std::log(std::expm1(2.0 / N * std::log1p(outer / inner)));
        } else {
            // leading term of int_0^{eps/2} sin^{N-1} once it underflows
            const double log_outer = N * std::log(0.5 * eps) - std::log(N);
            log_excess = std::log(2.0 / N) + log_outer - std::log(inner);
        }
        rep.eps.push_back(eps);
        rep.ratios.push_back(std::exp(N * std::log(eps) - log_excess));
    }
    const std::size_t k = rep.ratios.size();
    const double e1 = rep.eps[k - 2], e2 = rep.eps[k - 1];
    const double r1 = rep.ratios[k - 2], r2 = rep.ratios[k - 1];
    // remove the eps^2 term of ratio(eps) = L (1 + c eps^2 + ...)
    rep.limit = (r2 * e1 * e1 - r1 * e2 * e2) / (e1 * e1 - e2 * e2);
    return rep;
}

}  // namespace obatalab::iso
