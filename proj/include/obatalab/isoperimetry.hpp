#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace obatalab::iso {

struct ProfileQuery {
    double N = 2.0;
    double D = 3.141592653589793;
    double v = 0.5;
};

struct ProfileResult {
    double value = 0.0;
    double argmin_b = 0.0;
    double R_at_argmin = 0.0;
    std::size_t iterations = 0;  ///< number of g evaluations
};

/// R in [b, b+D] with int_b^R sin^{N-1} = v int_b^{b+D} sin^{N-1}.
double solve_R(double N, double b, double v, double D);
/// sin^{N-1}(R(b, v)) / int_b^{b+D} sin^{N-1}.
double g_eval(double N, double b, double v, double D);
/// Model profile I_{N,D}(v) = inf over b in [0, pi-D] of g(b, v).
ProfileResult profile(const ProfileQuery& q);

struct OdeResidualReport {
    double max_residual = 0.0;     ///< max |phi'' I^{(N-2)/(N-1)} + N| / N, phi = I^{N/(N-1)}
    std::vector<double> residuals;  ///< per evaluated v (excluded points omitted)
    std::vector<double> evaluated;  ///< v values actually evaluated
    std::size_t excluded = 0;       ///< v within the band next to 0 or 1
    double band = 0.0;
};

/// Finite-difference check of the ODE satisfied by the D = pi profile.
OdeResidualReport profile_ode_residual(double N, std::span<const double> v_grid, double step = 1e-3);

/// C_{N,D} = (int_0^{pi/2} cos^{N-1} / int_0^{D/2} cos^{N-1})^{1/N}.
double bbg_constant(double N, double D);
/// C_{N,D}^2 - 1, computed from int_{D/2}^{pi/2} cos^{N-1} without cancellation.
double bbg_constant_excess(double N, double D);

/// min over v of I_{N,D}(v) / I_{N,pi}(v) - C_{N,D}.
double bbg_ratio_check(double N, double D, std::span<const double> v_grid);

struct AsymptoticReport {
    std::vector<double> eps;     ///< pi - D per sweep point
    std::vector<double> ratios;  ///< (pi-D)^N / (C^2 - 1)
    double limit = 0.0;          ///< Richardson extrapolation from the last two points
    double target = 0.0;         ///< 2^{N-1} N^2 int_0^{pi/2} cos^{N-1}
};

/// Limit of (pi-D)^N / (C_{N,D}^2 - 1) along an increasing sweep of D < pi.
AsymptoticReport asymptotic_constant(double N, std::span<const double> D_sweep);
/// 2^{N-1} N^2 int_0^{pi/2} cos^{N-1}.
double asymptotic_target(double N);

}  // namespace obatalab::iso
