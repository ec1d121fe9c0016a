#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "obatalab/core_measure.hpp"

namespace obatalab::spectral {

using measure::WeightedInterval;

/// Lowest Neumann eigenpairs of -(h u')' = lambda h u on a weighted interval.
struct SpectralResult {
    std::vector<double> eigenvalues;                ///< lambda_1 <= ... <= lambda_k
    std::vector<std::vector<double>> eigenfunctions;  ///< node samples, unit discrete L2(m) norm, zero mean, u(0) > 0
    std::vector<double> residuals;                  ///< max_i |(h u')' + lambda h u| at interior nodes
    std::vector<double> error_bars;                 ///< |lambda(n) - lambda(n/2)|, empty if not computed
    std::vector<double> extrapolated;               ///< lambda(n) + (lambda(n) - lambda(n/2)) / 3
    std::vector<double> mass_weights;               ///< lumped weights defining the discrete L2(m) product
    double lambda0 = 0.0;                           ///< dropped constant mode
    double residual = 0.0;                          ///< max over returned pairs
};

struct SolveOptions {
    bool error_bar = true;  ///< also solve on the grid with every other node
};

/// Conservative midpoint-flux discretization with lumped mass, Sturm bisection and
/// inverse iteration. Throws DisconnectedSpaceError if h vanishes on a whole cell.
SpectralResult neumann_eigs(const WeightedInterval& w, std::size_t k, SolveOptions opts = {});

/// sum_c k_c (u_{c+1} - u_c)^2 / sum_i M_i u_i^2 with the solver's flux and mass weights.
double discrete_rayleigh(const WeightedInterval& w, std::span<const double> u);
/// sum_i M_i f_i g_i.
double discrete_inner(const WeightedInterval& w, std::span<const double> f, std::span<const double> g);

/// u recentred to zero m-mean and scaled to unit L2(m) norm (trapezoid rule).
std::vector<double> normalize_function(const WeightedInterval& w, std::span<const double> u);
/// int |u'|^2 dm after normalization; central differences, one-sided at the ends.
double rayleigh(const WeightedInterval& w, std::span<const double> u);
/// rayleigh(w, u) - N.
double deficit(const WeightedInterval& w, std::span<const double> u, double N);

struct LichnerowiczReport {
    double margin = 0.0;           ///< lambda_1 - N C_{N,D}^2
    double diameter_lhs = 0.0;     ///< C_N (pi - D)^N
    double diameter_rhs = 0.0;     ///< lambda_1 - N
    bool diameter_holds = true;
};

/// Improved spectral gap lambda_1 >= N C_{N,D}^2 and the diameter form C_N (pi-D)^N <= lambda_1 - N.
LichnerowiczReport lichnerowicz_check(const WeightedInterval& w, double lambda1);
/// N times the smallest value of (C_{N,D}^2 - 1) / (pi - D)^N over D in (0, pi], including
/// the D -> pi limit; scanned on 512 points.
double diameter_constant(double N);

struct BochnerReport {
    double norm = 0.0;   ///< ||u'' + u||_{L2(m)} over the window h >= threshold max h
    double ratio = 0.0;  ///< norm / (lambda - N)^{1/2}; 0 when lambda == N and norm == 0
    bool out_of_range = false;  ///< lambda outside [N, 2N]
    double window_lo = 0.0;
    double window_hi = 0.0;
};

BochnerReport bochner_check(const WeightedInterval& w, std::span<const double> u, double lambda,
                            double threshold = 1e-6);

struct GreenResult {
    std::vector<double> v0;
    double x0 = 0.0;
    bool boundary_max = false;  ///< argmax of h sits at an endpoint
    double norm_v0 = 0.0;       ///< L2(m)
    double norm_z = 0.0;
    bool bound_holds = true;    ///< norm_v0 <= pi norm_z + 1e-8
    double residual = 0.0;      ///< max interior |v0'' + v0 - z| by central differences
};

/// Discrete argmax of h, ties to the smaller t.
std::size_t density_argmax(const WeightedInterval& w);
/// v0(t) = int_{x0}^t sin(t - s) z(s) ds with x0 the argmax of h unless given (as a node index).
GreenResult green_apply(const WeightedInterval& w, std::span<const double> z,
                        std::optional<std::size_t> x0_index = std::nullopt);

/// Seeded smooth test function: trigonometric polynomial of degree `degree`.
std::vector<double> random_smooth(const measure::Grid& grid, std::uint64_t seed, int degree = 6);

struct WindowDistance {
    double lo = 0.0;
    double hi = 0.0;
    double dist_L2 = 0.0;
};

struct CosineReport {
    int sign = 1;
    double dist_L2 = 0.0;
    double dist_W12 = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    double u0_norm = 0.0;
    double z_norm = 0.0;
    double reconstruction_error = 0.0;  ///< max_i |u - u0 - alpha sin - beta cos|
    std::optional<WindowDistance> near_pole;  ///< [0, r]
    std::optional<WindowDistance> shell;      ///< [r - eta, r + eta]
};

/// Decomposition u = u0 + alpha sin + beta cos and distances to +-sqrt(N+1) cos.
CosineReport cosine_decompose(const WeightedInterval& w, std::span<const double> u, double lambda,
                              std::optional<double> r = std::nullopt, double eta = 0.0);

/// Distances of u, taken as given (normalize first), to +-sqrt(N+1) cos; no decomposition.
CosineReport cosine_distance(const WeightedInterval& w, std::span<const double> u);

struct PoincareReport {
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;
};

/// Local Poincare quotient on B_r(x) against r times the mean of |u'|^p on B_{10r}(x).
PoincareReport poincare_check(const WeightedInterval& w, std::span<const double> u, double x, double r, int p);

/// Fourth-order second derivative on uniform grids (second-order otherwise).
std::vector<double> second_derivative_accurate(const measure::Grid& grid, std::span<const double> f);
/// Fourth-order running integral on uniform grids (trapezoid otherwise).
std::vector<double> cumulative_integral_accurate(const measure::Grid& grid, std::span<const double> f);

}  // namespace obatalab::spectral
