#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace obatalab::measure {

inline constexpr double kPi = std::numbers::pi;

/// Additive slack used by the CD inequality checks.
inline constexpr double kInequalitySlack = 1e-8;
/// Tolerance on total mass when a density is declared to be a probability density.
inline constexpr double kMassTolerance = 1e-6;

/// Nodes t_0 = 0 < t_1 < ... < t_n = D of an interval [0, D]; at least 16 nodes.
class Grid {
public:
    static constexpr std::size_t kMinNodes = 16;

    static Grid uniform(double length, std::size_t cells);
    /// Validates strict monotonicity, t_0 = 0 and the minimum node count.
    static Grid from_nodes(std::vector<double> nodes);

    double length() const { return nodes_.back(); }
    std::size_t cells() const { return nodes_.size() - 1; }
    std::size_t size() const { return nodes_.size(); }
    std::span<const double> nodes() const { return nodes_; }
    double operator[](std::size_t i) const { return nodes_[i]; }
    double spacing(std::size_t cell) const { return nodes_[cell + 1] - nodes_[cell]; }
    double max_spacing() const;
    bool is_uniform() const { return uniform_; }

    /// Every other node; requires an even cell count.
    Grid coarsened() const;
    /// Index of the cell containing t (clamped to [0, cells-1]).
    std::size_t locate(double t) const;

private:
    Grid(std::vector<double> nodes, bool uniform) : nodes_(std::move(nodes)), uniform_(uniform) {}
    std::vector<double> nodes_;
    bool uniform_ = false;
};

/// ([0, D], |.|, h dt) with h piecewise linear between nodes and CD parameters (K, N).
class WeightedInterval {
public:
    WeightedInterval(Grid grid, std::vector<double> h, double K, double N);

    const Grid& grid() const { return grid_; }
    std::span<const double> density() const { return h_; }
    double K() const { return K_; }
    double N() const { return N_; }
    double length() const { return grid_.length(); }
    /// Trapezoid integral of h.
    double total_mass() const { return mass_; }

    /// Same interval with h divided by its discrete mass.
    WeightedInterval normalized() const;
    /// Restriction to every other node (see Grid::coarsened).
    WeightedInterval coarsened() const;
    /// Piecewise-linear interpolation of h at t in [0, D].
    double density_at(double t) const;
    bool is_probability(double tol = kMassTolerance) const;

private:
    Grid grid_;
    std::vector<double> h_;
    double K_;
    double N_;
    double mass_;
};

/// Arguments of the distortion coefficients sigma and tau.
struct CoefficientQuery {
    double K = 0.0;
    double N = 2.0;
    double t = 0.0;
    double theta = 0.0;
};

/// sigma^{(t)}_{K,N}(theta); +inf when K > 0 and theta >= pi sqrt(N/K).
/// K <= 0 uses the sinh / linear continuation.
double sigma_coeff(const CoefficientQuery& q);
/// tau^{(t)}_{K,N}(theta) = t^{1/N} sigma^{(t)}_{K,N-1}(theta)^{1-1/N}.
double tau_coeff(const CoefficientQuery& q);

/// omega_N = integral of sin^{N-1} over [0, pi].
double omega(double N);
/// Model density sin^{N-1}(t) / omega_N.
double model_density_value(double N, double t);
/// Model density m_N([a, b]) by adaptive quadrature.
double model_mass(double N, double a, double b);

/// h_N sampled on grid (grid length <= pi), K = N - 1.
WeightedInterval model_density(double N, const Grid& grid);
/// h_N restricted to [0, D] and divided by m_N([0, D]).
WeightedInterval truncated_model(double N, double D, std::size_t cells);
/// (pi/D) h_N(pi t / D) on [0, D]; CD(N-1, N) for D <= pi.
WeightedInterval rescaled_model(double N, double D, std::size_t cells);

struct CdWitness {
    double x0 = 0.0;
    double x1 = 0.0;
    double t = 0.0;
    double excess = 0.0;  ///< right side minus left side of the CD inequality
};

struct CdVerdict {
    bool pass = true;
    std::size_t triples_checked = 0;
    std::optional<CdWitness> witness;  ///< worst violation when failing
    bool diameter_violation = false;
};

/// CD(K, N) inequality on h^{1/(N-1)} over node-aligned triples: a lattice of
/// evenly strided nodes plus `sample_pairs` quasi-random triples.
CdVerdict cd_check(const WeightedInterval& w, std::size_t sample_pairs = 256,
                   double tol = kInequalitySlack);

struct DifferentialVerdict {
    bool pass = true;
    /// max over interior nodes of (N-1)(h^{1/(N-1)})''/h^{1/(N-1)} + K
    double max_excess = 0.0;
    std::size_t worst_node = 0;
};

/// Differential form of the CD condition by second-order central differences.
DifferentialVerdict cd_check_differential(const WeightedInterval& w, double tol = kInequalitySlack);

/// Piecewise-constant excess curvature a(t) >= 0 on `levels.size()` equal pieces of [0, D].
/// Empty levels are drawn from the seed as `pieces` values in [0, max_level].
struct DensityRecipe {
    std::vector<double> levels;
    std::size_t pieces = 4;
    double max_level = 2.0;
    /// w(0); drawn from the seed in [0, 0.3] when unset.
    std::optional<double> start_value;
};

struct GeneratedDensity {
    WeightedInterval density;
    std::vector<double> levels;
    double start_value = 0.0;
    bool shrunk = false;
    double requested_length = 0.0;
};

/// Solves w'' = -(1 + a(t)) w, w'(0) = 1 by RK4 and returns h = w^{N-1} with unit mass,
/// a CD(N-1, N) density. If w reaches zero before D the interval is shrunk to
/// 0.98 times the first zero.
GeneratedDensity generate_cd_density(double N, std::uint64_t seed, const Grid& grid,
                                     const DensityRecipe& recipe = {});

struct EnvelopeReport {
    bool bounds_hold = true;
    std::size_t violations = 0;
    std::optional<std::size_t> first_violation;
    double worst_lower_gap = 0.0;  ///< max of lower bound minus h (<= 0 when holding)
    double worst_upper_gap = 0.0;  ///< max of h minus upper bound
    double sup_deviation = 0.0;    ///< sup |h - h_N| over nodes
    double epsilon = 0.0;          ///< pi - D
    std::optional<double> windowed_ratio;  ///< sup over [0,r] u [pi-r,D] of |h-h_N| / (r^{N-2} eps)
};

/// Two-sided envelope of a unit-mass CD(N-1, N) density by the model density.
EnvelopeReport envelope_check(const WeightedInterval& w, std::optional<double> r = std::nullopt,
                              double slack = 1e-6);

enum class Rule { Trapezoid, Simpson };

/// Integral of f h dt; Simpson requires a uniform grid with an even cell count.
double integrate(const WeightedInterval& w, std::span<const double> f, Rule rule = Rule::Trapezoid);
/// Integral of f dt over the grid.
double integrate_plain(const Grid& grid, std::span<const double> f, Rule rule = Rule::Trapezoid);
/// Integral of the piecewise-linear interpolant of f over [a, b] within the grid.
double integrate_window(const Grid& grid, std::span<const double> f, double a, double b);
/// Running trapezoid integral F(t_i) = int_0^{t_i} f.
std::vector<double> cumulative_integral(const Grid& grid, std::span<const double> f);

/// First derivative: central differences inside, second-order one-sided at the ends.
std::vector<double> derivative(const Grid& grid, std::span<const double> f);
/// Second derivative at interior nodes (ends copied from their neighbours).
std::vector<double> second_derivative(const Grid& grid, std::span<const double> f);

/// f sampled at the nodes of grid.
template <class F>
std::vector<double> sample(const Grid& grid, F&& f) {
    std::vector<double> out(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) out[i] = f(grid[i]);
    return out;
}

/// CSV `t,h` density; t shifted so that it starts at 0.
WeightedInterval read_density_csv(std::istream& in, double K, double N);
WeightedInterval read_density_csv_file(const std::string& path, double K, double N);
void write_density_csv(std::ostream& out, const WeightedInterval& w);

}  // namespace obatalab::measure
