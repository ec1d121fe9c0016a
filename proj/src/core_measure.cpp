#include "obatalab/core_measure.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include "obatalab/errors.hpp"
#include "obatalab/format.hpp"
#include "obatalab/quadrature.hpp"

namespace obatalab::measure {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_dimension(double N) {
    if (!(N > 1.0)) throw ParameterDomainError("dimension parameter N must exceed 1");
}

// sin(t) for t in [0, pi], exact zero at both ends.
double pole_sin(double t) {
    return std::sin(t <= 0.5 * kPi ? t : kPi - t);
}

// sigma without the N > 1 restriction, so sigma_{K,N-1} is available for N in (1, 2].
double sigma_unchecked(double K, double N, double t, double theta) {
    if (theta == 0.0) return t;
    if (K > 0.0) {
        const double k = std::sqrt(K / N);
        const double arg = theta * k;
        if (theta >= kPi * std::sqrt(N / K) || arg >= kPi) return kInf;
        return std::sin(t * arg) / std::sin(arg);
    }
    if (K < 0.0) {
        const double arg = theta * std::sqrt(-K / N);
        if (arg > 40.0) {
            // sinh ratio without overflow
            return std::exp((t - 1.0) * arg) * (-std::expm1(-2.0 * t * arg)) /
                   (-std::expm1(-2.0 * arg));
        }
        return std::sinh(t * arg) / std::sinh(arg);
    }
    return t;
}

// 0 * inf = 0 convention of the CD inequality.
double weighted(double coeff, double value) {
    if (value == 0.0) return 0.0;
    return coeff * value;
}

// Uniform double in [0, 1) from the top 53 bits; independent of the library's distributions.
double unit_draw(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::vector<double> validated_samples(std::vector<double> h, const Grid& grid) {
    if (h.size() != grid.size())
        throw ShapeError("density has " + std::to_string(h.size()) + " samples, grid has " +
                         std::to_string(grid.size()) + " nodes");
    for (double v : h) {
        if (!std::isfinite(v) || v < 0.0) throw DegenerateDensityError("density samples must be finite and non-negative");
    }
    return h;
}

}  // namespace

// ---------------------------------------------------------------- Grid

Grid Grid::uniform(double length, std::size_t cells) {
    if (!(length > 0.0) || !std::isfinite(length)) throw ParameterDomainError("grid length must be positive");
    if (cells + 1 < kMinNodes) throw ShapeError("grid needs at least 16 nodes");
    std::vector<double> nodes(cells + 1);
    for (std::size_t i = 0; i <= cells; ++i) nodes[i] = length * static_cast<double>(i) / static_cast<double>(cells);
    nodes.back() = length;
    return Grid(std::move(nodes), true);
}

Grid Grid::from_nodes(std::vector<double> nodes) {
    if (nodes.size() < kMinNodes) throw ShapeError("grid needs at least 16 nodes");
    if (nodes.front() != 0.0) throw ShapeError("grid must start at t = 0");
    for (std::size_t i = 1; i < nodes.size(); ++i) {
        if (!(nodes[i] > nodes[i - 1]) || !std::isfinite(nodes[i]))
            throw ShapeError("grid nodes must be strictly increasing");
    }
    const double step = nodes.back() / static_cast<double>(nodes.size() - 1);
    bool uniform = true;
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
        if (std::abs((nodes[i + 1] - nodes[i]) - step) > 1e-12 * nodes.back()) {
            uniform = false;
            break;
        }
    }
    return Grid(std::move(nodes), uniform);
}

double Grid::max_spacing() const {
    double m = 0.0;
    for (std::size_t c = 0; c < cells(); ++c) m = std::max(m, spacing(c));
    return m;
}

Grid Grid::coarsened() const {
    if (cells() % 2 != 0) throw ShapeError("coarsening needs an even cell count");
    std::vector<double> nodes;
    nodes.reserve(cells() / 2 + 1);
    for (std::size_t i = 0; i < size(); i += 2) nodes.push_back(nodes_[i]);
    if (nodes.size() < kMinNodes) throw ShapeError("coarsened grid would have fewer than 16 nodes");
    return Grid(std::move(nodes), uniform_);
}

std::size_t Grid::locate(double t) const {
    if (t <= nodes_.front()) return 0;
    if (t >= nodes_.back()) return cells() - 1;
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), t);
    return static_cast<std::size_t>(it - nodes_.begin()) - 1;
}

// ---------------------------------------------------------------- WeightedInterval

WeightedInterval::WeightedInterval(Grid grid, std::vector<double> h, double K, double N)
    : grid_(std::move(grid)), h_(validated_samples(std::move(h), grid_)), K_(K), N_(N) {
    require_dimension(N);
    if (!std::isfinite(K)) throw ParameterDomainError("curvature parameter must be finite");
    mass_ = integrate_plain(grid_, h_);
}

WeightedInterval WeightedInterval::normalized() const {
    if (!(mass_ > 0.0)) throw NormalizationError("density has zero mass");
    std::vector<double> h(h_.size());
    for (std::size_t i = 0; i < h.size(); ++i) h[i] = h_[i] / mass_;
    return WeightedInterval(grid_, std::move(h), K_, N_);
}

WeightedInterval WeightedInterval::coarsened() const {
    Grid g = grid_.coarsened();
    std::vector<double> h;
    h.reserve(g.size());
    for (std::size_t i = 0; i < h_.size(); i += 2) h.push_back(h_[i]);
    return WeightedInterval(std::move(g), std::move(h), K_, N_);
}

double WeightedInterval::density_at(double t) const {
    const std::size_t c = grid_.locate(t);
    const double a = grid_[c];
    const double s = (std::clamp(t, a, grid_[c + 1]) - a) / grid_.spacing(c);
    return h_[c] + s * (h_[c + 1] - h_[c]);
}

bool WeightedInterval::is_probability(double tol) const {
    return std::abs(mass_ - 1.0) <= tol;
}

// ---------------------------------------------------------------- coefficients

double sigma_coeff(const CoefficientQuery& q) {
    require_dimension(q.N);
    if (!(q.t >= 0.0 && q.t <= 1.0)) throw ParameterDomainError("interpolation parameter t must lie in [0, 1]");
    if (!(q.theta >= 0.0)) throw ParameterDomainError("distance argument must be non-negative");
    return sigma_unchecked(q.K, q.N, q.t, q.theta);
}

double tau_coeff(const CoefficientQuery& q) {
    require_dimension(q.N);
    if (!(q.t >= 0.0 && q.t <= 1.0)) throw ParameterDomainError("interpolation parameter t must lie in [0, 1]");
    if (!(q.theta >= 0.0)) throw ParameterDomainError("distance argument must be non-negative");
    if (q.t == 0.0) return 0.0;
    const double s = sigma_unchecked(q.K, q.N - 1.0, q.t, q.theta);
    if (std::isinf(s)) return kInf;
    return std::pow(q.t, 1.0 / q.N) * std::pow(s, 1.0 - 1.0 / q.N);
}

// ---------------------------------------------------------------- model densities

double omega(double N) {
    require_dimension(N);
    return quad::sin_power_integral(N - 1.0, 0.0, kPi);
}

double model_density_value(double N, double t) {
    return std::pow(pole_sin(t), N - 1.0) / omega(N);
}

double model_mass(double N, double a, double b) {
    require_dimension(N);
    a = std::clamp(a, 0.0, kPi);
    b = std::clamp(b, 0.0, kPi);
    if (b <= a) return 0.0;
    return quad::sin_power_integral(N - 1.0, a, b) / omega(N);
}

WeightedInterval model_density(double N, const Grid& grid) {
    require_dimension(N);
    if (grid.length() > kPi * (1.0 + 1e-14)) throw ParameterDomainError("model density lives on [0, pi]");
    const double w = omega(N);
    auto h = sample(grid, [&](double t) { return std::pow(pole_sin(std::min(t, kPi)), N - 1.0) / w; });
    return WeightedInterval(grid, std::move(h), N - 1.0, N);
}

WeightedInterval truncated_model(double N, double D, std::size_t cells) {
    require_dimension(N);
    if (!(D > 0.0 && D <= kPi)) throw ParameterDomainError("truncation length must lie in (0, pi]");
    const Grid grid = Grid::uniform(D, cells);
    const double w = omega(N);
    const double lambda = quad::sin_power_integral(N - 1.0, 0.0, D) / w;
    auto h = sample(grid, [&](double t) { return std::pow(pole_sin(std::min(t, kPi)), N - 1.0) / (w * lambda); });
    return WeightedInterval(grid, std::move(h), N - 1.0, N);
}

WeightedInterval rescaled_model(double N, double D, std::size_t cells) {
    require_dimension(N);
    if (!(D > 0.0 && D <= kPi)) throw ParameterDomainError("rescaled length must lie in (0, pi]");
    const Grid grid = Grid::uniform(D, cells);
    const double w = omega(N);
    const double scale = kPi / D;
    auto h = sample(grid, [&](double t) {
        return scale * std::pow(pole_sin(std::min(scale * t, kPi)), N - 1.0) / w;
    });
    return WeightedInterval(grid, std::move(h), N - 1.0, N);
}

// ---------------------------------------------------------------- CD checks

CdVerdict cd_check(const WeightedInterval& w, std::size_t sample_pairs, double tol) {
    const double N = w.N();
    const double K = w.K();
    const Grid& grid = w.grid();
    const double D = grid.length();
    CdVerdict verdict;

    if (K > 0.0) {
        const double limit = kPi * std::sqrt((N - 1.0) / K);
        if (D > limit * (1.0 + 1e-12)) {
            verdict.pass = false;
            verdict.diameter_violation = true;
            verdict.witness = CdWitness{0.0, D, 0.5, D - limit};
            return verdict;
        }
    }

    const auto h = w.density();
    std::vector<double> g(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) g[i] = std::pow(h[i], 1.0 / (N - 1.0));

    double worst = tol;
    auto check = [&](std::size_t i, std::size_t j, std::size_t k) {
        const double x0 = grid[i];
        const double x1 = grid[k];
        const double theta = x1 - x0;
        const double t = (grid[j] - x0) / theta;
        const double rhs = weighted(sigma_unchecked(K, N - 1.0, t, theta), g[k]) +
                           weighted(sigma_unchecked(K, N - 1.0, 1.0 - t, theta), g[i]);
        const double excess = rhs - g[j];
        ++verdict.triples_checked;
        if (excess > worst) {
            worst = excess;
            verdict.pass = false;
            verdict.witness = CdWitness{x0, x1, t, excess};
        }
    };

    const std::size_t n = grid.cells();
    const std::size_t m = std::min<std::size_t>(64, n + 1);
    std::vector<std::size_t> idx(m);
    for (std::size_t a = 0; a < m; ++a) idx[a] = (a * n + (m - 1) / 2) / (m - 1);
    idx.front() = 0;
    idx.back() = n;
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = a + 1; b < m; ++b)
            for (std::size_t c = b + 1; c < m; ++c) check(idx[a], idx[b], idx[c]);

    // additive recurrence with the inverse powers of the plastic number
    constexpr double phi3 = 1.2207440846057594;
    const std::array<double, 3> alpha{1.0 / phi3, 1.0 / (phi3 * phi3), 1.0 / (phi3 * phi3 * phi3)};
    for (std::size_t s = 1; s <= sample_pairs; ++s) {
        std::array<std::size_t, 3> pick{};
        for (std::size_t d = 0; d < 3; ++d) {
            double frac = 0.5 + alpha[d] * static_cast<double>(s);
            frac -= std::floor(frac);
            pick[d] = std::min(n, static_cast<std::size_t>(frac * static_cast<double>(n + 1)));
        }
        std::sort(pick.begin(), pick.end());
        if (pick[0] == pick[1] || pick[1] == pick[2]) continue;
        check(pick[0], pick[1], pick[2]);
    }
    return verdict;
}

DifferentialVerdict cd_check_differential(const WeightedInterval& w, double tol) {
    const double N = w.N();
    const double K = w.K();
    const Grid& grid = w.grid();
    const auto h = w.density();
    DifferentialVerdict verdict;
    verdict.max_excess = -kInf;
    std::vector<double> g(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) g[i] = std::pow(h[i], 1.0 / (N - 1.0));
    for (std::size_t i = 1; i + 1 < g.size(); ++i) {
        if (!(h[i] > 0.0)) throw DegenerateDensityError("density vanishes at interior node " + std::to_string(i));
        const double dm = grid.spacing(i - 1);
        const double dp = grid.spacing(i);
        const double second = 2.0 * ((g[i + 1] - g[i]) / dp - (g[i] - g[i - 1]) / dm) / (dm + dp);
        const double excess = (N - 1.0) * second / g[i] + K;
        if (excess > verdict.max_excess) {
            verdict.max_excess = excess;
            verdict.worst_node = i;
        }
    }
    verdict.pass = verdict.max_excess <= tol;
    return verdict;
}

// ---------------------------------------------------------------- generator

namespace {

std::vector<double> integrate_profile(const Grid& grid, const std::vector<double>& levels,
                                      double piece_width, double w0) {
    std::vector<double> w(grid.size());
    w[0] = w0;
    double y = w0;
    double dy = 1.0;
    for (std::size_t c = 0; c < grid.cells(); ++c) {
        const double mid = 0.5 * (grid[c] + grid[c + 1]);
        const std::size_t piece = std::min(levels.size() - 1, static_cast<std::size_t>(mid / piece_width));
        const double k = 1.0 + levels[piece];
        const double dt = grid.spacing(c);
        // y' = dy, dy' = -k y
        const double k1y = dy, k1v = -k * y;
        const double k2y = dy + 0.5 * dt * k1v, k2v = -k * (y + 0.5 * dt * k1y);
        const double k3y = dy + 0.5 * dt * k2v, k3v = -k * (y + 0.5 * dt * k2y);
        const double k4y = dy + dt * k3v, k4v = -k * (y + dt * k3y);
        y += dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        dy += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        w[c + 1] = y;
    }
    return w;
}

}  // namespace

GeneratedDensity generate_cd_density(double N, std::uint64_t seed, const Grid& grid,
                                     const DensityRecipe& recipe) {
    require_dimension(N);
    const double D = grid.length();
    if (D > kPi) throw ParameterDomainError("generated densities need D <= pi");

    std::mt19937_64 rng(seed);
    std::vector<double> levels = recipe.levels;
    if (levels.empty()) {
        if (recipe.pieces == 0) throw ParameterDomainError("excess profile needs at least one piece");
        levels.resize(recipe.pieces);
        for (double& a : levels) a = recipe.max_level * unit_draw(rng);
    }
    for (double a : levels) {
        if (!(a >= 0.0) || !std::isfinite(a)) throw ParameterDomainError("excess curvature levels must be >= 0");
    }
    const double w0 = recipe.start_value ? *recipe.start_value : 0.3 * unit_draw(rng);
    if (!(w0 >= 0.0)) throw ParameterDomainError("start value must be >= 0");

    const double piece_width = D / static_cast<double>(levels.size());
    Grid used = grid;
    std::vector<double> w = integrate_profile(used, levels, piece_width, w0);
    bool shrunk = false;
    for (std::size_t i = 1; i < w.size(); ++i) {
        if (w[i] > 0.0) continue;
        if (i + 1 == w.size() && w[i] > -1e-9) {
            w[i] = 0.0;  // zero exactly at the right end
            break;
        }
        const double zero = used[i - 1] + used.spacing(i - 1) * w[i - 1] / (w[i - 1] - w[i]);
        used = Grid::uniform(0.98 * zero, grid.cells());
        w = integrate_profile(used, levels, piece_width, w0);
        shrunk = true;
        break;
    }
    std::vector<double> h(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) h[i] = std::pow(std::max(w[i], 0.0), N - 1.0);
    WeightedInterval density = WeightedInterval(used, std::move(h), N - 1.0, N).normalized();
    return GeneratedDensity{std::move(density), std::move(levels), w0, shrunk, D};
}

// ---------------------------------------------------------------- envelope

EnvelopeReport envelope_check(const WeightedInterval& w, std::optional<double> r, double slack) {
    if (!w.is_probability()) throw NormalizationError("envelope check needs a unit-mass density");
    const double N = w.N();
    const Grid& grid = w.grid();
    const double D = grid.length();
    if (D > kPi * (1.0 + 1e-14)) throw ParameterDomainError("envelope check needs D <= pi");
    const double eps = std::max(0.0, kPi - D);
    const double om = omega(N);
    const double lambda = quad::sin_power_integral(N - 1.0, 0.0, std::min(D, kPi)) / om;
    const double lower_factor = om / (om * lambda + eps);
    const double upper_factor = om / (om - eps);
    const double abs_slack = slack / om;  // relative to max h_N = 1 / omega_N
    auto hN = [&](double t) { return std::pow(pole_sin(std::clamp(t, 0.0, kPi)), N - 1.0) / om; };

    EnvelopeReport rep;
    rep.epsilon = eps;
    rep.worst_lower_gap = -kInf;
    rep.worst_upper_gap = -kInf;
    const auto h = w.density();
    double window_sup = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double t = grid[i];
        const double a = hN(t);
        const double dev = std::abs(h[i] - a);
        rep.sup_deviation = std::max(rep.sup_deviation, dev);
        if (r && (t <= *r || t >= kPi - *r)) window_sup = std::max(window_sup, dev);
        if (i == 0 || i + 1 == h.size()) continue;
        const double b = hN(t + eps);
        const double lo = lower_factor * std::min(a, b);
        const double hi = upper_factor * std::max(a, b);
        rep.worst_lower_gap = std::max(rep.worst_lower_gap, lo - h[i]);
        rep.worst_upper_gap = std::max(rep.worst_upper_gap, h[i] - hi);
        if (h[i] < lo - abs_slack || h[i] > hi + abs_slack) {
            ++rep.violations;
            if (!rep.first_violation) rep.first_violation = i;
        }
    }
    rep.bounds_hold = rep.violations == 0;
    if (r) {
        if (!(*r > 0.0)) throw ParameterDomainError("window radius must be positive");
        if (window_sup == 0.0) rep.windowed_ratio = 0.0;
        else if (eps == 0.0) rep.windowed_ratio = kInf;
        else rep.windowed_ratio = window_sup / (std::pow(*r, N - 2.0) * eps);
    }
    return rep;
}

// ---------------------------------------------------------------- quadrature on samples

double integrate_plain(const Grid& grid, std::span<const double> f, Rule rule) {
    if (f.size() != grid.size())
        throw ShapeError("sampled function has " + std::to_string(f.size()) + " values, grid has " +
                         std::to_string(grid.size()) + " nodes");
    const std::size_t n = grid.cells();
    if (rule == Rule::Simpson) {
        if (!grid.is_uniform() || n % 2 != 0) throw PreconditionError("Simpson rule needs a uniform grid with an even cell count");
        const double dt = grid.length() / static_cast<double>(n);
        double s = f[0] + f[n];
        for (std::size_t i = 1; i < n; ++i) s += (i % 2 == 1 ? 4.0 : 2.0) * f[i];
        return s * dt / 3.0;
    }
    double s = 0.0;
    for (std::size_t c = 0; c < n; ++c) s += 0.5 * grid.spacing(c) * (f[c] + f[c + 1]);
    return s;
}

double integrate(const WeightedInterval& w, std::span<const double> f, Rule rule) {
    const auto h = w.density();
    if (f.size() != h.size())
        throw ShapeError("sampled function has " + std::to_string(f.size()) + " values, density has " +
                         std::to_string(h.size()));
    std::vector<double> fh(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) fh[i] = f[i] * h[i];
    return integrate_plain(w.grid(), fh, rule);
}

double integrate_window(const Grid& grid, std::span<const double> f, double a, double b) {
    if (f.size() != grid.size()) throw ShapeError("sampled function does not match grid");
    a = std::max(a, 0.0);
    b = std::min(b, grid.length());
    if (b <= a) return 0.0;
    auto value = [&](std::size_t c, double t) {
        const double s = (t - grid[c]) / grid.spacing(c);
        return f[c] + s * (f[c + 1] - f[c]);
    };
    double s = 0.0;
    for (std::size_t c = grid.locate(a); c < grid.cells() && grid[c] < b; ++c) {
        const double lo = std::max(a, grid[c]);
        const double hi = std::min(b, grid[c + 1]);
        if (hi > lo) s += 0.5 * (hi - lo) * (value(c, lo) + value(c, hi));
    }
    return s;
}

std::vector<double> cumulative_integral(const Grid& grid, std::span<const double> f) {
    if (f.size() != grid.size()) throw ShapeError("sampled function does not match grid");
    std::vector<double> F(f.size(), 0.0);
    for (std::size_t c = 0; c < grid.cells(); ++c) F[c + 1] = F[c] + 0.5 * grid.spacing(c) * (f[c] + f[c + 1]);
    return F;
}

std::vector<double> derivative(const Grid& grid, std::span<const double> f) {
    if (f.size() != grid.size()) throw ShapeError("sampled function does not match grid");
    const std::size_t n = grid.cells();
    std::vector<double> d(f.size());
    for (std::size_t i = 1; i < n; ++i) {
        const double hm = grid.spacing(i - 1);
        const double hp = grid.spacing(i);
        d[i] = (-hp / (hm * (hm + hp))) * f[i - 1] + ((hp - hm) / (hm * hp)) * f[i] +
               (hm / (hp * (hm + hp))) * f[i + 1];
    }
    {
        const double h1 = grid.spacing(0);
        const double h2 = grid.spacing(1);
        d[0] = -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * f[0] + (h1 + h2) / (h1 * h2) * f[1] -
               h1 / (h2 * (h1 + h2)) * f[2];
    }
    {
        const double h1 = grid.spacing(n - 1);
        const double h2 = grid.spacing(n - 2);
        d[n] = (2.0 * h1 + h2) / (h1 * (h1 + h2)) * f[n] - (h1 + h2) / (h1 * h2) * f[n - 1] +
               h1 / (h2 * (h1 + h2)) * f[n - 2];
    }
    return d;
}

std::vector<double> second_derivative(const Grid& grid, std::span<const double> f) {
    if (f.size() != grid.size()) throw ShapeError("sampled function does not match grid");
    const std::size_t n = grid.cells();
    std::vector<double> d(f.size());
    for (std::size_t i = 1; i < n; ++i) {
        const double hm = grid.spacing(i - 1);
        const double hp = grid.spacing(i);
        d[i] = 2.0 * ((f[i + 1] - f[i]) / hp - (f[i] - f[i - 1]) / hm) / (hm + hp);
    }
    d[0] = d[1];
    d[n] = d[n - 1];
    return d;
}

// ---------------------------------------------------------------- CSV

namespace {

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

double parse_number(const std::string& field, std::size_t line) {
    const std::string s = trim(field);
    double v = 0.0;
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    if (!s.empty() && *begin == '+') ++begin;
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (s.empty() || ec != std::errc{} || ptr != end || !std::isfinite(v))
        throw ParseError("line " + std::to_string(line) + ": '" + s + "' is not a finite number");
    return v;
}

}  // namespace

WeightedInterval read_density_csv(std::istream& in, double K, double N) {
    std::string line;
    std::size_t lineno = 0;
    bool header = false;
    std::vector<double> t;
    std::vector<double> h;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty()) continue;
        if (!header) {
            std::string compact;
            for (char c : line) if (c != ' ' && c != '\t') compact.push_back(c);
            if (compact != "t,h") throw ParseError("density CSV must start with the header 't,h'");
            header = true;
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
            throw ParseError("line " + std::to_string(lineno) + ": expected two fields");
        const double tv = parse_number(line.substr(0, comma), lineno);
        const double hv = parse_number(line.substr(comma + 1), lineno);
        if (hv < 0.0) throw ParseError("line " + std::to_string(lineno) + ": negative density value");
        if (!t.empty() && !(tv > t.back()))
            throw ParseError("line " + std::to_string(lineno) + ": t values must be strictly increasing");
        t.push_back(tv);
        h.push_back(hv);
    }
    if (!header) throw ParseError("density CSV is empty");
    if (t.size() < Grid::kMinNodes) throw ParseError("density CSV needs at least 16 rows");
    const double t0 = t.front();
    for (double& v : t) v -= t0;
    t.front() = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i) {
        if (!(t[i] > t[i - 1])) throw ParseError("t values collapse after shifting to start at 0");
    }
    return WeightedInterval(Grid::from_nodes(std::move(t)), std::move(h), K, N);
}

WeightedInterval read_density_csv_file(const std::string& path, double K, double N) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open density file '" + path + "'");
    return read_density_csv(in, K, N);
}

void write_density_csv(std::ostream& out, const WeightedInterval& w) {
    out << "t,h\n";
    const auto h = w.density();
    for (std::size_t i = 0; i < h.size(); ++i) out << format_double(w.grid()[i]) << ',' << format_double(h[i]) << '\n';
}

}  // namespace obatalab::measure
