#include "obatalab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "obatalab/errors.hpp"
#include "obatalab/isoperimetry.hpp"
#include "obatalab/tridiagonal.hpp"

namespace obatalab::spectral {

using measure::Grid;
using measure::kPi;

namespace {

struct Discretization {
    std::vector<double> flux;  // k_c per cell
    std::vector<double> mass;  // M_i per node
};

Discretization discretize(const WeightedInterval& w) {
    const Grid& g = w.grid();
    const auto h = w.density();
    const std::size_t n = g.cells();
    Discretization out;
    out.flux.resize(n);
    out.mass.assign(n + 1, 0.0);
    for (std::size_t c = 0; c < n; ++c) {
        const double hm = 0.5 * (h[c] + h[c + 1]);
        if (!(hm > 0.0))
            throw DisconnectedSpaceError("density vanishes on the cell [" + std::to_string(g[c]) + ", " +
                                         std::to_string(g[c + 1]) + "]");
        out.flux[c] = hm / g.spacing(c);
        out.mass[c] += 0.5 * g.spacing(c) * hm;
        out.mass[c + 1] += 0.5 * g.spacing(c) * hm;
    }
    return out;
}

void require_size(const WeightedInterval& w, std::span<const double> u) {
    if (u.size() != w.grid().size())
        throw ShapeError("sampled function has " + std::to_string(u.size()) + " values, grid has " +
                         std::to_string(w.grid().size()) + " nodes");
}

double weighted_l2(const WeightedInterval& w, std::span<const double> f) {
    std::vector<double> sq(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) sq[i] = f[i] * f[i];
    return std::sqrt(std::max(0.0, measure::integrate(w, sq)));
}

struct RawSolve {
    std::vector<double> values;  // lambda_0 .. lambda_k
    std::vector<std::vector<double>> vectors;
};

RawSolve solve(const WeightedInterval& w, const Discretization& disc, std::size_t count) {
    const std::size_t n = w.grid().cells();
    SymTridiagonal T;
    T.d.resize(n + 1);
    T.e.resize(n);
    std::vector<double> root(n + 1);
    for (std::size_t i = 0; i <= n; ++i) root[i] = std::sqrt(disc.mass[i]);
    for (std::size_t i = 0; i <= n; ++i) {
        double a = 0.0;
        if (i > 0) a += disc.flux[i - 1];
        if (i < n) a += disc.flux[i];
        T.d[i] = a / disc.mass[i];
    }
    for (std::size_t c = 0; c < n; ++c) T.e[c] = -disc.flux[c] / (root[c] * root[c + 1]);

    RawSolve out;
    std::vector<std::vector<double>> found;
    for (std::size_t j = 0; j < count; ++j) {
        const double lambda = T.eigenvalue(j);
        auto y = T.eigenvector(lambda, found);
        found.push_back(y);
        std::vector<double> u(n + 1);
        for (std::size_t i = 0; i <= n; ++i) u[i] = y[i] / root[i];
        out.vectors.push_back(std::move(u));
        out.values.push_back(lambda);
    }
    return out;
}

double rayleigh_from(const Discretization& disc, std::span<const double> u) {
    double num = 0.0, den = 0.0;
    for (std::size_t c = 0; c < disc.flux.size(); ++c) {
        const double du = u[c + 1] - u[c];
        num += disc.flux[c] * du * du;
    }
    for (std::size_t i = 0; i < u.size(); ++i) den += disc.mass[i] * u[i] * u[i];
    if (!(den > 0.0)) throw PreconditionError("Rayleigh quotient of the zero function");
    return num / den;
}

}  // namespace

SpectralResult neumann_eigs(const WeightedInterval& w, std::size_t k, SolveOptions opts) {
    if (k == 0) throw PreconditionError("neumann_eigs needs k >= 1");
    const Discretization disc = discretize(w);
    const std::size_t n = w.grid().cells();
    if (k + 1 > n + 1) throw PreconditionError("more eigenpairs requested than grid nodes");
    RawSolve raw = solve(w, disc, k + 1);

    SpectralResult res;
    res.mass_weights = disc.mass;
    double total = 0.0;
    for (double m : disc.mass) total += m;
    res.lambda0 = rayleigh_from(disc, raw.vectors[0]);
    const auto h = w.density();
    const Grid& g = w.grid();
    for (std::size_t j = 1; j <= k; ++j) {
        auto u = std::move(raw.vectors[j]);
        double mean = 0.0;
        for (std::size_t i = 0; i <= n; ++i) mean += disc.mass[i] * u[i];
        mean /= total;
        for (double& x : u) x -= mean;
        double norm = 0.0;
        for (std::size_t i = 0; i <= n; ++i) norm += disc.mass[i] * u[i] * u[i];
        norm = std::sqrt(norm);
        std::size_t lead = 0;
        while (lead < n && std::abs(u[lead]) < 1e-12 * norm) ++lead;
        const double s = u[lead] < 0.0 ? -1.0 : 1.0;
        for (double& x : u) x *= s / norm;
        const double lambda = rayleigh_from(disc, u);
        double resid = 0.0;
        for (std::size_t i = 1; i < n; ++i) {
            const double flux_div = disc.flux[i] * (u[i + 1] - u[i]) - disc.flux[i - 1] * (u[i] - u[i - 1]);
            const double avg = 0.5 * (g.spacing(i - 1) + g.spacing(i));
            resid = std::max(resid, std::abs(flux_div / avg + lambda * h[i] * u[i]));
        }
        res.eigenvalues.push_back(lambda);
        res.eigenfunctions.push_back(std::move(u));
        res.residuals.push_back(resid);
        res.residual = std::max(res.residual, resid);
    }
    if (opts.error_bar && n % 2 == 0 && n / 2 + 1 >= Grid::kMinNodes) {
        const auto coarse = neumann_eigs(w.coarsened(), k, SolveOptions{false});
        for (std::size_t j = 0; j < k; ++j) {
            const double diff = res.eigenvalues[j] - coarse.eigenvalues[j];
            res.error_bars.push_back(std::abs(diff));
            res.extrapolated.push_back(res.eigenvalues[j] + diff / 3.0);
        }
    }
    return res;
}

double discrete_rayleigh(const WeightedInterval& w, std::span<const double> u) {
    require_size(w, u);
    return rayleigh_from(discretize(w), u);
}

double discrete_inner(const WeightedInterval& w, std::span<const double> f, std::span<const double> g) {
    require_size(w, f);
    require_size(w, g);
    const auto disc = discretize(w);
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += disc.mass[i] * f[i] * g[i];
    return s;
}

// ---------------------------------------------------------------- Rayleigh / deficit

std::vector<double> normalize_function(const WeightedInterval& w, std::span<const double> u) {
    require_size(w, u);
    const double mass = w.total_mass();
    if (!(mass > 0.0)) throw NormalizationError("density has zero mass");
    const double mean = measure::integrate(w, u) / mass;
    std::vector<double> v(u.begin(), u.end());
    for (double& x : v) x -= mean;
    const double norm = weighted_l2(w, v) / std::sqrt(mass);
    if (!(norm > 1e-14 * (1.0 + std::abs(mean))))
        throw PreconditionError("Rayleigh quotient undefined for a constant function");
    for (double& x : v) x /= norm;
    return v;
}

double rayleigh(const WeightedInterval& w, std::span<const double> u) {
    const auto v = normalize_function(w, u);
    const auto d = measure::derivative(w.grid(), v);
    std::vector<double> sq(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) sq[i] = d[i] * d[i];
    return measure::integrate(w, sq) / w.total_mass();
}

double deficit(const WeightedInterval& w, std::span<const double> u, double N) {
    return rayleigh(w, u) - N;
}

// ---------------------------------------------------------------- Lichnerowicz

double diameter_constant(double N) {
    double cbar = 1.0 / iso::asymptotic_target(N);
    constexpr int kScan = 512;
    for (int j = 1; j < kScan; ++j) {
        const double eps = kPi * j / kScan;
        cbar = std::min(cbar, iso::bbg_constant_excess(N, kPi - eps) / std::pow(eps, N));
    }
    return N * cbar;
}

LichnerowiczReport lichnerowicz_check(const WeightedInterval& w, double lambda1) {
    const double N = w.N();
    const double D = std::min(w.length(), kPi);
    LichnerowiczReport rep;
    rep.margin = lambda1 - N * (1.0 + iso::bbg_constant_excess(N, D));
    rep.diameter_lhs = diameter_constant(N) * std::pow(kPi - D, N);
    rep.diameter_rhs = lambda1 - N;
    rep.diameter_holds = rep.diameter_lhs <= rep.diameter_rhs;
    return rep;
}

// ---------------------------------------------------------------- derivatives and integrals

std::vector<double> second_derivative_accurate(const Grid& grid, std::span<const double> f) {
    const std::size_t n = grid.cells();
    if (!grid.is_uniform() || n < 6) return measure::second_derivative(grid, f);
    if (f.size() != grid.size()) throw ShapeError("sampled function does not match grid");
    const double dt = grid.length() / static_cast<double>(n);
    const double s = 1.0 / (12.0 * dt * dt);
    std::vector<double> d(n + 1);
    for (std::size_t i = 2; i + 2 <= n; ++i)
        d[i] = s * (-f[i - 2] + 16.0 * f[i - 1] - 30.0 * f[i] + 16.0 * f[i + 1] - f[i + 2]);
    d[0] = s * (45.0 * f[0] - 154.0 * f[1] + 214.0 * f[2] - 156.0 * f[3] + 61.0 * f[4] - 10.0 * f[5]);
    d[1] = s * (10.0 * f[0] - 15.0 * f[1] - 4.0 * f[2] + 14.0 * f[3] - 6.0 * f[4] + f[5]);
    d[n] = s * (45.0 * f[n] - 154.0 * f[n - 1] + 214.0 * f[n - 2] - 156.0 * f[n - 3] + 61.0 * f[n - 4] - 10.0 * f[n - 5]);
    d[n - 1] = s * (10.0 * f[n] - 15.0 * f[n - 1] - 4.0 * f[n - 2] + 14.0 * f[n - 3] - 6.0 * f[n - 4] + f[n - 5]);
    return d;
}

std::vector<double> cumulative_integral_accurate(const Grid& grid, std::span<const double> f) {
    const std::size_t n = grid.cells();
    if (!grid.is_uniform() || n < 4) return measure::cumulative_integral(grid, f);
    if (f.size() != grid.size()) throw ShapeError("sampled function does not match grid");
    const double dt = grid.length() / static_cast<double>(n);
    std::vector<double> F(n + 1, 0.0);
    for (std::size_t c = 0; c < n; ++c) {
        double cell;
        if (c == 0) cell = 9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3];
        else if (c + 1 == n) cell = 9.0 * f[n] + 19.0 * f[n - 1] - 5.0 * f[n - 2] + f[n - 3];
        else cell = -f[c - 1] + 13.0 * f[c] + 13.0 * f[c + 1] - f[c + 2];
        F[c + 1] = F[c] + dt / 24.0 * cell;
    }
    return F;
}

// ---------------------------------------------------------------- Bochner

BochnerReport bochner_check(const WeightedInterval& w, std::span<const double> u, double lambda, double threshold) {
    require_size(w, u);
    const double N = w.N();
    const Grid& g = w.grid();
    const auto h = w.density();
    BochnerReport rep;
    rep.out_of_range = lambda < N || lambda > 2.0 * N;
    const double hmax = *std::max_element(h.begin(), h.end());
    std::size_t lo = 0, hi = h.size() - 1;
    while (lo < hi && h[lo] < threshold * hmax) ++lo;
    while (hi > lo && h[hi] < threshold * hmax) --hi;
    rep.window_lo = g[lo];
    rep.window_hi = g[hi];
    const auto upp = second_derivative_accurate(g, u);
    double s = 0.0;
    for (std::size_t c = lo; c < hi; ++c) {
        const double a = upp[c] + u[c];
        const double b = upp[c + 1] + u[c + 1];
        s += 0.5 * g.spacing(c) * (a * a * h[c] + b * b * h[c + 1]);
    }
    rep.norm = std::sqrt(s);
    const double gap = lambda - N;
    if (gap > 0.0) rep.ratio = rep.norm / std::sqrt(gap);
    else rep.ratio = rep.norm == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return rep;
}

// ---------------------------------------------------------------- Green operator

std::size_t density_argmax(const WeightedInterval& w) {
    const auto h = w.density();
    std::size_t best = 0;
    for (std::size_t i = 1; i < h.size(); ++i)
        if (h[i] > h[best]) best = i;
    return best;
}

GreenResult green_apply(const WeightedInterval& w, std::span<const double> z, std::optional<std::size_t> x0_index) {
    require_size(w, z);
    const Grid& g = w.grid();
    const std::size_t n = g.cells();
    const std::size_t i0 = x0_index ? *x0_index : density_argmax(w);
    if (i0 > n) throw PreconditionError("Green pivot index outside the grid");
    GreenResult res;
    res.x0 = g[i0];
    res.boundary_max = i0 == 0 || i0 == n;
    std::vector<double> zc(n + 1), zs(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        zc[i] = std::cos(g[i]) * z[i];
        zs[i] = std::sin(g[i]) * z[i];
    }
    const auto C = cumulative_integral_accurate(g, zc);
    const auto S = cumulative_integral_accurate(g, zs);
    res.v0.resize(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        // sin(t - s) = sin t cos s - cos t sin s
        res.v0[i] = std::sin(g[i]) * (C[i] - C[i0]) - std::cos(g[i]) * (S[i] - S[i0]);
    }
    res.v0[i0] = 0.0;
    res.norm_v0 = weighted_l2(w, res.v0);
    res.norm_z = weighted_l2(w, z);
    res.bound_holds = res.norm_v0 <= kPi * res.norm_z + 1e-8;
    const auto vpp = measure::second_derivative(g, res.v0);
    for (std::size_t i = 1; i < n; ++i) res.residual = std::max(res.residual, std::abs(vpp[i] + res.v0[i] - z[i]));
    return res;
}

std::vector<double> random_smooth(const Grid& grid, std::uint64_t seed, int degree) {
    std::mt19937_64 rng(seed);
    auto draw = [&] { return 2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0; };
    std::vector<double> a(degree + 1), b(degree + 1);
    for (int k = 0; k <= degree; ++k) {
        a[k] = draw() / (1.0 + k);
        b[k] = draw() / (1.0 + k);
    }
    return measure::sample(grid, [&](double t) {
        double s = 0.0;
        for (int k = 0; k <= degree; ++k) s += a[k] * std::cos(k * t) + b[k] * std::sin(k * t);
        return s;
    });
}

// ---------------------------------------------------------------- cosine comparison

namespace {

struct SignedDistances {
    int sign = 1;
    double l2 = 0.0;
    double w12 = 0.0;
};

SignedDistances distances_to_cosine(const WeightedInterval& w, std::span<const double> u) {
    const Grid& g = w.grid();
    const double amp = std::sqrt(w.N() + 1.0);
    const auto du = measure::derivative(g, u);
    SignedDistances best;
    double best_l2 = std::numeric_limits<double>::infinity();
    double best_w12 = std::numeric_limits<double>::infinity();
    for (int s : {1, -1}) {
        std::vector<double> f(u.size()), fp(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) {
            f[i] = u[i] - s * amp * std::cos(g[i]);
            fp[i] = du[i] + s * amp * std::sin(g[i]);
        }
        const double l2 = weighted_l2(w, f);
        const double d1 = weighted_l2(w, fp);
        const double w12 = std::sqrt(l2 * l2 + d1 * d1);
        if (l2 < best_l2) {
            best_l2 = l2;
            best.sign = s;
        }
        best_w12 = std::min(best_w12, w12);
    }
    best.l2 = best_l2;
    best.w12 = best_w12;
    return best;
}

WindowDistance window_distance(const WeightedInterval& w, std::span<const double> u, int sign, double lo, double hi) {
    const Grid& g = w.grid();
    const auto h = w.density();
    const double amp = std::sqrt(w.N() + 1.0);
    std::vector<double> f(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double d = u[i] - sign * amp * std::cos(g[i]);
        f[i] = d * d * h[i];
    }
    WindowDistance out;
    out.lo = std::max(lo, 0.0);
    out.hi = std::min(hi, g.length());
    out.dist_L2 = std::sqrt(std::max(0.0, measure::integrate_window(g, f, out.lo, out.hi)));
    return out;
}

}  // namespace

CosineReport cosine_distance(const WeightedInterval& w, std::span<const double> u) {
    require_size(w, u);
    CosineReport rep;
    const auto d = distances_to_cosine(w, u);
    rep.sign = d.sign;
    rep.dist_L2 = d.l2;
    rep.dist_W12 = d.w12;
    return rep;
}

CosineReport cosine_decompose(const WeightedInterval& w, std::span<const double> u, double /*lambda*/,
                              std::optional<double> r, double eta) {
    require_size(w, u);
    const Grid& g = w.grid();
    const std::size_t n = g.cells();
    CosineReport rep = cosine_distance(w, u);

    const auto upp = second_derivative_accurate(g, u);
    std::vector<double> z(n + 1);
    for (std::size_t i = 0; i <= n; ++i) z[i] = upp[i] + u[i];
    const auto green = green_apply(w, z);
    rep.u0_norm = green.norm_v0;
    rep.z_norm = green.norm_z;

    std::vector<double> sn(n + 1), cs(n + 1), rem(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        sn[i] = std::sin(g[i]);
        cs[i] = std::cos(g[i]);
        rem[i] = u[i] - green.v0[i];
    }
    auto inner = [&](const std::vector<double>& a, const std::vector<double>& b) {
        std::vector<double> p(n + 1);
        for (std::size_t i = 0; i <= n; ++i) p[i] = a[i] * b[i];
        return measure::integrate(w, p);
    };
    const double a11 = inner(sn, sn), a12 = inner(sn, cs), a22 = inner(cs, cs);
    const double b1 = inner(rem, sn), b2 = inner(rem, cs);
    const double det = a11 * a22 - a12 * a12;
    const double half_trace = 0.5 * (a11 + a22);
    const double top = half_trace + std::sqrt(std::max(0.0, half_trace * half_trace - det));
    if (!(det > 0.0) || !(det / top > 1e-12 * top))
        throw ConditioningError("sin/cos normal equations are singular on this interval");
    rep.alpha = (b1 * a22 - b2 * a12) / det;
    rep.beta = (a11 * b2 - a12 * b1) / det;
    for (std::size_t i = 0; i <= n; ++i)
        rep.reconstruction_error = std::max(rep.reconstruction_error, std::abs(rem[i] - rep.alpha * sn[i] - rep.beta * cs[i]));

    if (r) {
        if (!(*r > 0.0)) throw PreconditionError("window radius must be positive");
        rep.near_pole = window_distance(w, u, rep.sign, 0.0, *r);
        if (eta > 0.0) rep.shell = window_distance(w, u, rep.sign, *r - eta, *r + eta);
    }
    return rep;
}

// ---------------------------------------------------------------- local Poincare

PoincareReport poincare_check(const WeightedInterval& w, std::span<const double> u, double x, double r, int p) {
    require_size(w, u);
    if (p != 1 && p != 2) throw PreconditionError("Poincare exponent must be 1 or 2");
    if (!(r > 0.0)) throw PreconditionError("ball radius must be positive");
    const Grid& g = w.grid();
    const auto h = w.density();
    const std::size_t n = g.cells();
    auto ball_mass = [&](double lo, double hi) { return measure::integrate_window(g, h, lo, hi); };
    const double lo = std::max(0.0, x - r), hi = std::min(g.length(), x + r);
    const double lo10 = std::max(0.0, x - 10.0 * r), hi10 = std::min(g.length(), x + 10.0 * r);
    const double m1 = ball_mass(lo, hi);
    const double m10 = ball_mass(lo10, hi10);
    if (!(m1 > 0.0) || !(m10 > 0.0)) throw PreconditionError("ball is empty or has zero mass");

    std::vector<double> uh(n + 1);
    for (std::size_t i = 0; i <= n; ++i) uh[i] = u[i] * h[i];
    const double mean = measure::integrate_window(g, uh, lo, hi) / m1;
    std::vector<double> dev(n + 1);
    for (std::size_t i = 0; i <= n; ++i) dev[i] = std::pow(std::abs(u[i] - mean), p) * h[i];
    PoincareReport rep;
    rep.lhs = measure::integrate_window(g, dev, lo, hi) / m1;
    const auto du = measure::derivative(g, u);
    std::vector<double> grad(n + 1);
    for (std::size_t i = 0; i <= n; ++i) grad[i] = std::pow(std::abs(du[i]), p) * h[i];
    rep.rhs = r * measure::integrate_window(g, grad, lo10, hi10) / m10;
    if (rep.rhs > 0.0) rep.ratio = rep.lhs / rep.rhs;
    else rep.ratio = rep.lhs == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return rep;
}

}  // namespace obatalab::spectral
