#include "obatalab/localization.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>

#include "obatalab/errors.hpp"
#include "obatalab/format.hpp"
#include "obatalab/parallel.hpp"
#include "obatalab/spectral.hpp"

namespace obatalab::loc {

using measure::Grid;
using measure::kPi;
using measure::Rule;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double simpson(const Grid& grid, std::span<const double> f) {
    return measure::integrate_plain(grid, f, Rule::Simpson);
}

/// x^p with 0^p = 0 for the envelopes.
double power(double x, double p) { return x > 0.0 ? std::pow(x, p) : 0.0; }

/// lhs / rhs; with a vanishing envelope, lhs at rounding level counts as 0.
double ratio_of(double lhs, double rhs) {
    if (rhs > 0.0) return lhs / rhs;
    return std::abs(lhs) <= kRigidTolerance ? 0.0 : kInf;
}

double cached_diameter_constant(double N) {
    static std::mutex m;
    static std::map<double, double> cache;
    std::lock_guard lock(m);
    auto it = cache.find(N);
    if (it == cache.end()) it = cache.emplace(N, spectral::diameter_constant(N)).first;
    return it->second;
}

void require_selection(const DeficitLedger& ledger) {
    if (!(ledger.beta > 0.0)) throw PreconditionError("long rays have not been selected");
}

}  // namespace

// ---------------------------------------------------------------- construction

Ray make_ray(double weight, WeightedInterval density, std::vector<double> u,
             std::optional<std::vector<double>> du, std::optional<std::vector<double>> e, MassRule rule) {
    const Grid& grid = density.grid();
    if (!grid.is_uniform() || grid.cells() % 2 != 0)
        throw PreconditionError("ray grids must be uniform with an even cell count");
    if (u.size() != grid.size()) throw ShapeError("ray function does not match the ray grid");
    const double mass = simpson(grid, density.density());
    if (!(mass > 0.0)) throw NormalizationError("ray density has no mass");
    std::vector<double> h(density.density().begin(), density.density().end());
    for (double& x : h) x /= mass;

    Ray ray{weight, std::nullopt, std::nullopt,
            WeightedInterval(grid, std::move(h), density.K(), density.N()), rule, {}, {}, {}};
    ray.du = du ? std::move(*du) : measure::derivative(grid, u);
    ray.e = e ? std::move(*e) : std::vector<double>(grid.size(), 0.0);
    ray.u = std::move(u);
    if (ray.du.size() != grid.size() || ray.e.size() != grid.size())
        throw ShapeError("ray derivative or energy does not match the ray grid");
    return ray;
}

Ray model_ray(double N, double D, double weight, double amplitude, double s, std::size_t cells) {
    const bool full = std::abs(D - kPi) <= 1e-12;
    auto w = full ? measure::truncated_model(N, kPi, cells) : measure::truncated_model(N, D, cells);
    const Grid& grid = w.grid();
    auto u = measure::sample(grid, [&](double t) { return amplitude * (std::cos(t) + s * std::sin(2.0 * t)); });
    auto du = measure::sample(grid, [&](double t) { return amplitude * (-std::sin(t) + 2.0 * s * std::cos(2.0 * t)); });
    return make_ray(weight, std::move(w), std::move(u), std::move(du), std::nullopt,
                    full ? MassRule::Model : MassRule::Truncated);
}

void validate(const RayFamily& f) {
    if (!(f.N > 1.0)) throw ParameterDomainError("N must exceed 1");
    if (f.rays.size() > kMaxRays) throw PreconditionError("at most 10000 rays are supported");
    if (!(f.unspanned_mass >= 0.0)) throw PreconditionError("unspanned mass must be non-negative");
    double total = f.unspanned_mass;
    for (std::size_t i = 0; i < f.rays.size(); ++i) {
        const Ray& r = f.rays[i];
        const std::string at = "ray " + std::to_string(i) + ": ";
        if (!(r.weight > 0.0)) throw PreconditionError(at + "weight must be positive");
        if (!(r.length() > 0.0 && r.length() <= kPi * (1.0 + 1e-14)))
            throw PreconditionError(at + "length must lie in (0, pi]");
        if ((r.a && !(*r.a >= 0.0)) || (r.b && !(*r.b >= 0.0)))
            throw PreconditionError(at + "pole offsets must be non-negative");
        const std::size_t n = r.density.grid().size();
        if (r.u.size() != n || r.du.size() != n || r.e.size() != n)
            throw ShapeError(at + "samples do not match the ray grid");
        for (double x : r.e)
            if (!(x >= 0.0)) throw PreconditionError(at + "orthogonal energy must be non-negative");
        total += r.weight;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw NormalizationError("ray weights plus unspanned mass sum to " + format_double(total));
}

double ray_integral(const Ray& ray, std::span<const double> f) {
    return measure::integrate(ray.density, f, Rule::Simpson);
}

double total_mass(const RayFamily& f) {
    double m = f.unspanned_mass;
    for (const Ray& r : f.rays) m += r.weight * simpson(r.density.grid(), r.density.density());
    return m;
}

// ---------------------------------------------------------------- normalization

namespace {

std::vector<double> centred(const Ray& ray) {
    const double mean = ray_integral(ray, ray.u);
    std::vector<double> v(ray.u);
    for (double& x : v) x -= mean;
    return v;
}

}  // namespace

double normalization_scale(const RayFamily& f) {
    double total = 0.0;
    for (const Ray& r : f.rays) {
        auto v = centred(r);
        for (double& x : v) x *= x;
        total += r.weight * ray_integral(r, v);
    }
    if (!(total > 0.0)) throw PreconditionError("u vanishes on every ray");
    return 1.0 / std::sqrt(total);
}

RayFamily normalize(const RayFamily& f) {
    const double scale = normalization_scale(f);
    RayFamily g = f;
    for (Ray& r : g.rays) {
        r.u = centred(r);
        for (double& x : r.u) x *= scale;
        for (double& x : r.du) x *= scale;
    }
    return g;
}

// ---------------------------------------------------------------- deficit ledger

std::vector<RayStats> ray_stats(const RayFamily& f) {
    std::vector<std::size_t> idx(f.rays.size());
    std::iota(idx.begin(), idx.end(), 0);
    const double k = std::sqrt(f.N + 1.0);
    return parallel_map(idx, [&](std::size_t i) {
        const Ray& r = f.rays[i];
        const auto t = r.density.grid().nodes();
        const std::size_t n = t.size();
        const double a = r.a.value_or(0.0);
        RayStats s;
        std::vector<double> buf(n);
        auto integral = [&](auto&& g) {
            for (std::size_t j = 0; j < n; ++j) buf[j] = g(j);
            return ray_integral(r, buf);
        };
        s.mean = integral([&](std::size_t j) { return r.u[j]; });
        s.l2 = integral([&](std::size_t j) { return r.u[j] * r.u[j]; });
        s.grad = integral([&](std::size_t j) { return r.du[j] * r.du[j]; });
        s.orth = integral([&](std::size_t j) { return r.e[j]; });
        s.c = std::sqrt(s.l2);
        if (s.c > 0.0) {
            s.delta = s.grad / s.l2 - f.N;
            s.dist_plus = std::sqrt(integral([&](std::size_t j) {
                const double d = r.u[j] / s.c - k * std::cos(t[j]);
                return d * d;
            }));
            s.dist_minus = std::sqrt(integral([&](std::size_t j) {
                const double d = r.u[j] / s.c + k * std::cos(t[j]);
                return d * d;
            }));
        }
        s.final_plus = integral([&](std::size_t j) {
            const double d = r.u[j] - k * std::cos(t[j] + a);
            return d * d;
        });
        s.final_minus = integral([&](std::size_t j) {
            const double d = r.u[j] + k * std::cos(t[j] + a);
            return d * d;
        });
        return s;
    });
}

DeficitLedger global_deficit(const RayFamily& f) {
    DeficitLedger L;
    L.N = f.N;
    L.stats = ray_stats(f);
    double energy = 0.0;
    L.lichnerowicz_worst = kInf;
    for (std::size_t i = 0; i < f.rays.size(); ++i) {
        const RayStats& s = L.stats[i];
        const double q = f.rays[i].weight;
        energy += q * (s.grad + s.orth);
        L.orth_energy += q * s.orth;
        L.c.push_back(s.c);
        L.delta_q.push_back(s.delta);
        if (s.delta) L.split_sum += q * *s.delta * s.l2;
        L.lichnerowicz_worst = std::min(L.lichnerowicz_worst, s.grad - f.N * s.l2);
    }
    if (f.rays.empty()) L.lichnerowicz_worst = 0.0;
    L.delta = energy - f.N;
    L.rigid = std::abs(L.delta) <= kRigidTolerance;
    L.split_holds = L.delta >= L.split_sum - kIdentitySlack;
    L.orth_holds = L.orth_energy <= L.delta + kIdentitySlack;
    return L;
}

// ---------------------------------------------------------------- long rays

LongRayReport select_long_rays(const RayFamily& f, DeficitLedger& L, double beta) {
    if (!(beta > 0.0 && beta < 1.0)) throw PreconditionError("beta must lie in (0, 1)");
    if (L.delta < -kRigidTolerance)
        throw NonCdInputError("negative deficit " + format_double(L.delta) + ": some ray breaks the spectral gap bound");
    L.beta = beta;
    const double d = L.effective_delta();
    LongRayReport rep;
    rep.threshold = power(d, beta);
    rep.certificate = power(d, 1.0 - beta);
    rep.length_bound = rep.threshold / cached_diameter_constant(f.N);

    L.Q_long.clear();
    L.long_mass = 0.0;
    for (std::size_t i = 0; i < f.rays.size(); ++i) {
        const double q = f.rays[i].weight;
        const double c2 = L.stats[i].l2;
        const bool is_long = L.c[i] > 0.0 && (L.rigid || *L.delta_q[i] <= rep.threshold);
        if (!is_long) {
            rep.outside_c2 += q * c2;
            continue;
        }
        L.Q_long.push_back(i);
        L.long_mass += q;
        rep.inside_c2 += q * c2;
        const double defect = std::pow(kPi - std::min(f.rays[i].length(), kPi), f.N);
        rep.worst_length = std::max(rep.worst_length, defect);
        if (defect > rep.length_bound + 1e-12)
            throw NonCdInputError("ray " + std::to_string(i) + " is long but too short for its deficit: (pi - D)^N = " +
                                  format_double(defect) + " > " + format_double(rep.length_bound));
    }
    L.one_minus_mass = 1.0 - L.long_mass;
    rep.outside_holds = rep.outside_c2 <= rep.certificate + kIdentitySlack;
    rep.inside_holds = rep.inside_c2 >= 1.0 - rep.certificate - kIdentitySlack;
    return rep;
}

BadSetReport bad_set_energy(const RayFamily& f, const DeficitLedger& L) {
    require_selection(L);
    std::vector<bool> is_long(f.rays.size(), false);
    for (auto i : L.Q_long) is_long[i] = true;
    BadSetReport rep;
    for (std::size_t i = 0; i < f.rays.size(); ++i)
        if (!is_long[i]) rep.value += f.rays[i].weight * (L.stats[i].grad + L.stats[i].orth);
    rep.bound = (f.N + 1.0) * power(L.effective_delta(), 1.0 - L.beta);
    rep.ratio = ratio_of(rep.value, rep.bound);
    rep.holds = rep.value <= rep.bound + kIdentitySlack;
    return rep;
}

CosineRayReport per_ray_cosine(const RayFamily& f, DeficitLedger& L) {
    require_selection(L);
    if (L.Q_long.empty()) throw PreconditionError("no long rays");
    CosineRayReport rep;
    for (auto i : L.Q_long) {
        const RayStats& s = L.stats[i];
        const bool minus = s.dist_minus < s.dist_plus;
        L.c[i] = minus ? -s.c : s.c;
        const double d = minus ? s.dist_minus : s.dist_plus;
        rep.distances.push_back(d);
        rep.max_distance = std::max(rep.max_distance, d);
    }
    rep.exponent = L.beta * std::min(0.5, 1.0 / f.N);
    rep.scale = power(L.effective_delta(), rep.exponent);
    rep.constant = ratio_of(rep.max_distance, rep.scale);
    return rep;
}

// ---------------------------------------------------------------- envelopes

EnvelopeBound variance_bound(const RayFamily& f, DeficitLedger& L, double beta, double gamma) {
    require_selection(L);
    const double N = f.N;
    if (beta != L.beta) throw PreconditionError("beta differs from the one used to select long rays");
    if (!(gamma > 0.0 && gamma < beta && beta < 1.0 && gamma < N * (1.0 - beta) / (N - 1.0)))
        throw PreconditionError("variance bound needs 0 < gamma < beta < 1 and gamma < N(1-beta)/(N-1)");
    if (L.Q_long.empty()) throw PreconditionError("no long rays");
    double sum = 0.0;
    for (auto i : L.Q_long) sum += f.rays[i].weight * L.c[i];
    L.cbar = sum / L.long_mass;
    double var = 0.0;
    for (auto i : L.Q_long) {
        const double d = L.c[i] - L.cbar;
        var += f.rays[i].weight * d * d;
    }
    L.variance = var / L.long_mass;
    L.gamma = gamma;
    const double d = L.effective_delta();
    L.r = power(d, gamma / N);

    EnvelopeBound b;
    b.lhs = L.variance;
    b.rhs = power(d, 3.0 * gamma / N) + power(d, 1.0 - beta - gamma + gamma / N) +
            power(d, (beta - gamma) * std::min(2.0 / N, 1.0));
    b.ratio = ratio_of(b.lhs, b.rhs);
    b.flagged = !(b.ratio <= kConstantCeiling);
    return b;
}

LongMassReport long_mass_bound(const RayFamily& f, DeficitLedger& L, double beta, double gamma) {
    require_selection(L);
    const double N = f.N;
    if (beta != L.beta) throw PreconditionError("beta differs from the one used to select long rays");
    if (!(gamma > 0.0 && gamma < std::min(beta, 1.0 - beta)))
        throw PreconditionError("long-ray mass bound needs 0 < gamma < min(beta, 1 - beta)");
    L.gamma = gamma;
    const double d = L.effective_delta();
    L.r = power(d, gamma / N);
    LongMassReport rep;
    rep.bound.lhs = L.one_minus_mass * L.one_minus_mass;
    rep.bound.rhs = power(d, 2.0 * gamma / N) + power(d, (beta - gamma) / N) + power(d, 1.0 - beta - gamma);
    rep.bound.ratio = ratio_of(rep.bound.lhs, rep.bound.rhs);
    rep.bound.flagged = !(rep.bound.ratio <= kConstantCeiling);
    rep.unspanned = f.unspanned_mass;
    rep.unspanned_holds = f.unspanned_mass <= L.one_minus_mass + kIdentitySlack;
    return rep;
}

// ---------------------------------------------------------------- assembly

AssemblyReport assemble_main(const RayFamily& f, DeficitLedger& L) {
    for (std::size_t i = 0; i < f.rays.size(); ++i)
        if (!f.rays[i].a) throw PreconditionError("ray " + std::to_string(i) + " has no start offset");
    // Off the rays u = 0 and the mass is distributed like m_N, where (N+1) cos^2 has unit mean.
    double plus = f.unspanned_mass, minus = f.unspanned_mass;
    for (std::size_t i = 0; i < f.rays.size(); ++i) {
        plus += f.rays[i].weight * L.stats[i].final_plus;
        minus += f.rays[i].weight * L.stats[i].final_minus;
    }
    AssemblyReport rep;
    rep.sign = minus < plus ? -1 : 1;
    rep.final_dist = std::sqrt(std::max(0.0, std::min(plus, minus)));
    rep.eta = target_exponent(f.N);
    rep.scale = power(L.effective_delta(), rep.eta);
    rep.constant = ratio_of(rep.final_dist, rep.scale);
    L.eta = rep.eta;
    L.final_dist = rep.final_dist;
    return rep;
}

// ---------------------------------------------------------------- volume

double pole_gap(const RayFamily& f) {
    if (f.pole_gap) return *f.pole_gap;
    double span = kPi;
    for (const Ray& r : f.rays) span = std::min(span, r.a.value_or(0.0) + r.length() + r.b.value_or(0.0));
    return std::max(0.0, kPi - span);
}

double ray_ball_mass(const RayFamily& f, const Ray& ray, double x) {
    const double D = ray.length();
    if (x <= 0.0) return 0.0;
    if (x >= D) return 1.0;
    switch (ray.mass_rule) {
        case MassRule::Model: return measure::model_mass(f.N, 0.0, x);
        case MassRule::Truncated: return measure::model_mass(f.N, 0.0, x) / measure::model_mass(f.N, 0.0, D);
        case MassRule::Samples: break;
    }
    const Grid& grid = ray.density.grid();
    const auto h = ray.density.density();
    const auto F = spectral::cumulative_integral_accurate(grid, h);
    const std::size_t c = grid.locate(x);
    return (F[c] + measure::integrate_window(grid, h, grid[c], x)) / F.back();
}

double ball_measure(const RayFamily& f, double r) {
    double m = f.unspanned_mass * measure::model_mass(f.N, 0.0, r);
    for (std::size_t i = 0; i < f.rays.size(); ++i) {
        const Ray& ray = f.rays[i];
        if (!ray.a) throw PreconditionError("ray " + std::to_string(i) + " has no start offset");
        m += ray.weight * ray_ball_mass(f, ray, r - *ray.a);
    }
    return m;
}

VolumeCheck volume_check(const RayFamily& f, double r) {
    const double gap = pole_gap(f);
    if (!(r > 0.0 && r < kPi - gap)) throw PreconditionError("radius must lie in (0, pi - pole gap)");
    VolumeCheck v;
    v.r = r;
    v.ball = ball_measure(f, r);
    v.lower = measure::model_mass(f.N, 0.0, r);
    v.upper = measure::model_mass(f.N, 0.0, std::min(kPi, r + gap));
    v.lower_holds = v.ball >= v.lower - kVolumeSlack;
    v.upper_holds = v.ball <= v.upper + kVolumeSlack;
    return v;
}

VolumeCheck volume_control(const RayFamily& f, double r) {
    auto v = volume_check(f, r);
    if (!v.lower_holds || !v.upper_holds)
        throw NonCdInputError("ball of radius " + format_double(r) + " has measure " + format_double(v.ball) +
                              " outside [" + format_double(v.lower) + ", " + format_double(v.upper) + "]");
    return v;
}

std::vector<VolumeCheck> volume_profile(const RayFamily& f, std::size_t count) {
    const double top = kPi - pole_gap(f);
    std::vector<VolumeCheck> out;
    for (std::size_t j = 1; j <= count; ++j)
        out.push_back(volume_check(f, top * static_cast<double>(j) / static_cast<double>(count + 1)));
    return out;
}

PoleReport pole_concentration(const RayFamily& f, const DeficitLedger& L) {
    require_selection(L);
    PoleReport rep;
    for (auto i : L.Q_long) {
        const Ray& r = f.rays[i];
        if (!r.a || !r.b) throw PreconditionError("ray " + std::to_string(i) + " has no pole offsets");
        rep.max_start = std::max(rep.max_start, *r.a);
        rep.max_end = std::max(rep.max_end, *r.b);
    }
    rep.scale = power(L.effective_delta(), L.beta / f.N);
    rep.threshold = 2.0 * std::pow(cached_diameter_constant(f.N), -1.0 / f.N) * rep.scale;
    rep.flagged = std::max(rep.max_start, rep.max_end) > rep.threshold + 1e-12;
    return rep;
}

// ---------------------------------------------------------------- pipeline

double default_beta(double N) { return 3.0 * N / (4.0 * N + 2.0); }
double default_gamma(double N) { return N / (4.0 * N + 2.0); }
double target_exponent(double N) { return 1.0 / (8.0 * N + 4.0); }

bool Report::violation() const {
    return !ledger.split_holds || !ledger.orth_holds || ledger.lichnerowicz_worst < -kIdentitySlack ||
           !long_rays.outside_holds || !long_rays.inside_holds || !bad_set.holds ||
           (variance && variance->flagged) || long_mass.bound.flagged || !long_mass.unspanned_holds ||
           (poles && poles->flagged);
}

Report localize(const RayFamily& f, const Params& params) {
    validate(f);
    const RayFamily g = normalize(f);
    Report rep;
    rep.ledger = global_deficit(g);
    const double beta = params.beta.value_or(default_beta(g.N));
    const double gamma = params.gamma.value_or(default_gamma(g.N));
    rep.long_rays = select_long_rays(g, rep.ledger, beta);
    rep.bad_set = bad_set_energy(g, rep.ledger);
    if (!rep.ledger.Q_long.empty()) {
        rep.cosine = per_ray_cosine(g, rep.ledger);
        rep.variance = variance_bound(g, rep.ledger, beta, gamma);
    }
    rep.long_mass = long_mass_bound(g, rep.ledger, beta, gamma);
    const bool starts = std::all_of(g.rays.begin(), g.rays.end(), [](const Ray& r) { return r.a.has_value(); });
    const bool ends = std::all_of(g.rays.begin(), g.rays.end(), [](const Ray& r) { return r.b.has_value(); });
    if (starts) rep.assembly = assemble_main(g, rep.ledger);
    if (starts && ends) rep.poles = pole_concentration(g, rep.ledger);
    return rep;
}

SweepAnalysis analyze_sweep(std::span<const Report> reports) {
    SweepAnalysis out;
    std::vector<double> deltas, dists, var, mass;
    for (const Report& r : reports) {
        const auto& L = r.ledger;
        out.identities_hold = out.identities_hold && L.split_holds && L.orth_holds && r.long_rays.outside_holds &&
                              r.long_rays.inside_holds;
        if (L.rigid) continue;
        deltas.push_back(L.delta);
        dists.push_back(L.final_dist);
        var.push_back(r.variance ? r.variance->ratio : 0.0);
        mass.push_back(r.long_mass.bound.ratio);
    }
    if (deltas.size() < 3) throw PreconditionError("sweep needs at least three members with positive deficit");
    out.final_fit = obata::fit_loglog(deltas, dists);
    out.variance_range = obata::constant_range(var);
    out.mass_range = obata::constant_range(mass);
    return out;
}

// ---------------------------------------------------------------- file format

namespace {

struct Samples {
    std::vector<double> t, v;
};

Samples read_two_column_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    Samples s;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw ParseError(path.string() + ":" + std::to_string(lineno) + ": expected two columns");
        double t = 0.0, v = 0.0;
        const char* b = line.data();
        auto r1 = std::from_chars(b, b + comma, t);
        auto r2 = std::from_chars(b + comma + 1, b + line.size(), v);
        if (r1.ec != std::errc{} || r2.ec != std::errc{} || r1.ptr != b + comma || r2.ptr != b + line.size()) {
            if (s.t.empty() && lineno == 1) continue;  // header
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": malformed number");
        }
        if (!s.t.empty() && !(t > s.t.back())) throw ParseError(path.string() + ": abscissae must increase");
        s.t.push_back(t);
        s.v.push_back(v);
    }
    if (s.t.size() < 2) throw ParseError(path.string() + ": needs at least two rows");
    return s;
}

/// Piecewise-linear resampling onto grid; the samples must span [0, D].
std::vector<double> resample(const Samples& s, const Grid& grid, const std::string& what) {
    const double D = grid.length();
    const double tol = 1e-9 * std::max(1.0, D);
    if (s.t.front() > tol || s.t.back() < D - tol) throw ParseError(what + " samples do not span the ray");
    std::vector<double> out(grid.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double t = grid[i];
        while (k + 2 < s.t.size() && s.t[k + 1] < t) ++k;
        const double w = std::clamp((t - s.t[k]) / (s.t[k + 1] - s.t[k]), 0.0, 1.0);
        out[i] = (1.0 - w) * s.v[k] + w * s.v[k + 1];
    }
    return out;
}

const nlohmann::json& field(const nlohmann::json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) throw ParseError(where + ": missing field '" + key + "'");
    return j.at(key);
}

double number(const nlohmann::json& j, const char* key, const std::string& where) {
    const auto& v = field(j, key, where);
    if (!v.is_number()) throw ParseError(where + ": field '" + key + "' must be a number");
    return v.get<double>();
}

const nlohmann::json& params_of(const nlohmann::json& spec) {
    static const nlohmann::json empty = nlohmann::json::object();
    return spec.contains("params") ? spec.at("params") : empty;
}

std::string kind_of(const nlohmann::json& spec, const std::string& where) {
    const auto& k = field(spec, "kind", where);
    if (!k.is_string()) throw ParseError(where + ": kind must be a string");
    return k.get<std::string>();
}

Ray read_ray(const nlohmann::json& j, double N, std::size_t cells, const std::filesystem::path& base,
             const std::string& where) {
    const double weight = number(j, "weight", where);
    const double D = number(j, "D", where);
    if (!(D > 0.0 && D <= kPi + 1e-12)) throw ParseError(where + ": D must lie in (0, pi]");
    const Grid grid = Grid::uniform(std::min(D, kPi), cells);

    const auto& dspec = field(j, "density", where);
    const std::string dkind = kind_of(dspec, where + ".density");
    std::optional<WeightedInterval> density;
    MassRule rule = MassRule::Samples;
    if (dkind == "model") {
        if (std::abs(D - kPi) > 1e-12) throw ParseError(where + ": model rays have D = pi");
        density = measure::model_density(N, grid);
        rule = MassRule::Model;
    } else if (dkind == "truncated") {
        density = measure::truncated_model(N, D, cells);
        rule = MassRule::Truncated;
    } else if (dkind == "csv") {
        const auto path = base / field(params_of(dspec), "path", where + ".density").get<std::string>();
        const auto raw = measure::read_density_csv_file(path.string(), N - 1.0, N);
        if (std::abs(raw.length() - D) > 1e-9 * std::max(1.0, D))
            throw ParseError(where + ": density file length " + format_double(raw.length()) + " differs from D");
        if (!measure::cd_check(raw).pass)
            throw NonCdInputError(where + ": density " + path.string() + " fails the CD(N-1, N) check");
        density.emplace(grid, measure::sample(grid, [&](double t) { return raw.density_at(std::min(t, raw.length())); }),
                        N - 1.0, N);
    } else {
        throw ParseError(where + ": unknown density kind '" + dkind + "'");
    }

    const auto& uspec = field(j, "u", where);
    const std::string ukind = kind_of(uspec, where + ".u");
    std::vector<double> u;
    std::optional<std::vector<double>> du;
    if (ukind == "cosine" || ukind == "perturbed") {
        const auto& p = params_of(uspec);
        const double A = p.contains("amplitude") ? number(p, "amplitude", where + ".u") : 1.0;
        const double s = ukind == "perturbed" ? number(p, "s", where + ".u") : 0.0;
        u = measure::sample(grid, [&](double t) { return A * (std::cos(t) + s * std::sin(2.0 * t)); });
        du = measure::sample(grid, [&](double t) { return A * (-std::sin(t) + 2.0 * s * std::cos(2.0 * t)); });
    } else if (ukind == "csv") {
        const auto path = base / field(params_of(uspec), "path", where + ".u").get<std::string>();
        u = resample(read_two_column_csv(path), grid, where + ".u");
    } else {
        throw ParseError(where + ": unknown function kind '" + ukind + "'");
    }

    std::vector<double> e(grid.size(), 0.0);
    if (j.contains("e")) {
        const auto& espec = j.at("e");
        const std::string ekind = kind_of(espec, where + ".e");
        if (ekind == "const") {
            std::fill(e.begin(), e.end(), number(params_of(espec), "value", where + ".e"));
        } else if (ekind == "csv") {
            const auto path = base / field(params_of(espec), "path", where + ".e").get<std::string>();
            e = resample(read_two_column_csv(path), grid, where + ".e");
        } else if (ekind != "zero") {
            throw ParseError(where + ": unknown energy kind '" + ekind + "'");
        }
    }

    Ray ray = make_ray(weight, std::move(*density), std::move(u), std::move(du), std::move(e), rule);
    if (j.contains("a")) ray.a = number(j, "a", where);
    if (j.contains("b")) ray.b = number(j, "b", where);
    return ray;
}

}  // namespace

RayFamily read_family(const nlohmann::json& doc, const std::filesystem::path& base_dir, std::size_t cells) {
    try {
        if (!doc.is_object()) throw ParseError("family document must be an object");
        const auto& schema = field(doc, "schema", "family");
        if (!schema.is_string() || schema.get<std::string>() != kSchema)
            throw ParseError("family schema must be '" + std::string(kSchema) + "'");
        RayFamily f;
        f.N = number(doc, "N", "family");
        if (!(f.N > 1.0)) throw ParameterDomainError("N must exceed 1");
        f.unspanned_mass = doc.contains("unspanned_mass") ? number(doc, "unspanned_mass", "family") : 0.0;
        if (doc.contains("cells")) {
            const auto& c = doc.at("cells");
            if (!c.is_number_unsigned()) throw ParseError("family: cells must be a positive integer");
            cells = c.get<std::size_t>();
        }
        if (cells < 16 || cells % 2 != 0) throw ParseError("family: cells must be even and at least 16");
        if (doc.contains("pole_gap")) f.pole_gap = number(doc, "pole_gap", "family");
        const auto& rays = field(doc, "rays", "family");
        if (!rays.is_array()) throw ParseError("family: rays must be an array");
        for (std::size_t i = 0; i < rays.size(); ++i)
            f.rays.push_back(read_ray(rays[i], f.N, cells, base_dir, "rays[" + std::to_string(i) + "]"));
        validate(f);
        return f;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("family document: ") + e.what());
    }
}

RayFamily read_family_file(const std::filesystem::path& path, std::size_t cells) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return read_family(doc, path.parent_path(), cells);
}

// ---------------------------------------------------------------- output

namespace {

nlohmann::json envelope_json(const EnvelopeBound& b) {
    return {{"lhs", b.lhs}, {"rhs", b.rhs}, {"ratio", b.ratio}, {"flagged", b.flagged}};
}

}  // namespace

nlohmann::json report_summary(const Report& r) {
    const auto& L = r.ledger;
    nlohmann::json j;
    nlohmann::json dq = nlohmann::json::array();
    for (const auto& d : L.delta_q) dq.push_back(d ? nlohmann::json(*d) : nlohmann::json());
    j["ledger"] = {{"N", L.N},
                   {"delta", L.delta},
                   {"rigid", L.rigid},
                   {"split_sum", L.split_sum},
                   {"orth_energy", L.orth_energy},
                   {"split_holds", L.split_holds},
                   {"orth_holds", L.orth_holds},
                   {"lichnerowicz_worst", L.lichnerowicz_worst},
                   {"c", L.c},
                   {"delta_q", dq},
                   {"Q_long", L.Q_long},
                   {"long_mass", L.long_mass},
                   {"cbar", L.cbar},
                   {"variance", L.variance},
                   {"one_minus_mass", L.one_minus_mass},
                   {"beta", L.beta},
                   {"gamma", L.gamma},
                   {"r", L.r},
                   {"eta", L.eta},
                   {"final_dist", L.final_dist}};
    const auto& lr = r.long_rays;
    j["long_rays"] = {{"threshold", lr.threshold},       {"outside_c2", lr.outside_c2},
                      {"inside_c2", lr.inside_c2},       {"certificate", lr.certificate},
                      {"outside_holds", lr.outside_holds}, {"inside_holds", lr.inside_holds},
                      {"length_bound", lr.length_bound}, {"worst_length", lr.worst_length}};
    j["bad_set"] = {{"value", r.bad_set.value}, {"bound", r.bad_set.bound}, {"ratio", r.bad_set.ratio},
                    {"holds", r.bad_set.holds}};
    if (r.cosine)
        j["per_ray_cosine"] = {{"max_distance", r.cosine->max_distance}, {"exponent", r.cosine->exponent},
                               {"scale", r.cosine->scale}, {"constant", r.cosine->constant}};
    if (r.variance) j["variance"] = envelope_json(*r.variance);
    j["long_mass"] = envelope_json(r.long_mass.bound);
    j["long_mass"]["unspanned"] = r.long_mass.unspanned;
    j["long_mass"]["unspanned_holds"] = r.long_mass.unspanned_holds;
    if (r.assembly)
        j["assembly"] = {{"final_dist", r.assembly->final_dist}, {"sign", r.assembly->sign},
                         {"eta", r.assembly->eta}, {"scale", r.assembly->scale},
                         {"constant", r.assembly->constant}};
    if (r.poles)
        j["poles"] = {{"max_start", r.poles->max_start}, {"max_end", r.poles->max_end},
                      {"scale", r.poles->scale}, {"threshold", r.poles->threshold},
                      {"flagged", r.poles->flagged}};
    j["violation"] = r.violation();
    return j;
}

void write_ray_csv(std::ostream& out, const RayFamily& f, const Report& r) {
    const auto& L = r.ledger;
    std::vector<std::optional<double>> dist(f.rays.size());
    if (r.cosine)
        for (std::size_t k = 0; k < L.Q_long.size(); ++k) dist[L.Q_long[k]] = r.cosine->distances[k];
    std::vector<bool> is_long(f.rays.size(), false);
    for (auto i : L.Q_long) is_long[i] = true;
    auto opt = [](const std::optional<double>& x) { return x ? format_double(*x) : std::string(); };
    out << "index,weight,length,a,b,c,delta_q,long,distance\n";
    for (std::size_t i = 0; i < f.rays.size(); ++i) {
        const Ray& ray = f.rays[i];
        out << i << ',' << format_double(ray.weight) << ',' << format_double(ray.length()) << ',' << opt(ray.a)
            << ',' << opt(ray.b) << ',' << format_double(L.c[i]) << ',' << opt(L.delta_q[i]) << ','
            << (is_long[i] ? 1 : 0) << ',' << opt(dist[i]) << '\n';
    }
}

}  // namespace obatalab::loc
