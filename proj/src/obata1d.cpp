#include "obatalab/obata1d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "obatalab/errors.hpp"
#include "obatalab/format.hpp"
#include "obatalab/parallel.hpp"
#include "obatalab/spectral.hpp"

namespace obatalab::obata {

using measure::Grid;
using measure::kPi;

std::string family_name(Family f) {
    switch (f) {
        case Family::TruncatedModel: return "truncated-model";
        case Family::PerturbedCosine: return "perturbed-cosine";
        case Family::SeededGenerated: return "seeded-generated";
    }
    return "unknown";
}

Family parse_family(const std::string& name) {
    if (name == "truncated-model") return Family::TruncatedModel;
    if (name == "perturbed-cosine") return Family::PerturbedCosine;
    if (name == "seeded-generated") return Family::SeededGenerated;
    throw ParameterDomainError("unknown family '" + name + "'");
}

FitResult fit_loglog(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ShapeError("fit_loglog: x and y differ in length");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] > 0.0 && y[i] > 0.0 && std::isfinite(x[i]) && std::isfinite(y[i])) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(y[i]));
        }
    }
    FitResult fit;
    fit.points = lx.size();
    if (fit.points < 2) {
        fit.flagged = true;
        return fit;
    }
    const double n = static_cast<double>(fit.points);
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    if (!(sxx > 0.0)) {
        fit.flagged = true;
        return fit;
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    fit.flagged = fit.r_squared < 0.98 || fit.points < 3;
    return fit;
}

double constant_range(std::span<const double> values) {
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (double v : values) {
        if (!(v > 0.0)) return std::numeric_limits<double>::infinity();
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return hi / lo;
}

void require_geometric(std::span<const double> params, std::size_t min_points) {
    if (params.size() < min_points)
        throw ParameterDomainError("sweep needs at least " + std::to_string(min_points) + " points, got " +
                                   std::to_string(params.size()));
    for (double p : params)
        if (!(p > 0.0) || !std::isfinite(p)) throw ParameterDomainError("sweep parameters must be positive");
    const double q = params[1] / params[0];
    for (std::size_t i = 2; i < params.size(); ++i)
        if (std::abs(params[i] / params[i - 1] - q) > 1e-9 * std::abs(q))
            throw ParameterDomainError("sweep parameters are not geometric");
}

namespace {

std::vector<double> seeded_levels(std::uint64_t seed, double eps) {
    // total excess small enough that the first zero of w stays beyond pi - eps
    std::mt19937_64 rng(seed);
    std::vector<double> levels(4);
    for (double& a : levels) a = static_cast<double>(rng() >> 11) * 0x1.0p-53 * eps / kPi;
    return levels;
}

SweepRow sweep_row(const ExperimentSpec& spec, double param, double model_lambda) {
    const double N = spec.N;
    SweepRow row;
    row.param = param;
    std::vector<double> u;
    std::optional<WeightedInterval> w;
    switch (spec.family) {
        case Family::PerturbedCosine: {
            w.emplace(measure::model_density(N, Grid::uniform(kPi, spec.cells)));
            u = measure::sample(w->grid(), [param](double t) { return std::cos(t) + param * std::sin(2.0 * t); });
            u = spectral::normalize_function(*w, u);
            row.delta = spectral::deficit(*w, u, N);
            row.lambda1 = model_lambda;
            break;
        }
        case Family::TruncatedModel:
        case Family::SeededGenerated: {
            if (!(param > 0.0 && param < kPi)) throw ParameterDomainError("eps must lie in (0, pi)");
            if (spec.family == Family::TruncatedModel) {
                w.emplace(measure::truncated_model(N, kPi - param, spec.cells));
            } else {
                measure::DensityRecipe recipe;
                recipe.levels = seeded_levels(spec.seed, param);
                recipe.start_value = 0.0;
                w.emplace(measure::generate_cd_density(N, spec.seed, Grid::uniform(kPi - param, spec.cells), recipe).density);
            }
            const auto s = spectral::neumann_eigs(*w, 1);
            row.lambda1 = s.extrapolated.empty() ? s.eigenvalues[0] : s.extrapolated[0];
            row.delta = row.lambda1 - N;
            u = spectral::normalize_function(*w, s.eigenfunctions[0]);
            break;
        }
    }
    const auto c = spectral::cosine_distance(*w, u);
    row.dist_l2 = c.dist_L2;
    row.dist_w12 = c.dist_W12;
    row.excluded = row.delta > spec.delta_guard;
    return row;
}

}  // namespace

SweepTable deficit_distance_sweep(const ExperimentSpec& spec) {
    if (!(spec.N > 1.0)) throw ParameterDomainError("N must exceed 1");
    require_geometric(spec.params);
    double model_lambda = spec.N;
    if (spec.family == Family::PerturbedCosine)
        model_lambda = spectral::neumann_eigs(measure::model_density(spec.N, Grid::uniform(kPi, spec.cells)), 1,
                                              spectral::SolveOptions{false})
                           .eigenvalues[0];
    SweepTable table;
    table.rows = parallel_map(spec.params, [&](double p) { return sweep_row(spec, p, model_lambda); });
    std::stable_sort(table.rows.begin(), table.rows.end(),
                     [](const SweepRow& a, const SweepRow& b) { return a.param > b.param; });
    table.exponent = spec.exponent ? *spec.exponent : std::min(0.5, 1.0 / spec.N);
    std::vector<double> x, y;
    for (const auto& r : table.rows) {
        if (r.excluded) continue;
        x.push_back(r.delta);
        y.push_back(r.dist_w12);
        table.constants.push_back(r.delta > 0.0 ? r.dist_w12 / std::pow(r.delta, table.exponent)
                                                : std::numeric_limits<double>::infinity());
    }
    table.fit = fit_loglog(x, y);
    table.constant_range = constant_range(table.constants);
    for (double c : table.constants) table.constant_max = std::max(table.constant_max, c);
    return table;
}

DiameterTable diameter_deficit_sweep(double N, std::span<const double> eps, std::size_t cells) {
    if (!(N > 1.0)) throw ParameterDomainError("N must exceed 1");
    DiameterTable table;
    table.CN = spectral::diameter_constant(N);
    const std::vector<double> params(eps.begin(), eps.end());
    for (double e : params)
        if (!(e >= 0.0 && e < kPi)) throw ParameterDomainError("eps must lie in [0, pi)");
    table.rows = parallel_map(params, [&](double e) {
        DiameterRow row;
        row.eps = e;
        const auto w = measure::truncated_model(N, kPi - e, cells);
        const auto s = spectral::neumann_eigs(w, 1);
        row.lambda1 = s.extrapolated.empty() ? s.eigenvalues[0] : s.extrapolated[0];
        row.gap = row.lambda1 - N;
        row.lhs = table.CN * std::pow(e, N);
        row.holds = e == 0.0 || row.lhs <= row.gap;
        return row;
    });
    std::stable_sort(table.rows.begin(), table.rows.end(),
                     [](const DiameterRow& a, const DiameterRow& b) { return a.eps > b.eps; });
    std::vector<double> x, y;
    for (const auto& r : table.rows) {
        table.all_hold = table.all_hold && r.holds;
        if (r.eps > 0.0) {
            x.push_back(r.eps);
            y.push_back(r.gap);
        }
    }
    table.fit = fit_loglog(x, y);
    return table;
}

UpperGapReport upper_gap_check(double N, std::span<const double> eps, std::size_t cells) {
    if (!(N > 1.0)) throw ParameterDomainError("N must exceed 1");
    UpperGapReport rep;
    for (double e : eps) {
        if (!(e >= 0.0 && e <= 0.3)) throw ParameterDomainError("upper_gap_check needs D >= pi - 0.3");
        if (e > 0.0) rep.eps.push_back(e);
    }
    struct Point {
        double ratio, candidate;
    };
    const auto pts = parallel_map(rep.eps, [&](double e) {
        const auto w = measure::rescaled_model(N, kPi - e, cells);
        const double l1 = spectral::neumann_eigs(w, 1, spectral::SolveOptions{false}).eigenvalues[0];
        const auto cand = measure::sample(w.grid(), [N](double t) { return std::sqrt(N + 1.0) * std::cos(t); });
        return Point{(l1 - N) / e, (spectral::rayleigh(w, cand) - N) / e};
    });
    for (const auto& p : pts) {
        rep.ratios.push_back(p.ratio);
        rep.candidate_ratios.push_back(p.candidate);
        rep.max_ratio = std::max(rep.max_ratio, p.ratio);
        rep.candidate_max = std::max(rep.candidate_max, p.candidate);
    }
    rep.ratio_range = constant_range(rep.ratios);
    return rep;
}

EigenComparison eigen_comparison_check(const WeightedInterval& w, std::span<const double> v_raw, double guard) {
    const auto v = spectral::normalize_function(w, v_raw);
    const auto s = spectral::neumann_eigs(w, 1, spectral::SolveOptions{false});
    const auto u = spectral::normalize_function(w, s.eigenfunctions[0]);
    const Grid& g = w.grid();
    const auto dv = measure::derivative(g, v);
    const auto du = measure::derivative(g, u);
    EigenComparison rep;
    rep.lambda1 = s.eigenvalues[0];
    const double mass = w.total_mass();
    auto norm2 = [&](int sign) {
        std::vector<double> f(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double a = v[i] - sign * u[i];
            const double b = dv[i] - sign * du[i];
            f[i] = a * a + b * b;
        }
        return measure::integrate(w, f) / mass;
    };
    rep.lhs = std::min(norm2(1), norm2(-1));
    const double rv = spectral::rayleigh(w, v);
    rep.gap = rv - spectral::rayleigh(w, u);
    rep.deficit = rv - w.N();
    rep.within_guard = rep.deficit < guard;
    if (rep.gap > 0.0) rep.constant = rep.lhs / rep.gap;
    else rep.constant = rep.lhs == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    std::vector<double> prod(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) prod[i] = v[i] * u[i];
    rep.overlap = std::abs(measure::integrate(w, prod)) / mass;
    rep.far_from_eigen = rep.overlap <= 0.5;
    rep.rayleigh_margin = rv - rep.lambda1;
    return rep;
}

void write_sweep_csv(std::ostream& out, const SweepTable& table) {
    out << "param,delta,dist_l2,dist_w12,lambda1,excluded\n";
    for (const auto& r : table.rows) {
        out << format_double(r.param) << ',' << format_double(r.delta) << ',' << format_double(r.dist_l2) << ','
            << format_double(r.dist_w12) << ',' << format_double(r.lambda1) << ',' << (r.excluded ? 1 : 0) << '\n';
    }
}

nlohmann::json sweep_summary(const SweepTable& table) {
    nlohmann::json j;
    j["slope"] = table.fit.slope;
    j["intercept"] = table.fit.intercept;
    j["r_squared"] = table.fit.r_squared;
    j["points"] = table.fit.points;
    j["flagged"] = table.fit.flagged;
    j["exponent"] = table.exponent;
    j["constant_range"] = table.constant_range;
    j["constant_max"] = table.constant_max;
    std::size_t excluded = 0;
    for (const auto& r : table.rows) excluded += r.excluded ? 1 : 0;
    j["excluded_rows"] = excluded;
    return j;
}

void write_diameter_csv(std::ostream& out, const DiameterTable& table) {
    out << "eps,lambda1,gap,lhs,holds\n";
    for (const auto& r : table.rows) {
        out << format_double(r.eps) << ',' << format_double(r.lambda1) << ',' << format_double(r.gap) << ','
            << format_double(r.lhs) << ',' << (r.holds ? 1 : 0) << '\n';
    }
}

nlohmann::json diameter_summary(const DiameterTable& table) {
    nlohmann::json j;
    j["slope"] = table.fit.slope;
    j["intercept"] = table.fit.intercept;
    j["r_squared"] = table.fit.r_squared;
    j["points"] = table.fit.points;
    j["flagged"] = table.fit.flagged;
    j["C_N"] = table.CN;
    j["all_hold"] = table.all_hold;
    return j;
}

}  // namespace obatalab::obata
