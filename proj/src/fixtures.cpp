#include "obatalab/fixtures.hpp"

#include <cmath>
#include <sstream>

#include "obatalab/core_measure.hpp"
#include "obatalab/errors.hpp"
#include "obatalab/localization.hpp"

namespace obatalab::loc::fixtures {

using measure::kPi;
using nlohmann::json;

namespace {

constexpr std::size_t kCells = 4096;
constexpr double kGap = 0.05;

std::string tag(double N) { return std::to_string(static_cast<int>(N)); }

json family(double N, double unspanned) {
    return {{"schema", kSchema}, {"N", N}, {"unspanned_mass", unspanned}, {"rays", json::array()}};
}

json ray(double weight, double D, const std::string& density, double amplitude, double s = 0.0, double e = 0.0) {
    json r = {{"weight", weight}, {"D", D}, {"a", 0.0}, {"b", 0.0}, {"density", {{"kind", density}}}};
    if (s == 0.0)
        r["u"] = {{"kind", "cosine"}, {"params", {{"amplitude", amplitude}}}};
    else
        r["u"] = {{"kind", "perturbed"}, {"params", {{"amplitude", amplitude}, {"s", s}}}};
    r["e"] = e == 0.0 ? json{{"kind", "zero"}} : json{{"kind", "const"}, {"params", {{"value", e}}}};
    return r;
}

/// Centred int u^2 and the deficit of a single ray.
std::pair<double, double> single_ray(double N, double D, double s) {
    RayFamily f;
    f.N = N;
    f.rays.push_back(model_ray(N, D, 1.0, 1.0, s, kCells));
    const auto st = ray_stats(f).front();
    const auto g = normalize(f);
    return {st.l2 - st.mean * st.mean, *ray_stats(g).front().delta};
}

double variance_exponent(double N) {
    const double b = default_beta(N), g = default_gamma(N);
    return std::min({3.0 * g / N, 1.0 - b - g + g / N, (b - g) * std::min(2.0 / N, 1.0)});
}

double mass_exponent(double N) {
    const double b = default_beta(N), g = default_gamma(N);
    return std::min({2.0 * g / N, (b - g) / N, 1.0 - b - g});
}

json combined_at(double N, double delta) {
    const double s = 0.5 * std::pow(delta, variance_exponent(N) / 2.0);
    const double mu = 0.3 * std::pow(delta, mass_exponent(N) / 2.0);
    const double q = (1.0 - mu) / 2.0;
    const double e = delta / (1.0 - mu);
    json f = family(N, mu);
    f["rays"].push_back(ray(q, kPi, "model", 1.0 + s, 0.0, e));
    f["rays"].push_back(ray(q, kPi, "model", 1.0 - s, 0.0, e));
    return f;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

double sweep_delta(std::size_t k) { return std::pow(10.0, -2.0 - static_cast<double>(k)); }

json rigid(double N) {
    json f = family(N, 0.0);
    for (int i = 0; i < 4; ++i) f["rays"].push_back(ray(0.25, kPi, "model", 1.0));
    return f;
}

json combined_member(double N, std::size_t k) { return combined_at(N, sweep_delta(k)); }

json perturbed_member(double N, std::size_t k) {
    const double s = 0.2 * std::pow(2.0, -static_cast<double>(k));
    json f = family(N, 0.0);
    f["rays"].push_back(ray(0.25, kPi, "model", 1.0, s));
    f["rays"].push_back(ray(0.25, kPi, "model", 1.0, 0.5 * s));
    f["rays"].push_back(ray(0.5, kPi, "model", 1.0, 0.75 * s));
    return f;
}

json short_ray(double N) {
    constexpr double kShort = 2.0, kShare = 0.05, kShortWeight = 0.2;
    const double long_l2 = single_ray(N, kPi, 0.0).first;
    const double short_l2 = single_ray(N, kShort, 0.0).first;
    const double A = std::sqrt(kShare * (1.0 - kShortWeight) * long_l2 / ((1.0 - kShare) * kShortWeight * short_l2));
    json f = family(N, 0.0);
    f["rays"].push_back(ray((1.0 - kShortWeight) / 2.0, kPi, "model", 1.0));
    f["rays"].push_back(ray((1.0 - kShortWeight) / 2.0, kPi, "model", 1.0));
    f["rays"].push_back(ray(kShortWeight, kShort, "truncated", A));
    return f;
}

json adversarial_mass(double N) {
    json f = family(N, 0.1);
    for (int i = 0; i < 3; ++i) f["rays"].push_back(ray(0.3, kPi, "model", 1.0));
    return f;
}

json chebyshev_tight(double N) {
    constexpr double kDelta = 1e-3, kAbove = 1.2;
    const double beta = default_beta(N);
    const double target = kAbove * std::pow(kDelta, beta);
    double lo = 0.0, hi = 1.0;
    if (!(single_ray(N, kPi, hi).second > target)) throw PreconditionError("perturbation range too small");
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        (single_ray(N, kPi, mid).second < target ? lo : hi) = mid;
    }
    const double s = hi;
    const double share = std::pow(kDelta, 1.0 - beta) / kAbove;
    const double A = std::sqrt(single_ray(N, kPi, 0.0).first / single_ray(N, kPi, s).first);
    json f = family(N, 0.0);
    f["rays"].push_back(ray(share, kPi, "model", A, s));
    f["rays"].push_back(ray((1.0 - share) / 2.0, kPi, "model", 1.0));
    f["rays"].push_back(ray((1.0 - share) / 2.0, kPi, "model", 1.0));
    return f;
}

json pole_consistent(double N) {
    constexpr double kDelta = 1e-4;
    json f = combined_at(N, kDelta);
    const double offset = 0.5 * std::pow(kDelta, default_beta(N) / N);
    for (auto& r : f["rays"]) {
        r["a"] = offset;
        r["b"] = offset;
    }
    return f;
}

json pole_inconsistent(double N) {
    json f = combined_at(N, 1e-8);
    f["rays"][0]["a"] = 0.5;
    return f;
}

std::string suspension_density_csv(double N) {
    const auto grid = measure::Grid::uniform(kPi - kGap, kCells);
    measure::DensityRecipe recipe;
    recipe.levels = {0.02, 0.01, 0.03, 0.015};
    recipe.start_value = 0.0;
    const auto gen = measure::generate_cd_density(N, 7, grid, recipe);
    if (gen.shrunk) throw PreconditionError("suspension density was shrunk");
    std::ostringstream out;
    measure::write_density_csv(out, gen.density);
    return out.str();
}

json suspension(double N) {
    json f = family(N, 0.1);
    f["pole_gap"] = kGap;
    f["rays"].push_back(ray(0.3, kPi, "model", 1.0));
    f["rays"].push_back(ray(0.3, kPi - kGap, "truncated", 1.0));
    json g = ray(0.3, kPi - kGap, "csv", 1.0);
    g["density"]["params"] = {{"path", "suspension-N" + tag(N) + "-generated.csv"}};
    f["rays"].push_back(g);
    return f;
}

json combined_sweep(double N) {
    json members = json::array();
    for (std::size_t k = 0; k < kSweepPoints; ++k)
        members.push_back("combined-N" + tag(N) + "-" + std::to_string(k) + ".json");
    return {{"schema", "sweep-v1"}, {"kind", "localization"}, {"members", members}};
}

std::vector<std::pair<std::string, std::string>> all_fixtures() {
    std::vector<std::pair<std::string, std::string>> out;
    for (double N : {2.0, 3.0}) {
        const std::string n = tag(N);
        out.emplace_back("rigid-N" + n + ".json", dump(rigid(N)));
        out.emplace_back("short-ray-N" + n + ".json", dump(short_ray(N)));
        out.emplace_back("adversarial-mass-N" + n + ".json", dump(adversarial_mass(N)));
        out.emplace_back("chebyshev-tight-N" + n + ".json", dump(chebyshev_tight(N)));
        out.emplace_back("pole-consistent-N" + n + ".json", dump(pole_consistent(N)));
        out.emplace_back("pole-inconsistent-N" + n + ".json", dump(pole_inconsistent(N)));
        out.emplace_back("suspension-N" + n + ".json", dump(suspension(N)));
        out.emplace_back("suspension-N" + n + "-generated.csv", suspension_density_csv(N));
        for (std::size_t k = 0; k < kSweepPoints; ++k) {
            out.emplace_back("sweeps/combined-N" + n + "-" + std::to_string(k) + ".json", dump(combined_member(N, k)));
            out.emplace_back("sweeps/perturbed-N" + n + "-" + std::to_string(k) + ".json", dump(perturbed_member(N, k)));
        }
        out.emplace_back("sweeps/combined-N" + n + ".sweep.json", dump(combined_sweep(N)));
    }
    return out;
}

}  // namespace obatalab::loc::fixtures
