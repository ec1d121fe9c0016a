#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <vector>

#include "obatalab/core_measure.hpp"
#include "obatalab/errors.hpp"
#include "obatalab/fixtures.hpp"
#include "obatalab/format.hpp"
#include "obatalab/localization.hpp"
#include "obatalab/spectral.hpp"

using namespace obatalab;
using namespace obatalab::loc;
using measure::Grid;
using measure::kPi;

namespace {

const std::filesystem::path kFixtures = OBATALAB_FIXTURES;

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

RayFamily fixture(const std::string& name) { return read_family_file(kFixtures / name); }

RayFamily from_doc(const nlohmann::json& doc) { return read_family(doc, kFixtures); }

/// Generated CD rays with random smooth u and constant orthogonal energy.
RayFamily random_family(double N, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    RayFamily f;
    f.N = N;
    const int rays = 3 + static_cast<int>(rng() % 4);
    f.unspanned_mass = 0.2 * uniform01(rng);
    std::vector<double> w(rays);
    double total = 0.0;
    for (double& x : w) total += (x = 0.2 + uniform01(rng));
    double used = f.unspanned_mass;
    for (int i = 0; i < rays; ++i) {
        const double D = 1.5 + (kPi - 1.5) * uniform01(rng);
        const auto gen = measure::generate_cd_density(N, rng(), Grid::uniform(D, 1024));
        const Grid& grid = gen.density.grid();
        auto u = spectral::random_smooth(grid, rng(), 4);
        auto du = measure::derivative(grid, u);
        std::vector<double> e(grid.size(), 0.05 * uniform01(rng));
        const double q = i + 1 < rays ? (1.0 - f.unspanned_mass) * w[i] / total : 1.0 - used;
        used += q;
        f.rays.push_back(make_ray(q, gen.density, std::move(u), std::move(du), std::move(e)));
        f.rays.back().a = 0.0;
        f.rays.back().b = 0.0;
    }
    return f;
}

/// Independent trapezoid evaluation of delta: gradient energy over the L^2 norm of the
/// recentred u, plus the orthogonal energy, minus N.
double deficit_oracle(const RayFamily& f) {
    double l2 = 0.0, grad = 0.0, orth = 0.0;
    for (const Ray& r : f.rays) {
        const std::size_t n = r.u.size();
        const double mass = measure::integrate(r.density, std::vector<double>(n, 1.0));
        const double mean = measure::integrate(r.density, r.u) / mass;
        std::vector<double> v(n), g(n);
        for (std::size_t j = 0; j < n; ++j) {
            v[j] = (r.u[j] - mean) * (r.u[j] - mean);
            g[j] = r.du[j] * r.du[j];
        }
        l2 += r.weight * measure::integrate(r.density, v) / mass;
        grad += r.weight * measure::integrate(r.density, g) / mass;
        orth += r.weight * measure::integrate(r.density, r.e) / mass;
    }
    return grad / l2 + orth - f.N;
}

/// Dumbbell density on [0, D]: 1 on the outer thirds, `floor` on the middle one; not CD.
WeightedInterval dumbbell(double D, double floor) {
    const Grid grid = Grid::uniform(D, 1024);
    auto h = measure::sample(grid, [&](double t) { return std::abs(t / D - 0.5) < 1.0 / 6.0 ? floor : 1.0; });
    return WeightedInterval(grid, std::move(h), 1.0, 2.0);
}

}  // namespace

TEST_CASE("normalization: recentring, global scale and idempotence") {
    for (double N : {2.0, 3.0}) {
        RayFamily f;
        f.N = N;
        for (int i = 0; i < 4; ++i) f.rays.push_back(model_ray(N, kPi, 0.25, 1.0, 0.0, 4096));
        // int cos^2 dm_N = 1/(N+1), so the global scale is sqrt(N+1)
        const auto st = ray_stats(f);
        for (const auto& s : st) CHECK(s.c == doctest::Approx(1.0 / std::sqrt(N + 1.0)).epsilon(1e-12));
        CHECK(normalization_scale(f) == doctest::Approx(std::sqrt(N + 1.0)).epsilon(1e-12));

        const auto g = normalize(f);
        const auto gg = normalize(g);
        for (std::size_t i = 0; i < g.rays.size(); ++i)
            for (std::size_t j = 0; j < g.rays[i].u.size(); j += 97)
                CHECK(std::abs(gg.rays[i].u[j] - g.rays[i].u[j]) <= 1e-12);
        CHECK(total_mass(g) == doctest::Approx(1.0).epsilon(1e-12));
    }

    // two rays with weights 0.5 / 0.5: sum q c^2 = 1 after normalization
    RayFamily two;
    two.rays.push_back(model_ray(2.0, kPi, 0.5, 3.0, 0.1, 1024));
    two.rays.push_back(model_ray(2.0, 2.5, 0.5, -0.7, 0.0, 1024));
    const auto n = normalize(two);
    const auto st = ray_stats(n);
    CHECK(0.5 * st[0].l2 + 0.5 * st[1].l2 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(st[0].mean) <= 1e-12);
    CHECK(std::abs(st[1].mean) <= 1e-12);

    RayFamily zero;
    zero.rays.push_back(model_ray(2.0, kPi, 1.0, 0.0, 0.0, 64));
    CHECK_THROWS_AS(normalize(zero), PreconditionError);
}

TEST_CASE("global deficit: rigid case, additivity of orthogonal energy, split inequality") {
    for (const char* name : {"rigid-N2.json", "rigid-N3.json"}) {
        const auto f = normalize(fixture(name));
        const auto L = global_deficit(f);
        CHECK(L.rigid);
        CHECK(std::abs(L.delta) <= kRigidTolerance);
        for (const auto& d : L.delta_q) CHECK(std::abs(*d) <= kRigidTolerance);
    }

    auto f = normalize(fixture("rigid-N2.json"));
    const double before = global_deficit(f).delta;
    const double eps0 = 0.037;
    std::fill(f.rays[2].e.begin(), f.rays[2].e.end(), eps0);
    const auto L = global_deficit(f);
    CHECK(L.delta - before == doctest::Approx(f.rays[2].weight * eps0).epsilon(1e-12));
    CHECK(L.split_holds);
    CHECK(L.orth_holds);

    for (std::uint64_t seed = 1; seed <= 12; ++seed) {
        const double N = seed % 2 ? 2.0 : 3.0;
        const auto g = normalize(random_family(N, seed));
        const auto R = global_deficit(g);
        CAPTURE(seed);
        CHECK(R.split_holds);
        CHECK(R.orth_holds);
        CHECK(R.delta >= R.split_sum - 1e-10);
        CHECK(R.delta == doctest::Approx(deficit_oracle(g)).epsilon(1e-4));
        // Lichnerowicz per ray, up to the finite-difference derivative
        CHECK(R.lichnerowicz_worst >= -1e-5);
    }
}

TEST_CASE("long rays: selection, Chebyshev certificates, length check") {
    for (const char* name : {"rigid-N2.json", "rigid-N3.json"}) {
        const auto f = normalize(fixture(name));
        for (double beta : {0.2, 0.6, 0.9}) {
            auto L = global_deficit(f);
            const auto rep = select_long_rays(f, L, beta);
            CHECK(L.Q_long.size() == f.rays.size());
            CHECK(rep.outside_holds);
            CHECK(rep.inside_holds);
        }
    }

    for (const char* name : {"short-ray-N2.json", "short-ray-N3.json"}) {
        const auto f = normalize(fixture(name));
        auto L = global_deficit(f);
        const auto rep = select_long_rays(f, L, default_beta(f.N));
        CHECK(L.Q_long == std::vector<std::size_t>{0, 1});
        CHECK(rep.outside_c2 == doctest::Approx(0.05).epsilon(1e-9));
        CHECK(rep.outside_holds);
        CHECK(rep.inside_holds);
        CHECK(rep.outside_c2 <= rep.certificate);
    }

    CHECK(default_beta(2.0) == doctest::Approx(0.6));
    CHECK(default_gamma(2.0) == doctest::Approx(0.2));
    CHECK(default_beta(3.0) == doctest::Approx(9.0 / 14.0));

    for (std::uint64_t seed = 20; seed < 40; ++seed) {
        const auto g = normalize(random_family(seed % 2 ? 2.0 : 3.0, seed));
        auto L = global_deficit(g);
        const auto rep = select_long_rays(g, L, default_beta(g.N));
        CAPTURE(seed);
        CHECK(rep.outside_holds);
        CHECK(rep.inside_holds);
        CHECK(rep.inside_c2 + rep.outside_c2 == doctest::Approx(1.0).epsilon(1e-12));
    }

    // A short non-CD ray with a small deficit and a large orthogonal energy is long but
    // far shorter than any CD ray with that deficit could be.
    double lo = 1e-6, hi = 1.0;
    auto deficit_for = [](double floor) {
        RayFamily f;
        const auto w = dumbbell(0.5, floor);
        auto u = measure::sample(w.grid(), [](double t) { return std::tanh((t - 0.25) / 0.02); });
        f.rays.push_back(make_ray(1.0, w, u));
        return *global_deficit(normalize(f)).delta_q[0];
    };
    for (int it = 0; it < 60; ++it) {
        const double mid = std::sqrt(lo * hi);
        (deficit_for(mid) < 0.5 ? lo : hi) = mid;
    }
    RayFamily bad;
    const auto w = dumbbell(0.5, lo);
    auto u = measure::sample(w.grid(), [](double t) { return std::tanh((t - 0.25) / 0.02); });
    bad.rays.push_back(make_ray(1.0, w, u, std::nullopt, std::vector<double>(w.grid().size(), 1.0)));
    const auto g = normalize(bad);
    auto L = global_deficit(g);
    CHECK(*L.delta_q[0] == doctest::Approx(0.5).epsilon(1e-3));
    CHECK_THROWS_AS(select_long_rays(g, L, 0.6), NonCdInputError);
}

TEST_CASE("bad-set energy: rigid, constructed and Chebyshev-saturating families") {
    auto run = [](const std::string& name) {
        const auto f = normalize(fixture(name));
        auto L = global_deficit(f);
        select_long_rays(f, L, default_beta(f.N));
        return bad_set_energy(f, L);
    };
    CHECK(run("rigid-N2.json").value == 0.0);
    for (const char* name : {"short-ray-N2.json", "short-ray-N3.json"}) CHECK(run(name).holds);
    for (const char* name : {"chebyshev-tight-N2.json", "chebyshev-tight-N3.json"}) {
        const auto rep = run(name);
        CAPTURE(name);
        CHECK(rep.holds);
        CHECK(rep.ratio >= 0.2);
        CHECK(rep.ratio <= 1.0);
    }
}

TEST_CASE("per-ray cosine: rigid, sign rule, one-dimensional oracle") {
    {
        const auto f = normalize(fixture("rigid-N2.json"));
        auto L = global_deficit(f);
        select_long_rays(f, L, 0.6);
        const auto rep = per_ray_cosine(f, L);
        CHECK(rep.max_distance <= 1e-12);
        for (double c : L.c) CHECK(c == doctest::Approx(1.0).epsilon(1e-12));
    }
    {
        RayFamily f;
        f.rays.push_back(model_ray(2.0, kPi, 0.5, 1.0, 0.0, 2048));
        f.rays.push_back(model_ray(2.0, kPi, 0.5, -1.0, 0.0, 2048));
        const auto g = normalize(f);
        auto L = global_deficit(g);
        select_long_rays(g, L, 0.6);
        per_ray_cosine(g, L);
        CHECK(L.c[0] > 0.0);
        CHECK(L.c[1] < 0.0);
    }
    for (std::size_t k = 0; k < fixtures::kSweepPoints; ++k) {
        const auto f = normalize(fixture("sweeps/perturbed-N2-" + std::to_string(k) + ".json"));
        auto L = global_deficit(f);
        select_long_rays(f, L, 0.6);
        const auto rep = per_ray_cosine(f, L);
        for (std::size_t i = 0; i < L.Q_long.size(); ++i) {
            const Ray& r = f.rays[L.Q_long[i]];
            const auto oracle = spectral::cosine_distance(r.density, spectral::normalize_function(r.density, r.u));
            CHECK(rep.distances[i] == doctest::Approx(oracle.dist_L2).epsilon(1e-5));
        }
    }
}

TEST_CASE("variance and long-ray mass envelopes") {
    for (const char* name : {"rigid-N2.json", "rigid-N3.json"}) {
        const auto rep = localize(fixture(name));
        CHECK(rep.variance->lhs <= 1e-20);
        CHECK(rep.long_mass.bound.lhs == 0.0);
        CHECK_FALSE(rep.violation());
    }

    for (double N : {2.0, 3.0}) {
        std::vector<Report> sweep;
        for (std::size_t k = 0; k < fixtures::kSweepPoints; ++k)
            sweep.push_back(localize(from_doc(fixtures::combined_member(N, k))));
        const auto a = analyze_sweep(sweep);
        CAPTURE(N);
        CHECK(a.identities_hold);
        CHECK(a.variance_range <= 10.0);
        CHECK(a.mass_range <= 10.0);
        for (const auto& r : sweep) {
            CHECK_FALSE(r.variance->flagged);
            CHECK_FALSE(r.long_mass.bound.flagged);
            CHECK(r.long_mass.unspanned_holds);
        }

        // with the default parameters the three mass exponents coincide at 2/(4N+2) and
        // the variance envelope is of order delta^{3/(4N+2)}
        const auto f = normalize(from_doc(fixtures::combined_member(N, 2)));
        auto L = global_deficit(f);
        select_long_rays(f, L, default_beta(N));
        per_ray_cosine(f, L);
        const auto m = long_mass_bound(f, L, default_beta(N), default_gamma(N));
        CHECK(m.bound.rhs == doctest::Approx(3.0 * std::pow(L.delta, 2.0 / (4.0 * N + 2.0))).epsilon(1e-12));
        const auto v = variance_bound(f, L, default_beta(N), default_gamma(N));
        const double lead = 2.0 * std::pow(L.delta, 3.0 / (4.0 * N + 2.0));
        CHECK(v.rhs >= lead);
        CHECK(v.rhs <= lead + std::pow(L.delta, 4.0 / (4.0 * N + 2.0)) * (1.0 + 1e-12));
        CHECK(target_exponent(N) == doctest::Approx(0.5 / (4.0 * N + 2.0)));

        CHECK_THROWS_AS(variance_bound(f, L, default_beta(N), 0.7), PreconditionError);
        CHECK_THROWS_AS(long_mass_bound(f, L, default_beta(N), 0.45), PreconditionError);
        CHECK_THROWS_AS(variance_bound(f, L, 0.5, 0.1), PreconditionError);
    }

    for (const char* name : {"adversarial-mass-N2.json", "adversarial-mass-N3.json"}) {
        const auto rep = localize(fixture(name));
        CHECK(rep.ledger.rigid);
        CHECK(rep.long_mass.bound.lhs == doctest::Approx(0.01).epsilon(1e-9));
        CHECK(rep.long_mass.bound.flagged);
        CHECK(rep.violation());
    }
}

TEST_CASE("assembly: rigid zero, exponent on constructed sweeps, sign invariance") {
    for (const char* name : {"rigid-N2.json", "rigid-N3.json"}) {
        const auto rep = localize(fixture(name));
        CHECK(rep.assembly->final_dist <= 1e-12);
    }
    CHECK(target_exponent(2.0) == doctest::Approx(0.05));

    for (double N : {2.0, 3.0}) {
        std::vector<Report> sweep;
        for (std::size_t k = 0; k < fixtures::kSweepPoints; ++k)
            sweep.push_back(localize(from_doc(fixtures::combined_member(N, k))));
        const auto a = analyze_sweep(sweep);
        CAPTURE(N);
        CHECK(a.final_fit.slope >= target_exponent(N) - 0.05);
        CHECK_FALSE(a.final_fit.flagged);
    }

    auto f = fixture("sweeps/perturbed-N3-1.json");
    const auto base = localize(f);
    for (Ray& r : f.rays) {
        for (double& x : r.u) x = -x;
        for (double& x : r.du) x = -x;
    }
    const auto flipped = localize(f);
    CHECK(flipped.assembly->final_dist == doctest::Approx(base.assembly->final_dist).epsilon(1e-14));
    CHECK(flipped.assembly->sign == -base.assembly->sign);
    for (std::size_t i = 0; i < base.ledger.c.size(); ++i)
        CHECK(flipped.ledger.c[i] == doctest::Approx(-base.ledger.c[i]).epsilon(1e-14));

    auto g = normalize(fixture("rigid-N2.json"));
    g.rays[1].a.reset();
    auto L = global_deficit(g);
    CHECK_THROWS_AS(assemble_main(g, L), PreconditionError);
}

TEST_CASE("volume control on suspensions") {
    // rigid model suspension: m = m_N
    auto rigid = fixture("rigid-N3.json");
    for (double r : {0.1, 1.0, 2.0, 3.0}) {
        const auto v = volume_control(rigid, r);
        CHECK(v.ball == doctest::Approx(v.lower).epsilon(1e-13));
        CHECK(v.ball == doctest::Approx(v.upper).epsilon(1e-13));
    }

    RayFamily t;
    t.N = 2.0;
    t.rays.push_back(model_ray(2.0, kPi - 0.05, 1.0, 1.0, 0.0, 2048));
    t.rays[0].a = 0.0;
    t.rays[0].b = 0.0;
    CHECK(pole_gap(t) == doctest::Approx(0.05).epsilon(1e-12));
    const auto v = volume_control(t, 1.0);
    CHECK(v.lower_holds);
    CHECK(v.upper_holds);
    // direct quadrature of the renormalized truncated density
    const double oracle = measure::model_mass(2.0, 0.0, 1.0) / measure::model_mass(2.0, 0.0, kPi - 0.05);
    CHECK(v.ball == doctest::Approx(oracle).epsilon(1e-13));
    const auto top = volume_check(t, kPi - 0.05 - 1e-9);
    CHECK(top.upper == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(ball_measure(t, 4.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(volume_check(t, kPi), PreconditionError);
    CHECK_THROWS_AS(volume_check(t, 0.0), PreconditionError);

    for (const char* name : {"suspension-N2.json", "suspension-N3.json"}) {
        const auto f = fixture(name);
        std::size_t violations = 0;
        double last = 0.0;
        for (const auto& c : volume_profile(f, 50)) {
            violations += !c.lower_holds + !c.upper_holds;
            CHECK(c.ball >= last);
            last = c.ball;
        }
        CHECK(violations == 0);
    }

    // Bishop-Gromov lower bound on generated suspensions
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto f = random_family(seed % 2 ? 2.0 : 3.0, 100 + seed);
        const double gap = pole_gap(f);
        for (int j = 1; j <= 20; ++j) {
            const auto c = volume_check(f, (kPi - gap) * j / 21.0);
            CHECK(c.lower_holds);
        }
    }

    CHECK_THROWS_AS(volume_control(fixture("pole-inconsistent-N2.json"), 0.1), NonCdInputError);
}

TEST_CASE("pole concentration") {
    CHECK_FALSE(localize(fixture("rigid-N2.json")).poles->flagged);
    CHECK(localize(fixture("rigid-N2.json")).poles->max_start == 0.0);
    for (double N : {2.0, 3.0}) {
        const auto doc = fixtures::pole_consistent(N);
        const auto rep = localize(from_doc(doc));
        CHECK(rep.poles->max_start == doc["rays"][0]["a"].get<double>());
        CHECK(rep.poles->max_end == doc["rays"][0]["b"].get<double>());
        CHECK(rep.poles->max_start == doctest::Approx(0.5 * std::pow(1e-4, default_beta(N) / N)).epsilon(1e-6));
        CHECK_FALSE(rep.poles->flagged);
        CHECK(localize(from_doc(fixtures::pole_inconsistent(N))).poles->flagged);
    }
}

TEST_CASE("family files: schema checks and csv inputs") {
    auto doc = fixtures::rigid(2.0);
    CHECK_NOTHROW(from_doc(doc));
    {
        auto d = doc;
        d.erase("schema");
        CHECK_THROWS_AS(from_doc(d), ParseError);
    }
    {
        auto d = doc;
        d["rays"][0]["density"]["kind"] = "spline";
        CHECK_THROWS_AS(from_doc(d), ParseError);
    }
    {
        auto d = doc;
        d["rays"][0]["D"] = 3.0;
        CHECK_THROWS_AS(from_doc(d), ParseError);
    }
    {
        auto d = doc;
        d["rays"][0]["weight"] = 0.3;
        CHECK_THROWS_AS(from_doc(d), NormalizationError);
    }
    {
        auto d = doc;
        d["rays"][0]["weight"] = "heavy";
        CHECK_THROWS_AS(from_doc(d), ParseError);
    }

    const auto dir = std::filesystem::temp_directory_path() / "obatalab-loc-test";
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "cos.csv");
        out << "t,u\n";
        for (int i = 0; i <= 300; ++i) {
            const double t = kPi * i / 300.0;
            out << format_double(t) << ',' << format_double(std::cos(t)) << '\n';
        }
        std::ofstream lin(dir / "linear.csv");
        lin << "t,h\n";
        for (int i = 0; i <= 100; ++i) lin << format_double(3.0 * i / 100.0) << ',' << format_double(1.0 + 3.0 * i / 100.0) << '\n';
    }
    auto d = doc;
    d["rays"][0]["u"] = {{"kind", "csv"}, {"params", {{"path", "cos.csv"}}}};
    const auto f = read_family(d, dir);
    const auto g = read_family(doc, dir);
    for (std::size_t j = 0; j < f.rays[0].u.size(); j += 101)
        CHECK(f.rays[0].u[j] == doctest::Approx(g.rays[0].u[j]).epsilon(1e-4).scale(1.0));

    auto bad = doc;
    bad["rays"][0]["D"] = 3.0;
    bad["rays"][0]["density"] = {{"kind", "csv"}, {"params", {{"path", "linear.csv"}}}};
    CHECK_THROWS_AS(read_family(bad, dir), NonCdInputError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("shipped fixtures match their generators") {
    for (const auto& [rel, body] : fixtures::all_fixtures()) {
        std::ifstream in(kFixtures / rel, std::ios::binary);
        REQUIRE_MESSAGE(in, rel);
        std::stringstream ss;
        ss << in.rdbuf();
        CHECK_MESSAGE(ss.str() == body, rel);
    }
}

TEST_CASE("reports do not depend on the worker count") {
    const auto f = random_family(2.0, 77);
    setenv("OBATALAB_THREADS", "1", 1);
    const auto one = report_summary(localize(f)).dump();
    setenv("OBATALAB_THREADS", "4", 1);
    const auto four = report_summary(localize(f)).dump();
    unsetenv("OBATALAB_THREADS");
    CHECK(one == four);
    std::ostringstream a, b;
    write_ray_csv(a, f, localize(f));
    write_ray_csv(b, f, localize(f));
    CHECK(a.str() == b.str());
}
