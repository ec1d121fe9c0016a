// Acceptance harness: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "obatalab/cli.hpp"
#include "obatalab/core_measure.hpp"
#include "obatalab/isoperimetry.hpp"
#include "obatalab/localization.hpp"
#include "obatalab/obata1d.hpp"
#include "obatalab/spectral.hpp"

using namespace obatalab;
namespace fs = std::filesystem;
using measure::Grid;
using measure::kPi;

namespace {

const fs::path kFixtures = OBATALAB_FIXTURES;

struct Verdict {
    bool pass = true;
    std::string detail;
};

class Notes {
public:
    void fail(bool ok) { pass_ = pass_ && ok; }
    template <class... A>
    void add(const char* fmt, A... args) {
        char buf[256];
        std::snprintf(buf, sizeof buf, fmt, args...);
        if (!text_.empty()) text_ += "; ";
        text_ += buf;
    }
    Verdict done() const { return {pass_, text_}; }

private:
    bool pass_ = true;
    std::string text_;
};

std::vector<double> halving(double start, int n) {
    std::vector<double> p;
    for (int k = 0; k < n; ++k) p.push_back(start * std::pow(2.0, -k));
    return p;
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Verdict model_eigenvalue() {
    Notes n;
    for (double N : {2.0, 2.5, 3.0, 4.0}) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto w = measure::model_density(N, Grid::uniform(kPi, 4096));
        const double l1 = spectral::neumann_eigs(w, 1).eigenvalues[0];
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const double rel = std::abs(l1 - N) / N;
        n.fail(rel <= 1e-5 && secs < 5.0);
        n.add("N=%g rel=%.2e t=%.2fs", N, rel, secs);
    }
    return n.done();
}

Verdict bbg_closed_form() {
    Notes n;
    const double c = iso::bbg_constant(2.0, kPi / 2);
    const double err = std::abs(c - std::pow(2.0, 0.25));
    n.fail(err <= 1e-10);
    n.add("|C_{2,pi/2} - 2^(1/4)|=%.1e", err);
    double worst = 0.0;
    for (double N : {1.5, 2.0, 2.5, 3.0, 4.0, 6.0}) worst = std::max(worst, std::abs(iso::bbg_constant(N, kPi) - 1.0));
    n.fail(worst <= 1e-12);
    n.add("max |C_{N,pi} - 1|=%.1e", worst);
    return n.done();
}

Verdict asymptotic_limit() {
    Notes n;
    const double eps = 1e-3;
    for (double N : {2.0, 3.0}) {
        const double target = N == 2.0 ? 8.0 : 9.0 * kPi;
        const double ratio = std::pow(eps, N) / iso::bbg_constant_excess(N, kPi - eps);
        const double rel = std::abs(ratio / target - 1.0);
        n.fail(rel <= 0.01 && std::abs(iso::asymptotic_target(N) / target - 1.0) <= 1e-10);
        n.add("N=%g ratio=%.6g target=%.6g rel=%.1e", N, ratio, target, rel);
    }
    return n.done();
}

Verdict improved_gap() {
    Notes n;
    for (double N : {2.0, 3.0}) {
        std::size_t violations = 0;
        double worst = INFINITY;
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            std::mt19937_64 rng(seed * 7919 + static_cast<std::uint64_t>(N));
            const double D = 2.2 + 0.9 * uniform01(rng);
            const auto gen = measure::generate_cd_density(N, seed, Grid::uniform(D, 4096));
            const auto& w = gen.density;
            const auto rep = spectral::lichnerowicz_check(w, spectral::neumann_eigs(w, 1).eigenvalues[0]);
            worst = std::min(worst, rep.margin);
            violations += rep.margin < -1e-6;
        }
        n.fail(violations == 0);
        n.add("N=%g violations=%zu min margin=%.3g", N, violations, worst);
    }
    return n.done();
}

Verdict diameter_sharpness() {
    Notes n;
    for (double N : {2.0, 3.0}) {
        std::vector<double> eps;
        for (int k = 3; k <= 7; ++k) eps.push_back(std::ldexp(1.0, -k));
        const auto t = obata::diameter_deficit_sweep(N, eps);
        const double rel = std::abs(t.fit.slope - N) / N;
        n.fail(rel <= 0.15 && t.all_hold);
        n.add("N=%g slope=%.4f all_hold=%d", N, t.fit.slope, int(t.all_hold));
    }
    return n.done();
}

Verdict function_stability() {
    Notes n;
    for (double N : {2.0, 3.0}) {
        obata::ExperimentSpec spec;
        spec.N = N;
        spec.family = obata::Family::PerturbedCosine;
        spec.params = halving(0.2, 5);
        const auto t = obata::deficit_distance_sweep(spec);
        const bool ok = t.constant_range <= 10.0 && t.fit.slope >= t.exponent - 0.1 && t.constants.size() == 5;
        n.fail(ok);
        n.add("N=%g C range=%.3f slope=%.4f target=%.4f", N, t.constant_range, t.fit.slope, t.exponent);
    }
    return n.done();
}

Verdict green_bound() {
    Notes n;
    struct Family {
        const char* name;
        measure::WeightedInterval w;
    };
    const std::vector<Family> families = {
        {"model N=2", measure::model_density(2.0, Grid::uniform(kPi, 1024))},
        {"model N=3", measure::model_density(3.0, Grid::uniform(kPi, 1024))},
        {"truncated N=2.5", measure::truncated_model(2.5, 2.7, 1024)},
        {"generated N=3", measure::generate_cd_density(3.0, 5, Grid::uniform(2.9, 1024)).density},
    };
    for (const auto& f : families) {
        std::size_t violations = 0;
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            const auto z = spectral::random_smooth(f.w.grid(), seed);
            const auto r = spectral::green_apply(f.w, z);
            violations += !(r.norm_v0 <= kPi * r.norm_z);
        }
        n.fail(violations == 0);
        n.add("%s violations=%zu", f.name, violations);
    }
    auto z = [](double t) { return std::cos(3 * t) + t * t; };
    for (double N : {2.0, 3.0}) {
        const auto fine = measure::model_density(N, Grid::uniform(kPi, 2048));
        const auto coarse = measure::model_density(N, Grid::uniform(kPi, 1024));
        const double ratio = spectral::green_apply(coarse, measure::sample(coarse.grid(), z)).residual /
                             spectral::green_apply(fine, measure::sample(fine.grid(), z)).residual;
        n.fail(ratio >= 2.0 && ratio <= 8.0);
        n.add("N=%g residual ratio=%.3f", N, ratio);
    }
    return n.done();
}

Verdict bochner_scaling() {
    Notes n;
    for (double N : {2.0, 3.0}) {
        std::vector<double> consts;
        for (double eps : halving(0.2, 5)) {
            const auto w = measure::truncated_model(N, kPi - eps, 4096);
            const auto s = spectral::neumann_eigs(w, 1);
            const auto rep = spectral::bochner_check(w, s.eigenfunctions[0], s.eigenvalues[0]);
            consts.push_back(rep.norm * rep.norm / (s.eigenvalues[0] - N));
        }
        const double range = obata::constant_range(consts);
        n.fail(range <= 10.0);
        n.add("N=%g range=%.3f", N, range);
    }
    return n.done();
}

std::vector<loc::Report> combined_reports(double N) {
    std::vector<loc::Report> out;
    const std::string tag = std::to_string(static_cast<int>(N));
    for (int k = 0; k < 5; ++k)
        out.push_back(loc::localize(
            loc::read_family_file(kFixtures / "sweeps" / ("combined-N" + tag + "-" + std::to_string(k) + ".json"))));
    return out;
}

Verdict pipeline() {
    Notes n;
    for (double N : {2.0, 3.0}) {
        const auto reps = combined_reports(N);
        double split_margin = INFINITY;
        bool cheb = true, flags = false;
        for (const auto& r : reps) {
            split_margin = std::min(split_margin, r.ledger.delta - r.ledger.split_sum);
            cheb = cheb && r.long_rays.outside_holds && r.long_rays.inside_holds;
            flags = flags || r.violation();
        }
        const auto a = loc::analyze_sweep(reps);
        const double eta = loc::target_exponent(N);
        const bool ok = split_margin >= -loc::kIdentitySlack && cheb && !flags && a.variance_range <= 10.0 &&
                        a.mass_range <= 10.0 && a.final_fit.slope >= eta - 0.05;
        n.fail(ok);
        n.add("N=%g split margin=%.2e chebyshev=%d var range=%.3f mass range=%.3f slope=%.4f (eta=%.4f)", N,
              split_margin, int(cheb), a.variance_range, a.mass_range, a.final_fit.slope, eta);

        const std::string tag = std::to_string(static_cast<int>(N));
        const auto rigid = loc::localize(loc::read_family_file(kFixtures / ("rigid-N" + tag + ".json")));
        const auto& L = rigid.ledger;
        double worst = std::max({std::abs(L.delta), std::abs(L.split_sum), L.orth_energy, L.variance,
                                 std::abs(L.one_minus_mass), L.final_dist});
        if (rigid.cosine) worst = std::max(worst, rigid.cosine->max_distance);
        n.fail(L.rigid && worst <= loc::kRigidTolerance && !rigid.violation());
        n.add("rigid N=%g max |zero|=%.1e", N, worst);
    }
    return n.done();
}

Verdict volume_control() {
    Notes n;
    for (double N : {2.0, 3.0}) {
        const std::string tag = std::to_string(static_cast<int>(N));
        const auto f = loc::read_family_file(kFixtures / ("suspension-N" + tag + ".json"));
        const auto prof = loc::volume_profile(f, 50);
        std::size_t bad = 0;
        for (const auto& v : prof) bad += !v.lower_holds + !v.upper_holds;
        n.fail(bad == 0 && prof.size() == 50);
        n.add("N=%g radii=%zu violations=%zu", N, prof.size(), bad);
    }
    return n.done();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Verdict determinism() {
    Notes n;
    std::vector<std::pair<std::string, cli::RunConfig>> cmds;
    auto add = [&](std::string name, auto&& edit) {
        cli::RunConfig c;
        edit(c);
        cmds.emplace_back(std::move(name), c);
    };
    add("profile", [](cli::RunConfig& c) {
        c.command = cli::Command::Profile;
        c.v = {0.1, 0.25, 0.5};
    });
    for (double N : {2.0, 2.5, 3.0, 4.0})
        add("spectrum-N" + std::to_string(N), [N](cli::RunConfig& c) {
            c.command = cli::Command::Spectrum;
            c.model = true;
            c.dim = N;
        });
    for (double N : {2.0, 3.0}) {
        const std::string tag = std::to_string(static_cast<int>(N));
        add("obata-" + tag, [N](cli::RunConfig& c) {
            c.command = cli::Command::Obata;
            c.dim = N;
        });
        add("diameter-" + tag, [N](cli::RunConfig& c) {
            c.command = cli::Command::Obata;
            c.diameter = true;
            c.dim = N;
            c.params = halving(0.125, 5);
        });
        add("generated-" + tag, [N](cli::RunConfig& c) {
            c.command = cli::Command::Obata;
            c.family = "seeded-generated";
            c.seed = 42;
            c.dim = N;
        });
        add("sweep-" + tag, [tag](cli::RunConfig& c) {
            c.command = cli::Command::Sweep;
            c.config = kFixtures / "sweeps" / ("combined-N" + tag + ".sweep.json");
        });
        add("suspension-" + tag, [tag](cli::RunConfig& c) {
            c.command = cli::Command::Localize;
            c.config = kFixtures / ("suspension-N" + tag + ".json");
        });
        add("rigid-" + tag, [tag](cli::RunConfig& c) {
            c.command = cli::Command::Localize;
            c.config = kFixtures / ("rigid-N" + tag + ".json");
        });
        add("check-" + tag, [N, tag](cli::RunConfig& c) {
            c.command = cli::Command::CheckDensity;
            c.dim = N;
            c.density = kFixtures / ("suspension-N" + tag + "-generated.csv");
        });
    }
    const fs::path root = fs::temp_directory_path() / "obatalab-acceptance";
    fs::remove_all(root);
    std::size_t mismatches = 0, failures = 0;
    for (auto& [name, c] : cmds) {
        std::ostringstream log;
        c.out = root / name / "a";
        setenv("OBATALAB_THREADS", "1", 1);
        const int e1 = cli::run(c, log);
        c.out = root / name / "b";
        setenv("OBATALAB_THREADS", "4", 1);
        const int e2 = cli::run(c, log);
        unsetenv("OBATALAB_THREADS");
        failures += e1 != 0;
        if (e1 != e2) ++mismatches;
        for (const char* f : {"results.csv", "summary.json", "plot.svg"}) {
            const auto a = root / name / "a" / f, b = root / name / "b" / f;
            if (fs::exists(a) != fs::exists(b) || (fs::exists(a) && slurp(a) != slurp(b))) {
                ++mismatches;
                std::cerr << "  " << name << "/" << f << " differs\n";
            }
        }
    }
    n.fail(mismatches == 0 && failures == 0);
    n.add("commands=%zu mismatches=%zu nonzero exits=%zu", cmds.size(), mismatches, failures);
    return n.done();
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
        {"model eigenvalue", model_eigenvalue},
        {"BBG constant closed form", bbg_closed_form},
        {"asymptotic limit", asymptotic_limit},
        {"improved spectral gap", improved_gap},
        {"diameter sharpness", diameter_sharpness},
        {"1-D function stability", function_stability},
        {"Green bound", green_bound},
        {"Bochner scaling", bochner_scaling},
        {"ray pipeline", pipeline},
        {"volume control", volume_control},
        {"determinism", determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        failed += !v.pass;
        std::cout << "criterion " << i + 1 << " (" << criteria[i].first << "): " << (v.pass ? "PASS" : "FAIL") << " - "
                  << v.detail << std::endl;
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failed ? 1 : 0;
}
