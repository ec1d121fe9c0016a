#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "obatalab/core_measure.hpp"
#include "obatalab/obata1d.hpp"

namespace obatalab::loc {

using measure::WeightedInterval;

inline constexpr const char* kSchema = "rayfam-v1";
inline constexpr std::size_t kMaxRays = 10000;
/// |delta| at or below this is treated as the rigid case (delta = 0 in every envelope).
inline constexpr double kRigidTolerance = 1e-10;
/// Slack on the arithmetic identities (deficit split, Chebyshev, energy bounds).
inline constexpr double kIdentitySlack = 1e-10;
/// Absolute slack on the ball-measure comparisons.
inline constexpr double kVolumeSlack = 1e-12;
/// Empirical constants above this are reported as violations of an envelope.
inline constexpr double kConstantCeiling = 100.0;

/// How ball masses m_i([0, x]) are evaluated on a ray.
enum class MassRule {
    Model,      ///< h_N on [0, pi], closed form
    Truncated,  ///< h_N restricted to [0, D] and renormalized, closed form
    Samples,    ///< fourth-order cumulative quadrature of the samples
};

struct Ray {
    double weight = 0.0;
    std::optional<double> a;  ///< distance from P_N to the start of the ray
    std::optional<double> b;  ///< distance from the end of the ray to P_S
    WeightedInterval density;  ///< unit Simpson mass on a uniform grid with an even cell count
    MassRule mass_rule = MassRule::Samples;
    std::vector<double> u;   ///< function along the ray
    std::vector<double> du;  ///< its derivative
    std::vector<double> e;   ///< orthogonal energy density, >= 0

    double length() const { return density.length(); }
};

struct RayFamily {
    double N = 2.0;
    double unspanned_mass = 0.0;  ///< mass off the rays; u = 0 there, distributed like m_N around P_N
    std::vector<Ray> rays;
    std::optional<double> pole_gap;  ///< pi - d(P_N, P_S); derived from the rays when unset
};

/// Ray with the given density (renormalized to unit Simpson mass) and function samples.
/// du defaults to the finite-difference derivative, e to zero.
Ray make_ray(double weight, WeightedInterval density, std::vector<double> u,
             std::optional<std::vector<double>> du = std::nullopt,
             std::optional<std::vector<double>> e = std::nullopt, MassRule rule = MassRule::Samples);

/// Model ray [0, pi] or truncated model ray [0, D] with u = amplitude (cos t + s sin 2t).
Ray model_ray(double N, double D, double weight, double amplitude, double s, std::size_t cells);

/// Checks the family invariants: N > 1, weights positive and summing with the unspanned
/// mass to 1, lengths in (0, pi], offsets non-negative, e >= 0, matching sample sizes.
void validate(const RayFamily& f);

/// Simpson integral of f against the ray density.
double ray_integral(const Ray& ray, std::span<const double> f);
/// Sum of weight * ray mass plus the unspanned mass.
double total_mass(const RayFamily& f);

/// 1 / ||u - ray means||_{L^2(m)}; throws PreconditionError when u vanishes on every ray.
double normalization_scale(const RayFamily& f);
/// Recentres u on every ray and rescales globally to unit L^2(m) norm.
RayFamily normalize(const RayFamily& f);

/// Per-ray quantities, all computed with the ray Simpson rule.
struct RayStats {
    double mean = 0.0;
    double l2 = 0.0;      ///< int u^2
    double grad = 0.0;    ///< int u'^2
    double orth = 0.0;    ///< int e
    double c = 0.0;       ///< sqrt(l2)
    std::optional<double> delta;  ///< grad / l2 - N when c > 0
    double dist_plus = 0.0;   ///< ||u/c - sqrt(N+1) cos||, 0 when c = 0
    double dist_minus = 0.0;  ///< ||u/c + sqrt(N+1) cos||
    double final_plus = 0.0;  ///< int |u - sqrt(N+1) cos(t + a)|^2 (a = 0 when unset)
    double final_minus = 0.0; ///< int |u + sqrt(N+1) cos(t + a)|^2
};

std::vector<RayStats> ray_stats(const RayFamily& f);

struct DeficitLedger {
    double N = 2.0;
    double delta = 0.0;  ///< sum q int (u'^2 + e) - N
    bool rigid = false;  ///< |delta| <= kRigidTolerance
    std::vector<double> c;  ///< |c_q|, signed by per_ray_cosine on long rays
    std::vector<std::optional<double>> delta_q;
    double split_sum = 0.0;      ///< sum q delta_q c^2
    double orth_energy = 0.0;    ///< sum q int e
    bool split_holds = true;     ///< delta >= split_sum - slack
    bool orth_holds = true;      ///< orth_energy <= delta + slack
    double lichnerowicz_worst = 0.0;  ///< min over rays of (int u'^2 - N c^2)
    std::vector<std::size_t> Q_long;
    double long_mass = 0.0;  ///< q(Q_long)
    double cbar = 0.0;
    double variance = 0.0;
    double one_minus_mass = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    double r = 0.0;  ///< delta^{gamma/N}
    double eta = 0.0;
    double final_dist = 0.0;
    std::vector<RayStats> stats;

    /// delta with the rigid case mapped to 0.
    double effective_delta() const { return rigid ? 0.0 : delta; }
};

/// Deficit of a normalized family and its per-ray split.
DeficitLedger global_deficit(const RayFamily& f);

struct LongRayReport {
    double threshold = 0.0;     ///< delta^beta
    double outside_c2 = 0.0;    ///< sum over the complement of q c^2
    double inside_c2 = 0.0;     ///< sum over Q_long of q c^2
    double certificate = 0.0;   ///< delta^{1-beta}
    bool outside_holds = true;
    bool inside_holds = true;
    double length_bound = 0.0;  ///< delta^beta / C_N, bound on (pi - D)^N
    double worst_length = 0.0;  ///< max over Q_long of (pi - D)^N
};

/// Q_long = {c > 0, delta_q <= delta^beta}; every ray with c > 0 in the rigid case.
/// Throws NonCdInputError when a long ray is too short for its deficit.
LongRayReport select_long_rays(const RayFamily& f, DeficitLedger& ledger, double beta);

struct BadSetReport {
    double value = 0.0;
    double bound = 0.0;  ///< (N+1) delta^{1-beta}
    double ratio = 0.0;
    bool holds = true;
};

/// Gradient energy off the long rays.
BadSetReport bad_set_energy(const RayFamily& f, const DeficitLedger& ledger);

struct CosineRayReport {
    std::vector<double> distances;  ///< per long ray, min over sign
    double max_distance = 0.0;
    double exponent = 0.0;   ///< beta min(1/2, 1/N)
    double scale = 0.0;      ///< delta^exponent
    double constant = 0.0;   ///< max_distance / scale
};

/// Signs c_q on long rays by the closer of +-sqrt(N+1) cos.
CosineRayReport per_ray_cosine(const RayFamily& f, DeficitLedger& ledger);

struct EnvelopeBound {
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;  ///< lhs / rhs; with rhs = 0 it is 0 for lhs at rounding level, else +inf
    bool flagged = false;  ///< ratio above kConstantCeiling
};

/// Variance of the signed c over Q_long against its envelope. Needs per_ray_cosine first.
EnvelopeBound variance_bound(const RayFamily& f, DeficitLedger& ledger, double beta, double gamma);

struct LongMassReport {
    EnvelopeBound bound;
    double unspanned = 0.0;
    bool unspanned_holds = true;  ///< unspanned <= 1 - q(Q_long)
};

LongMassReport long_mass_bound(const RayFamily& f, DeficitLedger& ledger, double beta, double gamma);

struct AssemblyReport {
    double final_dist = 0.0;
    int sign = 1;  ///< global sign of u
    double eta = 0.0;
    double scale = 0.0;     ///< delta^eta
    double constant = 0.0;  ///< final_dist / scale (same convention as EnvelopeBound::ratio)
};

/// ||u - s sqrt(N+1) cos(d(P_N, .))|| minimized over the global sign s.
/// Throws PreconditionError when a ray has no start offset.
AssemblyReport assemble_main(const RayFamily& f, DeficitLedger& ledger);

/// pi - d(P_N, P_S): the configured value, else max(0, pi - min_i (a_i + D_i + b_i)).
double pole_gap(const RayFamily& f);

/// m_i([0, x]) for x in [0, D_i].
double ray_ball_mass(const RayFamily& f, const Ray& ray, double x);
/// m(B_r(P_N)) under the ray ball rule.
double ball_measure(const RayFamily& f, double r);

struct VolumeCheck {
    double r = 0.0;
    double ball = 0.0;
    double lower = 0.0;  ///< m_N([0, r])
    double upper = 0.0;  ///< m_N([0, r + pole gap])
    bool lower_holds = true;
    bool upper_holds = true;
};

VolumeCheck volume_check(const RayFamily& f, double r);
/// volume_check, throwing NonCdInputError on a violated bound. Requires 0 < r < pi - gap.
VolumeCheck volume_control(const RayFamily& f, double r);
/// `count` evenly spaced radii strictly inside (0, pi - gap).
std::vector<VolumeCheck> volume_profile(const RayFamily& f, std::size_t count = 50);

struct PoleReport {
    double max_start = 0.0;
    double max_end = 0.0;
    double scale = 0.0;      ///< delta^{beta/N}
    double threshold = 0.0;  ///< 2 C_N^{-1/N} delta^{beta/N}
    bool flagged = false;
};

PoleReport pole_concentration(const RayFamily& f, const DeficitLedger& ledger);

struct Params {
    std::optional<double> beta;   ///< default 3N/(4N+2)
    std::optional<double> gamma;  ///< default N/(4N+2)
};

double default_beta(double N);
double default_gamma(double N);
double target_exponent(double N);  ///< 1/(8N+4)

struct Report {
    DeficitLedger ledger;
    LongRayReport long_rays;
    BadSetReport bad_set;
    std::optional<CosineRayReport> cosine;  ///< absent when Q_long is empty
    std::optional<EnvelopeBound> variance;
    LongMassReport long_mass;
    std::optional<AssemblyReport> assembly;  ///< absent without start offsets
    std::optional<PoleReport> poles;
    /// Any identity or envelope flagged as violated.
    bool violation() const;
};

/// normalize, then every stage in order.
Report localize(const RayFamily& f, const Params& params = {});

struct SweepAnalysis {
    obata::FitResult final_fit;  ///< final_dist against delta
    double variance_range = 0.0;
    double mass_range = 0.0;
    bool identities_hold = true;  ///< deficit split and Chebyshev certificates on every member
};

/// Requires at least three members with delta > 0.
SweepAnalysis analyze_sweep(std::span<const Report> reports);

/// rayfam-v1 document; csv paths are resolved against base_dir. `cells` is used when the
/// document has none.
RayFamily read_family(const nlohmann::json& doc, const std::filesystem::path& base_dir,
                      std::size_t cells = 4096);
RayFamily read_family_file(const std::filesystem::path& path, std::size_t cells = 4096);

nlohmann::json report_summary(const Report& report);
/// One row per ray: index,weight,length,a,b,c,delta_q,long,distance.
void write_ray_csv(std::ostream& out, const RayFamily& f, const Report& report);

}  // namespace obatalab::loc
