#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "obatalab/core_measure.hpp"

namespace obatalab::obata {

using measure::WeightedInterval;

enum class Family {
    TruncatedModel,   ///< first eigenfunction of h_N restricted to [0, pi - eps]; params are eps
    PerturbedCosine,  ///< cos t + s sin 2t on the model space; params are s
    SeededGenerated,  ///< first eigenfunction of a generated density on [0, pi - eps]; params are eps
};

std::string family_name(Family f);
Family parse_family(const std::string& name);

struct ExperimentSpec {
    double N = 2.0;
    Family family = Family::PerturbedCosine;
    std::vector<double> params;  ///< geometric, at least 5 values
    std::size_t cells = 4096;
    std::uint64_t seed = 0;
    std::optional<double> exponent;  ///< defaults to min(1/2, 1/N)
    double delta_guard = 0.5;        ///< rows with larger deficit are excluded
};

/// Least-squares line through (log x, log y).
struct FitResult {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::size_t points = 0;
    bool flagged = false;  ///< r_squared < 0.98 or fewer than 3 points
};

FitResult fit_loglog(std::span<const double> x, std::span<const double> y);

/// max / min of positive values; +inf if any is non-positive.
double constant_range(std::span<const double> values);

/// Throws ParameterDomainError unless `params` has at least `min_points` positive values
/// with a constant ratio.
void require_geometric(std::span<const double> params, std::size_t min_points = 5);

struct SweepRow {
    double param = 0.0;
    double delta = 0.0;
    double dist_l2 = 0.0;
    double dist_w12 = 0.0;
    double lambda1 = 0.0;
    bool excluded = false;  ///< delta above the guard
};

struct SweepTable {
    std::vector<SweepRow> rows;  ///< sorted by param, descending
    FitResult fit;               ///< dist_w12 against delta
    double exponent = 0.0;
    std::vector<double> constants;  ///< dist_w12 / delta^exponent for included rows
    double constant_range = 0.0;
    double constant_max = 0.0;
};

/// Distances of the normalized sweep functions to +-sqrt(N+1) cos against their deficit.
SweepTable deficit_distance_sweep(const ExperimentSpec& spec);

struct DiameterRow {
    double eps = 0.0;
    double lambda1 = 0.0;  ///< Richardson value from the n and n/2 solves
    double gap = 0.0;      ///< lambda1 - N
    double lhs = 0.0;      ///< C_N eps^N
    bool holds = true;
};

struct DiameterTable {
    std::vector<DiameterRow> rows;
    FitResult fit;  ///< gap against eps, rows with eps > 0
    double CN = 0.0;
    bool all_hold = true;
};

/// Truncated-model sweep of C_N (pi - D)^N <= lambda_1 - N; eps = 0 rows are the model
/// itself and are reported but not fitted or tested.
DiameterTable diameter_deficit_sweep(double N, std::span<const double> eps, std::size_t cells = 4096);

struct UpperGapReport {
    std::vector<double> eps;
    std::vector<double> ratios;            ///< (lambda_1 - N) / eps
    std::vector<double> candidate_ratios;  ///< (Rayleigh(normalized sqrt(N+1) cos) - N) / eps
    double max_ratio = 0.0;
    double ratio_range = 0.0;
    double candidate_max = 0.0;
};

/// lambda_1 - N <= C eps on the rescaled model family h(t) = (pi/D) h_N(pi t / D).
/// Requires 0 <= eps <= 0.3; eps = 0 is skipped.
UpperGapReport upper_gap_check(double N, std::span<const double> eps, std::size_t cells = 4096);

struct EigenComparison {
    double lhs = 0.0;          ///< min over sign of |v -+ u*|^2_{W^{1,2}}
    double gap = 0.0;          ///< int |v'|^2 - int |u*'|^2
    double constant = 0.0;     ///< lhs / gap (0 when both vanish)
    double overlap = 0.0;      ///< |int v u* dm|
    double deficit = 0.0;      ///< int |v'|^2 - N
    bool within_guard = true;  ///< deficit < guard
    bool far_from_eigen = false;  ///< overlap <= 1/2
    double rayleigh_margin = 0.0;  ///< int |v'|^2 - lambda_1
    double lambda1 = 0.0;
};

/// Both sides of the eigenfunction comparison for v (recentred and normalized first).
EigenComparison eigen_comparison_check(const WeightedInterval& w, std::span<const double> v, double guard = 0.1);

/// `param,delta,dist_l2,dist_w12,lambda1,excluded` with shortest round-trip numbers.
void write_sweep_csv(std::ostream& out, const SweepTable& table);
nlohmann::json sweep_summary(const SweepTable& table);
void write_diameter_csv(std::ostream& out, const DiameterTable& table);
nlohmann::json diameter_summary(const DiameterTable& table);

}  // namespace obatalab::obata
