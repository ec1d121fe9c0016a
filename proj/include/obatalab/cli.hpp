#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "obatalab/core_measure.hpp"

namespace obatalab::cli {

inline constexpr const char* kSoftware = "obatalab";
inline constexpr const char* kSweepSchema = "sweep-v1";

enum class Command { Profile, Spectrum, Obata, Localize, Sweep, CheckDensity };

std::string command_name(Command c);
Command parse_command(const std::string& name);

/// Exit codes of run().
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitViolation = 2;

struct RunConfig {
    Command command = Command::Profile;
    double dim = 2.0;
    std::optional<double> diam;
    std::optional<double> K;  ///< check-density and csv spectra; default N - 1
    std::size_t grid = 4096;
    std::uint64_t seed = 0;
    std::optional<double> beta;
    std::optional<double> gamma;
    std::vector<double> v;       ///< profile volumes; default {0.5}
    std::vector<double> params;  ///< obata sweep parameters; default 0.2 * 2^{-k}, k < 5
    std::string family = "perturbed-cosine";
    bool model = false;     ///< spectrum of the model space
    bool diameter = false;  ///< obata: diameter sweep instead of the distance sweep
    std::size_t count = 1;  ///< spectrum: number of eigenvalues
    std::optional<std::filesystem::path> config;   ///< rayfam-v1 or sweep-v1 document
    std::optional<std::filesystem::path> density;  ///< `t,h` CSV
    std::filesystem::path out = ".";
    bool timing = false;  ///< record the wall-clock runtime in summary.json
    bool plot = true;
};

/// Canonical echo of everything that affects the results (not the output directory or timing).
nlohmann::json config_json(const RunConfig& c);
/// FNV-1a 64 of the compact config_json dump, as 16 hex digits.
std::string config_hash(const RunConfig& c);

/// Numeric CSV with a header row.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    static Table parse(std::istream& in);
    static Table parse_file(const std::filesystem::path& path);
    /// Column index; throws ShapeError when absent.
    std::size_t column(const std::string& name) const;
};

struct PlotSpec {
    std::string x;
    std::string y;
    bool logx = false;
    bool logy = false;
    std::string title;
    /// Rows with a non-zero value in this column are left out.
    std::optional<std::string> mask;
};

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    std::size_t points = 0;
};

/// Least-squares line through the plotted points in log-log coordinates.
SlopeFit plot_fit(const Table& t, const PlotSpec& spec);

/// Deterministic SVG line plot: fixed 640x400 viewport, fixed-precision coordinates, one
/// polyline, and a slope annotation on log-log axes. Non-positive values are dropped on log
/// axes. Throws ShapeError on an empty table or when no point survives.
std::string render_plot(const Table& t, const PlotSpec& spec);
/// Renders first, then writes; nothing is written when rendering fails.
void write_plot(const std::filesystem::path& path, const Table& t, const PlotSpec& spec);

struct DensityCheck {
    measure::CdVerdict verdict;
    double length = 0.0;
    double K = 0.0;
    double N = 0.0;
};

DensityCheck check_density(const std::filesystem::path& path, double K, double N);

/// Runs one command, writes results.csv, summary.json and (when enabled) plot.svg into
/// config.out, and returns the exit code. Errors are reported on `log`.
int run(const RunConfig& config, std::ostream& log);

/// Parses argv with subcommands and calls run().
int main_entry(int argc, char** argv);

}  // namespace obatalab::cli
