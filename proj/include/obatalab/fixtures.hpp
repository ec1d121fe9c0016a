#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace obatalab::loc::fixtures {

inline constexpr std::size_t kSweepPoints = 5;

/// Target deficit of sweep member k: 10^{-2-k}.
double sweep_delta(std::size_t k);

/// Model rays carrying sqrt(N+1) cos, no orthogonal energy: delta = 0.
nlohmann::json rigid(double N);
/// Two model rays with amplitudes 1 +- s, unspanned mass mu and constant orthogonal
/// energy; s and mu scale with the variance and long-mass envelopes so both sit at a
/// fixed ratio to them, and the energy brings the deficit to sweep_delta(k).
nlohmann::json combined_member(double N, std::size_t k);
/// Model rays with u = cos + s sin 2t, s = 0.2 * 2^{-k} times a per-ray factor.
nlohmann::json perturbed_member(double N, std::size_t k);
/// Two long model rays and one truncated ray of length 2 holding 5% of the c^2 mass.
nlohmann::json short_ray(double N);
/// Unspanned mass 0.1 with rigid rays, so the deficit is 0 and the long-mass bound fails.
nlohmann::json adversarial_mass(double N);
/// One perturbed ray just above the long-ray threshold holding almost all the deficit,
/// which saturates the Chebyshev bound on the bad-set energy.
nlohmann::json chebyshev_tight(double N);
/// combined_member at delta = 1e-4 with offsets delta^{beta/N}/2.
nlohmann::json pole_consistent(double N);
/// combined_member at delta = 1e-8 with one start offset of 0.5.
nlohmann::json pole_inconsistent(double N);
/// Model, truncated (D = pi - 0.05) and generated CSV rays with a, b = 0 and pole gap 0.05.
nlohmann::json suspension(double N);
/// sweep-v1 document listing the combined members, paths relative to the sweeps directory.
nlohmann::json combined_sweep(double N);
/// `t,h` rows of the generated density used by suspension(N).
std::string suspension_density_csv(double N);

/// Every shipped fixture as (path relative to the fixture root, file contents).
std::vector<std::pair<std::string, std::string>> all_fixtures();

}  // namespace obatalab::loc::fixtures
