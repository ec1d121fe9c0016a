#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace obatalab::spectral {

/// Symmetric tridiagonal matrix with diagonal d (size n) and off-diagonal e (size n-1).
struct SymTridiagonal {
    std::vector<double> d;
    std::vector<double> e;

    std::size_t size() const { return d.size(); }
    /// Number of eigenvalues strictly below x (Sturm sequence count).
    std::size_t count_below(double x) const;
    /// Gershgorin enclosure of the spectrum.
    void bounds(double& lo, double& hi) const;
    /// Eigenvalue with 0-based index j in ascending order, by bisection.
    double eigenvalue(std::size_t j) const;
    /// Unit eigenvector for a converged eigenvalue by inverse iteration, orthogonalized
    /// against `previous` (unit vectors).
    std::vector<double> eigenvector(double lambda, std::span<const std::vector<double>> previous) const;
};

/// Solves (T - shift I) x = rhs by Gaussian elimination with partial pivoting.
std::vector<double> solve_shifted(const SymTridiagonal& T, double shift, std::span<const double> rhs);

}  // namespace obatalab::spectral
