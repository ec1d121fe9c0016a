#include "obatalab/tridiagonal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "obatalab/errors.hpp"

namespace obatalab::spectral {

std::size_t SymTridiagonal::count_below(double x) const {
    const std::size_t n = d.size();
    const double tiny = std::numeric_limits<double>::min() / std::numeric_limits<double>::epsilon();
    std::size_t count = 0;
    double q = d[0] - x;
    if (q == 0.0) q = -tiny;
    if (q < 0.0) ++count;
    for (std::size_t i = 1; i < n; ++i) {
        q = d[i] - x - e[i - 1] * e[i - 1] / q;
        if (q == 0.0) q = -tiny;
        if (q < 0.0) ++count;
    }
    return count;
}

void SymTridiagonal::bounds(double& lo, double& hi) const {
    const std::size_t n = d.size();
    lo = std::numeric_limits<double>::infinity();
    hi = -lo;
    for (std::size_t i = 0; i < n; ++i) {
        double r = 0.0;
        if (i > 0) r += std::abs(e[i - 1]);
        if (i + 1 < n) r += std::abs(e[i]);
        lo = std::min(lo, d[i] - r);
        hi = std::max(hi, d[i] + r);
    }
}

double SymTridiagonal::eigenvalue(std::size_t j) const {
    if (j >= d.size()) throw PreconditionError("eigenvalue index out of range");
    double lo = 0.0, hi = 0.0;
    bounds(lo, hi);
    const double scale = std::max(std::abs(lo), std::abs(hi));
    lo -= 1e-12 * scale;
    hi += 1e-12 * scale;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (count_below(mid) > j) hi = mid;
        else lo = mid;
        if (hi - lo <= 2.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(lo), std::abs(hi)) +
                           std::numeric_limits<double>::min())
            break;
    }
    return 0.5 * (lo + hi);
}

std::vector<double> solve_shifted(const SymTridiagonal& T, double shift, std::span<const double> rhs) {
    const std::size_t n = T.size();
    // rows stored as (sub, diag, super, super2) after pivoting
    std::vector<double> a(n, 0.0), b(n), c(n, 0.0), f(n, 0.0), x(rhs.begin(), rhs.end());
    for (std::size_t i = 0; i < n; ++i) {
        b[i] = T.d[i] - shift;
        if (i > 0) a[i] = T.e[i - 1];
        if (i + 1 < n) c[i] = T.e[i];
    }
    const double tiny = std::numeric_limits<double>::epsilon() *
                        std::max(1.0, std::abs(shift) + std::abs(*std::max_element(T.d.begin(), T.d.end())));
    // forward elimination: row i has entries b[i] (col i), c[i] (col i+1), f[i] (col i+2)
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double sub = a[i + 1];
        if (std::abs(sub) > std::abs(b[i])) {
            // swap rows i and i+1
            std::swap(b[i], a[i + 1]);
            std::swap(c[i], b[i + 1]);
            f[i] = c[i + 1];
            c[i + 1] = 0.0;
            std::swap(x[i], x[i + 1]);
            // after swap: row i = (a[i+1]_old -> b[i], b[i+1]_old -> c[i], c[i+1]_old -> f[i])
            const double m = a[i + 1] / b[i];
            b[i + 1] -= m * c[i];
            c[i + 1] -= m * f[i];
            x[i + 1] -= m * x[i];
        } else {
            if (b[i] == 0.0) b[i] = tiny;
            const double m = sub / b[i];
            b[i + 1] -= m * c[i];
            x[i + 1] -= m * x[i];
        }
        a[i + 1] = 0.0;
    }
    if (b[n - 1] == 0.0) b[n - 1] = tiny;
    // back substitution
    x[n - 1] /= b[n - 1];
    if (n >= 2) x[n - 2] = (x[n - 2] - c[n - 2] * x[n - 1]) / b[n - 2];
    for (std::size_t k = n - 2; k-- > 0;) x[k] = (x[k] - c[k] * x[k + 1] - f[k] * x[k + 2]) / b[k];
    return x;
}

std::vector<double> SymTridiagonal::eigenvector(double lambda, std::span<const std::vector<double>> previous) const {
    const std::size_t n = d.size();
    double lo = 0.0, hi = 0.0;
    bounds(lo, hi);
    const double scale = std::max({std::abs(lo), std::abs(hi), 1.0});
    // shift slightly off the eigenvalue so the factorization stays finite
    const double shift = lambda + 1e-14 * scale;
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 0.5 * std::sin(1.7 * static_cast<double>(i) + 0.3);
    auto orthonormalize = [&](std::vector<double>& y) {
        for (const auto& p : previous) {
            double dot = 0.0;
            for (std::size_t i = 0; i < n; ++i) dot += p[i] * y[i];
            for (std::size_t i = 0; i < n; ++i) y[i] -= dot * p[i];
        }
        double norm = 0.0;
        for (double t : y) norm += t * t;
        norm = std::sqrt(norm);
        if (!(norm > 0.0)) throw ConditioningError("inverse iteration collapsed");
        for (double& t : y) t /= norm;
    };
    orthonormalize(v);
    for (int it = 0; it < 4; ++it) {
        v = solve_shifted(*this, shift, v);
        orthonormalize(v);
    }
    return v;
}

}  // namespace obatalab::spectral
