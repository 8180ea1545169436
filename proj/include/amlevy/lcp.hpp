#ifndef AMLEVY_LCP_HPP
#define AMLEVY_LCP_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace amlevy {

struct NumericalFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Rows 1..n-2 of lower/diag/upper; rows 0 and n-1 are Dirichlet.
struct Tridiagonal {
    std::vector<double> lower, diag, upper;
    explicit Tridiagonal(std::size_t n = 0) : lower(n), diag(n), upper(n) {}
    std::size_t size() const { return diag.size(); }
    double row(const std::vector<double>& v, std::size_t j) const
    {
        return lower[j] * v[j - 1] + diag[j] * v[j] + upper[j] * v[j + 1];
    }
};

namespace detail {

// Eliminates upper entries from the right; returns the reduced diagonal and rhs.
inline void reduce_from_right(const Tridiagonal& A, const std::vector<double>& rhs, double right,
                              std::vector<double>& d, std::vector<double>& r)
{
    const std::size_t n = A.size();
    d.assign(n, 0.0);
    r.assign(n, 0.0);
    d[n - 2] = A.diag[n - 2];
    r[n - 2] = rhs[n - 2] - A.upper[n - 2] * right;
    for (std::size_t j = n - 2; j-- > 1;) {
        const double f = A.upper[j] / d[j + 1];
        d[j] = A.diag[j] - f * A.lower[j + 1];
        r[j] = rhs[j] - f * r[j + 1];
    }
}

} // namespace detail

// Thomas solve with Dirichlet ends.
inline std::vector<double> solve_tridiagonal(const Tridiagonal& A, const std::vector<double>& rhs,
                                             double left, double right)
{
    const std::size_t n = A.size();
    std::vector<double> d, r, v(n);
    detail::reduce_from_right(A, rhs, right, d, r);
    v[0] = left;
    v[n - 1] = right;
    for (std::size_t j = 1; j + 1 < n; ++j)
        v[j] = (r[j] - A.lower[j] * v[j - 1]) / d[j];
    return v;
}

// max over interior rows of |min(v - obstacle, (A v - rhs)/diag)|.
inline double complementarity_residual(const Tridiagonal& A, const std::vector<double>& rhs,
                                       const std::vector<double>& obstacle, const std::vector<double>& v)
{
    double worst = 0.0;
    for (std::size_t j = 1; j + 1 < v.size(); ++j) {
        const double res = (A.row(v, j) - rhs[j]) / A.diag[j];
        worst = std::max(worst, std::abs(std::min(v[j] - obstacle[j], res)));
    }
    return worst;
}

struct LcpOptions {
    double omega = 1.2;
    double tol = 1e-9; // absolute, on the complementarity residual
    int max_iter = 10000;
};

struct LcpStats {
    int sweeps = 0;
    double residual = 0.0;
};

// A v >= rhs, v >= obstacle, complementary; exercise region on the left.
// Brennan-Schwartz elimination gives the solution when the contact set is an interval
// starting at the left edge; projected SOR finishes the job otherwise.
inline std::vector<double> solve_lcp(const Tridiagonal& A, const std::vector<double>& rhs,
                                     const std::vector<double>& obstacle, double left, double right,
                                     const LcpOptions& opt = {}, LcpStats* stats = nullptr)
{
    const std::size_t n = A.size();
    std::vector<double> d, r, v(n);
    detail::reduce_from_right(A, rhs, right, d, r);
    v[0] = left;
    v[n - 1] = right;
    for (std::size_t j = 1; j + 1 < n; ++j)
        v[j] = std::max(obstacle[j], (r[j] - A.lower[j] * v[j - 1]) / d[j]);

    double res = complementarity_residual(A, rhs, obstacle, v);
    int it = 0;
    while (res > opt.tol) {
        if (it >= opt.max_iter)
            throw NumericalFailure("projected SOR did not converge: residual " + std::to_string(res) +
                                   " after " + std::to_string(it) + " sweeps");
        for (std::size_t j = 1; j + 1 < n; ++j) {
            const double gs = (rhs[j] - A.lower[j] * v[j - 1] - A.upper[j] * v[j + 1]) / A.diag[j];
            v[j] = std::max(obstacle[j], v[j] + opt.omega * (gs - v[j]));
        }
        ++it;
        res = complementarity_residual(A, rhs, obstacle, v);
    }
    if (stats)
        *stats = {it, res};
    return v;
}

} // namespace amlevy

#endif
