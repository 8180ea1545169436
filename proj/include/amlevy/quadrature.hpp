#ifndef AMLEVY_QUADRATURE_HPP
#define AMLEVY_QUADRATURE_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

namespace amlevy {

using cplx = std::complex<double>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kPi = 3.14159265358979323846;

// Default relative tolerance for measure integrals.
inline constexpr double kQuadTol = 1e-10;

namespace quad {

// Adaptive Gauss-Kronrod on a finite interval.
template <class F>
double gk(F f, double a, double b, double tol = kQuadTol, unsigned depth = 18)
{
    if (!(b > a))
        return 0.0;
    double err = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, depth, tol, &err);
}

// Gauss-Kronrod with bisection until the error is below an absolute tolerance.
// A panel is accepted only when its halves agree with it, which guards against aliasing.
namespace detail {
template <class F>
double gk31(F& f, double a, double b, double* err)
{
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 0, 0.0, err);
}

template <class F>
double gk_abs_rec(F& f, double a, double b, double whole, double abs_tol, int depth)
{
    const double m = 0.5 * (a + b);
    double el = 0.0, er = 0.0;
    const double l = gk31(f, a, m, &el);
    const double r = gk31(f, m, b, &er);
    if (depth == 0 || (std::abs(whole - (l + r)) <= abs_tol && el + er <= abs_tol))
        return l + r;
    return gk_abs_rec(f, a, m, l, 0.5 * abs_tol, depth - 1) + gk_abs_rec(f, m, b, r, 0.5 * abs_tol, depth - 1);
}
} // namespace detail

template <class F>
double gk_abs(F f, double a, double b, double abs_tol, int depth = 30)
{
    double err = 0.0;
    const double whole = detail::gk31(f, a, b, &err);
    return detail::gk_abs_rec(f, a, b, whole, abs_tol, depth);
}

// Integral over [a, inf) by Gauss-Kronrod on doubling panels; f must decay.
template <class F>
double semi_infinite(F f, double a, double tol = kQuadTol)
{
    double total = 0.0, lo = a, width = 0.5;
    int quiet = 0;
    for (int i = 0; i < 80 && quiet < 2; ++i) {
        const double part = gk(f, lo, lo + width, tol);
        total += part;
        quiet = std::abs(part) <= 1e-17 * std::abs(total) || part == 0.0 ? quiet + 1 : 0;
        lo += width;
        width *= 2.0;
    }
    return total;
}

// Integral over [0, L] of g with g(s) = O(s^beta) at 0, beta > -1.
// The substitution s = t^p with p = 1/(1+beta) removes the leading singularity.
template <class F>
double power_singular(F g, double L, double beta, double tol = kQuadTol)
{
    if (!(L > 0.0))
        return 0.0;
    if (!(beta > -1.0))
        return kInf;
    const double p = 1.0 / (1.0 + beta);
    if (std::abs(p - 1.0) < 1e-14)
        return gk(g, 0.0, L, tol);
    const double tmax = std::pow(L, 1.0 / p);
    auto h = [&](double t) {
        if (t <= 0.0)
            return 0.0;
        const double s = std::pow(t, p);
        return g(s) * p * std::pow(t, p - 1.0);
    };
    return gk(h, 0.0, tmax, tol);
}

template <class F>
cplx gk_complex(F f, double a, double b, double tol = kQuadTol)
{
    double re = gk([&](double x) { return f(x).real(); }, a, b, tol);
    double im = gk([&](double x) { return f(x).imag(); }, a, b, tol);
    return {re, im};
}

} // namespace quad

// Pairwise (cascade) summation.
template <class T>
T pairwise_sum(std::span<const T> v)
{
    if (v.size() <= 16) {
        T s{};
        for (const T& x : v)
            s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

template <class T>
T pairwise_sum(const std::vector<T>& v)
{
    return pairwise_sum(std::span<const T>(v.data(), v.size()));
}

// Bracketed root of a monotone function; f(lo) and f(hi) must differ in sign.
template <class F>
double find_root(F f, double lo, double hi, double rel_tol = 1e-12, unsigned max_iter = 200)
{
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0)
        return lo;
    if (fhi == 0.0)
        return hi;
    if ((flo > 0) == (fhi > 0))
        throw std::runtime_error("find_root: interval does not bracket a root");
    std::uintmax_t it = max_iter;
    auto tol = [rel_tol](double a, double b) { return std::abs(a - b) <= rel_tol * std::abs(a); };
    auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, it);
    return 0.5 * (r.first + r.second);
}

} // namespace amlevy

#endif
