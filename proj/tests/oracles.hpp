// Independent reference computations used only by the tests.
#ifndef AMLEVY_TESTS_ORACLES_HPP
#define AMLEVY_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

namespace oracle {

// Plain bisection.
inline double bisect(const std::function<double(double)>& f, double lo, double hi, int iters = 200)
{
    double flo = f(lo);
    for (int i = 0; i < iters; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((fm > 0) == (flo > 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// tanh-sinh on [a,b]; handles endpoint singularities.
inline double ts_integral(const std::function<double(double)>& f, double a, double b)
{
    static boost::math::quadrature::tanh_sinh<double> integ(15);
    return integ.integrate(f, a, b, 1e-13);
}

// \int_{(a0,0)} (e^{izy} - 1 - izy 1_{|y|<=1}) eta0 |y|^{-1-alpha} dy via tanh-sinh,
// using the distance to the endpoint so the cancellation near 0 stays exact.
inline std::complex<double> tempered_stable_exponent(double alpha, double eta0, double a0,
                                                     std::complex<double> z)
{
    const std::complex<double> I(0, 1);
    const double A = -a0;
    const std::complex<double> c = -I * z; // izy = c s with y = -s
    auto g = [&](double s) -> std::complex<double> {
        const std::complex<double> w = c * s;
        if (s <= 1.0) {
            // (e^w - 1 - w) / s^2 kept finite as s -> 0
            std::complex<double> q;
            if (std::abs(w) < 1e-2) {
                std::complex<double> t = 0.5, sum = 0;
                for (int k = 3; k < 30; ++k) {
                    sum += t;
                    t *= w / double(k);
                }
                q = sum * c * c;
            } else {
                q = (std::exp(w) - 1.0 - w) / (s * s);
            }
            return eta0 * q * std::pow(s, 1.0 - alpha);
        }
        return eta0 * (std::exp(w) - 1.0) * std::pow(s, -1.0 - alpha);
    };
    std::complex<double> total = 0;
    const double cuts[] = {0.0, std::min(1.0, A), A};
    for (int i = 0; i < 2; ++i) {
        const double a = cuts[i], b = cuts[i + 1];
        if (!(b > a))
            continue;
        const double re = ts_integral([&](double s) { return g(s).real(); }, a, b);
        const double im = ts_integral([&](double s) { return g(s).imag(); }, a, b);
        total += std::complex<double>(re, im);
    }
    return total;
}

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double bs_put(double S, double K, double r, double q, double sigma, double T)
{
    const double v = sigma * std::sqrt(T);
    const double d1 = (std::log(S / K) + (r - q) * T) / v + 0.5 * v;
    return K * std::exp(-r * T) * norm_cdf(v - d1) - S * std::exp(-q * T) * norm_cdf(-d1);
}

// Cox-Ross-Rubinstein tree for the American put.
inline double crr_american_put(double S, double K, double r, double q, double sigma, double T, int steps)
{
    const double dt = T / steps;
    const double u = std::exp(sigma * std::sqrt(dt));
    const double p = (std::exp((r - q) * dt) - 1.0 / u) / (u - 1.0 / u);
    const double disc = std::exp(-r * dt);
    std::vector<double> v(steps + 1);
    for (int k = 0; k <= steps; ++k)
        v[k] = std::max(K - S * std::pow(u, 2.0 * k - steps), 0.0);
    for (int n = steps - 1; n >= 0; --n)
        for (int k = 0; k <= n; ++k) {
            const double cont = disc * (p * v[k + 1] + (1 - p) * v[k]);
            v[k] = std::max(cont, K - S * std::pow(u, 2.0 * k - n));
        }
    return v[0];
}

} // namespace oracle

#endif
