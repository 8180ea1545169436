#ifndef AMLEVY_ORACLES_HPP
#define AMLEVY_ORACLES_HPP

// Reference prices for the pure-diffusion case, used by `verify`.

#include <algorithm>
#include <cmath>
#include <vector>

namespace amlevy::reference {

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double black_scholes_put(double S, double K, double r, double q, double sigma, double T)
{
    if (T <= 0)
        return std::max(K - S, 0.0);
    const double sd = sigma * std::sqrt(T);
    const double d1 = (std::log(S / K) + (r - q + 0.5 * sigma * sigma) * T) / sd;
    const double d2 = d1 - sd;
    return K * std::exp(-r * T) * norm_cdf(-d2) - S * std::exp(-q * T) * norm_cdf(-d1);
}

// Cox-Ross-Rubinstein tree for the American put.
inline double binomial_american_put(double S, double K, double r, double q, double sigma, double T,
                                    int steps = 2000)
{
    const double dt = T / steps;
    const double u = std::exp(sigma * std::sqrt(dt));
    const double d = 1.0 / u;
    const double disc = std::exp(-r * dt);
    const double p = (std::exp((r - q) * dt) - d) / (u - d);
    std::vector<double> v(steps + 1);
    for (int i = 0; i <= steps; ++i)
        v[i] = std::max(K - S * std::pow(u, 2 * i - steps), 0.0);
    for (int n = steps - 1; n >= 0; --n) {
        for (int i = 0; i <= n; ++i) {
            const double cont = disc * (p * v[i + 1] + (1 - p) * v[i]);
            v[i] = std::max(cont, K - S * std::pow(u, 2 * i - n));
        }
    }
    return v[0];
}

} // namespace amlevy::reference

#endif
