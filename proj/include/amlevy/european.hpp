#ifndef AMLEVY_EUROPEAN_HPP
#define AMLEVY_EUROPEAN_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

#include "levy_model.hpp"
#include "quadrature.hpp"
#include "simulation.hpp"

namespace amlevy {

enum class PricingMethod { Fourier, MonteCarlo };

struct EuropeanQuote {
    double theta;
    double spot;
    double value;
    PricingMethod method;
    double stderr_ = 0.0; // Monte Carlo only
};

namespace detail {

// Law of X_theta split as (atom counts) + R, R independent with exponent phi_R.
struct FourierSetup {
    std::vector<Atom> atoms;
    LevyModel rest; // sigma, drift and the non-atom components; gamma holds R's drift
    bool deterministic = false;
    double rest_mass = kInf; // total mass of the non-atom jumps when sigma = 0
    double rest_small = 0.0; // \int_{|y|<=1} y nu_rest(dy)
};

inline FourierSetup fourier_setup(const LevyModel& m)
{
    FourierSetup s;
    s.rest.sigma = m.sigma;
    s.rest.market = m.market;
    double atom_comp = 0.0;
    for (const auto& c : m.nu.components) {
        if (auto a = std::get_if<Atoms>(&c)) {
            for (const auto& at : a->atoms) {
                if (at.location == 0.0)
                    continue;
                s.atoms.push_back(at);
                if (std::abs(at.location) <= 1.0)
                    atom_comp += at.intensity * at.location;
            }
        } else {
            s.rest.nu.components.push_back(c);
        }
    }
    s.rest.gamma = m.gamma - atom_comp;
    s.deterministic = m.sigma == 0.0 && s.rest.nu.empty();
    if (m.sigma == 0.0 && !s.rest.nu.empty()) {
        s.rest_mass = total_mass(s.rest.nu);
        if (std::isfinite(s.rest_mass))
            s.rest_small = integrate(s.rest.nu, [](double y) { return y; }, -1.0, 1.0, 1.0);
    }
    return s;
}

inline cplx rest_exponent(const FourierSetup& s, cplx z)
{
    const cplx I(0.0, 1.0);
    return -0.5 * s.rest.sigma * s.rest.sigma * z * z + I * s.rest.gamma * z + exponent(s.rest.nu, z);
}

// Enumerates atom count vectors with probability mass above `cut`.
inline void enumerate_counts(const std::vector<Atom>& atoms, double theta, std::size_t j, double logp,
                             double shift, const std::function<void(double, double)>& visit,
                             double cut = 1e-17)
{
    if (j == atoms.size()) {
        visit(std::exp(logp), shift);
        return;
    }
    const double mu = atoms[j].intensity * theta;
    const int mode = int(mu);
    // walk outward from the mode in both directions
    double lp_mode = -mu + mode * std::log(mu) - std::lgamma(mode + 1.0);
    if (mu == 0.0)
        lp_mode = 0.0;
    double lp = lp_mode;
    for (int k = mode; k >= 0; --k) {
        if (logp + lp < std::log(cut) && k < mode)
            break;
        enumerate_counts(atoms, theta, j + 1, logp + lp, shift + k * atoms[j].location, visit, cut);
        if (k > 0)
            lp += std::log(double(k)) - std::log(mu);
    }
    lp = lp_mode;
    for (int k = mode + 1;; ++k) {
        lp += std::log(mu) - std::log(double(k));
        if (logp + lp < std::log(cut))
            break;
        enumerate_counts(atoms, theta, j + 1, logp + lp, shift + k * atoms[j].location, visit, cut);
    }
}

// (1/pi) \int_0^inf Re[e^{iu kappa} psi(u)] / (u^2 + 1/4) du.
inline double lewis_integral(const std::function<cplx(double)>& psi, double kappa, double tol_abs)
{
    const cplx I(0.0, 1.0);
    auto f = [&](double u) { return (std::exp(I * u * kappa) * psi(u)).real() / (u * u + 0.25); };
    double total = 0.0, lo = 0.0, width = 1.0;
    for (int i = 0; i < 60; ++i) {
        const double hi = lo + width;
        const double part = quad::gk_abs(f, lo, hi, tol_abs);
        total += part;
        const double tail = std::abs(psi(hi)) / hi + std::abs(psi(hi + width)) / (hi + width);
        lo = hi;
        if (std::abs(part) < tol_abs && tail < tol_abs)
            break;
        if (lo > 1e6)
            break;
        width *= 2.0;
    }
    return total / kPi;
}

} // namespace detail

inline double intrinsic_put(double K, double x) { return std::max(K - x, 0.0); }

// Lewis-type Fourier integral along Im z = -1/2, conditioned on the atom counts.
inline EuropeanQuote price_put_fourier(const LevyModel& m, double spot, double theta)
{
    const double K = m.market.strike;
    if (!(theta > 0))
        return {theta, spot, intrinsic_put(K, spot), PricingMethod::Fourier};
    const double r = m.market.r, q = m.market.delta;
    const auto setup = detail::fourier_setup(m);
    const cplx I(0.0, 1.0);

    double c_rest = 0.0; // log E e^{R_theta} / theta
    if (!setup.deterministic)
        c_rest = rest_exponent(setup, cplx(0.0, -1.0)).real();
    else
        c_rest = setup.rest.gamma;
    const double lam = setup.rest_mass;
    const bool subtract = std::isfinite(lam);
    // drift of R' on the event of no rest-jumps
    const double nojump = (setup.rest.gamma - setup.rest_small - c_rest) * theta;

    auto psi = [&](double u) {
        const cplx z(u, -0.5);
        cplx v = std::exp(theta * (detail::rest_exponent(setup, z) - I * z * c_rest));
        if (subtract)
            v -= std::exp(-lam * theta + I * z * nojump);
        return v;
    };
    const double tol_abs = 1e-12;

    double total = 0.0;
    detail::enumerate_counts(setup.atoms, theta, 0, 0.0, 0.0, [&](double prob, double shift) {
        const double F = spot * std::exp((r - q) * theta + shift + c_rest * theta);
        double put;
        if (setup.deterministic) {
            put = intrinsic_put(K, F);
        } else {
            const double kappa = std::log(F / K);
            const double mass = subtract ? 1.0 - std::exp(-lam * theta) : 1.0;
            put = K * mass - std::sqrt(F * K) * detail::lewis_integral(psi, kappa, tol_abs);
            if (subtract)
                put += std::exp(-lam * theta) * intrinsic_put(K, F * std::exp(nojump));
        }
        total += prob * put;
    });
    double v = std::exp(-r * theta) * total;
    v = std::clamp(v, 0.0, K * std::exp(-r * theta));
    return {theta, spot, v, PricingMethod::Fourier};
}

inline EuropeanQuote price_put_mc(const LevyModel& m, double spot, double theta, std::size_t n_paths,
                                  std::uint64_t seed, const SimOptions& opt = {})
{
    const double K = m.market.strike;
    if (!(theta > 0))
        return {theta, spot, intrinsic_put(K, spot), PricingMethod::MonteCarlo, 0.0};
    const double r = m.market.r, q = m.market.delta;
    auto x = sample_terminal(m, theta, n_paths, seed, opt);
    const double disc = std::exp(-r * theta);
    const double fwd = spot * std::exp((r - q) * theta);
    for (auto& v : x)
        v = disc * intrinsic_put(K, fwd * std::exp(v));
    auto st = sample_stats(x);
    return {theta, spot, st.mean, PricingMethod::MonteCarlo, st.stderr_};
}

// Root in (0,K) of P_e(theta, x) = K - x. A hint (e.g. the root at a nearby theta)
// only changes where the bracket search starts.
inline double european_boundary(const LevyModel& m, double theta, double rel_tol = 1e-11, double hint = 0.0)
{
    const double K = m.market.strike;
    if (!(theta > 0))
        throw std::invalid_argument("european_boundary needs theta > 0");
    auto f = [&](double x) { return price_put_fourier(m, x, theta).value - (K - x); };
    if (hint > 0 && hint < K) {
        // f < 0 below the root, > 0 above
        double lo = hint, hi = hint, step = 1e-3;
        double flo = f(lo), fhi = flo;
        while (flo >= 0 && lo > K * 1e-12) {
            hi = lo;
            lo = std::max(hint * (1 - step), K * 1e-12);
            flo = f(lo);
            step *= 4;
        }
        step = 1e-3;
        while (fhi < 0 && hi < K * (1 - 1e-9)) {
            lo = hi;
            hi = std::min(hint * (1 + step), K * (1 - 1e-9));
            fhi = f(hi);
            step *= 4;
        }
        if (flo < 0 && fhi > 0)
            return find_root(f, lo, hi, rel_tol);
    }
    double s = 1e-9, hi = K * (1 - s);
    double fhi = f(hi);
    if (fhi <= 0)
        throw std::runtime_error("european_boundary: price does not exceed intrinsic near the strike");
    double lo = hi;
    for (;;) {
        s = std::min(1.0 - 1e-12, s * 4.0);
        lo = K * (1 - s);
        if (f(lo) < 0)
            break;
        hi = lo;
        if (s >= 1.0 - 1e-12)
            throw std::runtime_error("european_boundary: failed to bracket the root");
    }
    return find_root(f, lo, hi, rel_tol);
}

} // namespace amlevy

#endif
