#ifndef AMLEVY_JUMP_MEASURE_HPP
#define AMLEVY_JUMP_MEASURE_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "quadrature.hpp"

namespace amlevy {

struct Atom {
    double location;  // log-return
    double intensity; // jumps per year
};

// Compound Poisson with finitely many jump sizes.
struct Atoms {
    std::vector<Atom> atoms;
};

// Kou-type density: lambda * (p eta_up e^{-eta_up y} 1_{y>0} + (1-p) eta_down e^{eta_down y} 1_{y<0}).
struct DoubleExponential {
    double lambda;
    double p;
    double eta_up;
    double eta_down;
};

// Density eta(y)/|y|^{1+alpha} on (a0, 0). Constant eta0 unless `eta` is set,
// in which case `eta_sup(a)` must return the sup of eta over (a, 0).
struct TemperedStableNegative {
    double alpha;
    double eta0;
    double a0;
    std::function<double(double)> eta;
    std::function<double(double)> eta_sup;

    double eta_at(double y) const { return eta ? eta(y) : eta0; }
    double sup_eta(double a) const { return eta_sup ? eta_sup(a) : eta0; }
};

// Two-sided variance-gamma type density:
// c_neg e^{-g|y|}/|y| for y<0 and c_pos e^{-m y}/y for y>0.
struct GammaLike {
    double c_neg;
    double g;
    double c_pos;
    double m;
};

using JumpComponent = std::variant<Atoms, DoubleExponential, TemperedStableNegative, GammaLike>;

// Sum of components; an empty list is the zero measure.
struct JumpMeasure {
    std::vector<JumpComponent> components;

    bool empty() const { return components.empty(); }
};

namespace detail {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

inline double density(const DoubleExponential& d, double y)
{
    if (y > 0)
        return d.lambda * d.p * d.eta_up * std::exp(-d.eta_up * y);
    if (y < 0)
        return d.lambda * (1 - d.p) * d.eta_down * std::exp(d.eta_down * y);
    return 0.0;
}

inline double density(const TemperedStableNegative& d, double y)
{
    if (y >= 0 || y <= d.a0)
        return 0.0;
    return d.eta_at(y) * std::pow(-y, -1.0 - d.alpha);
}

inline double density(const GammaLike& d, double y)
{
    if (y > 0)
        return d.c_pos * std::exp(-d.m * y) / y;
    if (y < 0)
        return d.c_neg * std::exp(d.g * y) / (-y);
    return 0.0;
}

// Power of |y|^{-1} in the density near 0.
inline double singularity(const DoubleExponential&) { return 0.0; }
inline double singularity(const TemperedStableNegative& d) { return 1.0 + d.alpha; }
inline double singularity(const GammaLike&) { return 1.0; }

inline std::pair<double, double> support(const DoubleExponential& d)
{
    return {d.p < 1 ? -kInf : 0.0, d.p > 0 ? kInf : 0.0};
}
inline std::pair<double, double> support(const TemperedStableNegative& d) { return {d.a0, 0.0}; }
inline std::pair<double, double> support(const GammaLike& d)
{
    return {d.c_neg > 0 ? -kInf : 0.0, d.c_pos > 0 ? kInf : 0.0};
}

// \int_{(lo,hi)} f(y) nu(dy) for an absolutely continuous component.
// f(y) = O(|y|^order) as y -> 0.
template <class D, class F>
double integrate_density(const D& d, F&& f, double lo, double hi, double order, double tol)
{
    auto [slo, shi] = support(d);
    lo = std::max(lo, slo);
    hi = std::min(hi, shi);
    if (!(hi > lo))
        return 0.0;
    std::vector<double> cuts{lo};
    for (double c : {-1.0, 0.0, 1.0})
        if (c > lo && c < hi)
            cuts.push_back(c);
    cuts.push_back(hi);

    const double beta = order - singularity(d);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double a = cuts[i], b = cuts[i + 1];
        double part = 0.0;
        if (b == 0.0 && beta < 0.0) {
            part = quad::power_singular([&](double s) { return f(-s) * density(d, -s); }, b - a,
                                        beta, tol);
        } else if (a == 0.0 && beta < 0.0) {
            part = quad::power_singular([&](double s) { return f(s) * density(d, s); }, b - a,
                                        beta, tol);
        } else if (std::isinf(a)) {
            part = quad::semi_infinite([&](double s) { return f(-s) * density(d, -s); }, -b, tol);
        } else if (std::isinf(b)) {
            part = quad::semi_infinite([&](double s) { return f(s) * density(d, s); }, a, tol);
        } else {
            part = quad::gk([&](double y) { return f(y) * density(d, y); }, a, b, tol);
        }
        total += part;
    }
    return total;
}

// Generalized exponential integral E_p(z) for |arg z| < pi, |z| moderately large.
inline cplx expint_cf(double p, cplx z)
{
    const double tiny = 1e-300;
    cplx b = z + p;
    cplx c = 1.0 / tiny;
    cplx d = 1.0 / b;
    cplx h = d;
    for (int i = 1; i < 5000; ++i) {
        const double an = -i * (p - 1.0 + i);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        const cplx del = c * d;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16)
            return h * std::exp(-z);
    }
    throw std::runtime_error("expint_cf: continued fraction did not converge");
}

// G(w) = \int_0^A (e^{-ws} - 1 + ws) s^{-1-alpha} ds.
inline cplx ts_core(double alpha, double A, cplx w)
{
    const cplx zeta = w * A;
    const double scale = std::pow(A, -alpha);
    if (std::abs(zeta) <= 4.0) {
        cplx sum = 0.0, term = 1.0; // (-zeta)^k / k!
        for (int k = 1; k < 200; ++k) {
            term *= -zeta / double(k);
            if (k < 2)
                continue;
            const cplx add = term / (k - alpha);
            sum += add;
            if (std::abs(add) < 1e-18 * std::max(1.0, std::abs(sum)))
                break;
        }
        return scale * sum;
    }
    const double g = boost::math::tgamma(-alpha);
    return g * std::pow(w, alpha) - scale * expint_cf(1.0 + alpha, zeta) + scale / alpha -
           w * std::pow(A, 1.0 - alpha) / (alpha - 1.0);
}

} // namespace detail

// \int_{(lo,hi)\{0}} f(y) nu(dy), f(y) = O(|y|^order) near 0.
template <class F>
double integrate(const JumpComponent& c, F&& f, double lo = -kInf, double hi = kInf,
                 double order = 0.0, double tol = kQuadTol)
{
    return std::visit(detail::overloaded{
                          [&](const Atoms& a) {
                              double s = 0.0;
                              for (const auto& at : a.atoms)
                                  if (at.location > lo && at.location < hi && at.location != 0.0)
                                      s += at.intensity * f(at.location);
                              return s;
                          },
                          [&](const auto& d) {
                              return detail::integrate_density(d, f, lo, hi, order, tol);
                          }},
                      c);
}

template <class F>
double integrate(const JumpMeasure& nu, F&& f, double lo = -kInf, double hi = kInf,
                 double order = 0.0, double tol = kQuadTol)
{
    double s = 0.0;
    for (const auto& c : nu.components)
        s += integrate(c, f, lo, hi, order, tol);
    return s;
}

inline double total_mass(const JumpComponent& c)
{
    return std::visit(detail::overloaded{
                          [](const Atoms& a) {
                              double s = 0.0;
                              for (const auto& at : a.atoms)
                                  s += at.intensity;
                              return s;
                          },
                          [](const DoubleExponential& d) { return d.lambda; },
                          [](const TemperedStableNegative&) { return kInf; },
                          [](const GammaLike& d) { return d.c_neg + d.c_pos > 0 ? kInf : 0.0; }},
                      c);
}

inline double total_mass(const JumpMeasure& nu)
{
    double s = 0.0;
    for (const auto& c : nu.components)
        s += total_mass(c);
    return s;
}

// \int_{|y|<=1} |y| nu(dy), possibly infinite.
inline double small_abs_moment(const JumpComponent& c)
{
    if (auto ts = std::get_if<TemperedStableNegative>(&c)) {
        if (ts->alpha >= 1.0)
            return kInf;
        if (!ts->eta)
            return ts->eta0 * std::pow(std::min(1.0, -ts->a0), 1.0 - ts->alpha) / (1.0 - ts->alpha);
    }
    return integrate(c, [](double y) { return std::abs(y); }, -1.0, 1.0, 1.0);
}

inline double small_abs_moment(const JumpMeasure& nu)
{
    double s = 0.0;
    for (const auto& c : nu.components)
        s += small_abs_moment(c);
    return s;
}

inline bool finite_variation(const JumpMeasure& nu) { return std::isfinite(small_abs_moment(nu)); }

// Open interval of p with \int_{|y|>=1} e^{py} nu(dy) < inf.
inline std::pair<double, double> moment_strip(const JumpMeasure& nu)
{
    double lo = -kInf, hi = kInf;
    for (const auto& c : nu.components) {
        std::visit(detail::overloaded{[&](const DoubleExponential& d) {
                                          if (d.p > 0)
                                              hi = std::min(hi, d.eta_up);
                                          if (d.p < 1)
                                              lo = std::max(lo, -d.eta_down);
                                      },
                                      [&](const GammaLike& d) {
                                          if (d.c_pos > 0)
                                              hi = std::min(hi, d.m);
                                          if (d.c_neg > 0)
                                              lo = std::max(lo, -d.g);
                                      },
                                      [](const auto&) {}},
                   c);
    }
    return {lo, hi};
}

// Range [lo, hi] outside which the measure is negligible: nu(y<lo) < tol and
// \int_{y>hi} e^y nu(dy) < tol.
inline std::pair<double, double> effective_support(const JumpMeasure& nu, double tol = 1e-10)
{
    double lo = 0.0, hi = 0.0;
    for (const auto& c : nu.components) {
        std::visit(
            detail::overloaded{
                [&](const Atoms& a) {
                    for (const auto& at : a.atoms) {
                        lo = std::min(lo, at.location);
                        hi = std::max(hi, at.location);
                    }
                },
                [&](const DoubleExponential& d) {
                    if (d.p < 1) {
                        const double mass = d.lambda * (1 - d.p);
                        lo = std::min(lo, -std::max(0.0, std::log(mass / tol)) / d.eta_down);
                    }
                    if (d.p > 0) {
                        const double k = d.lambda * d.p * d.eta_up / (d.eta_up - 1.0);
                        hi = std::max(hi, std::max(0.0, std::log(k / tol)) / (d.eta_up - 1.0));
                    }
                },
                [&](const TemperedStableNegative& d) { lo = std::min(lo, d.a0); },
                [&](const GammaLike& d) {
                    if (d.c_neg > 0) {
                        double y = 1.0;
                        while (d.c_neg * std::exp(-d.g * y) / (d.g * y) > tol)
                            y *= 1.25;
                        lo = std::min(lo, -y);
                    }
                    if (d.c_pos > 0) {
                        double y = 1.0;
                        while (d.c_pos * std::exp(-(d.m - 1.0) * y) / ((d.m - 1.0) * y) > tol)
                            y *= 1.25;
                        hi = std::max(hi, y);
                    }
                }},
            c);
    }
    return {lo, hi};
}

// \int (e^{izy} - 1 - izy 1_{|y|<=1}) nu(dy) by quadrature.
inline cplx exponent_quadrature(const JumpComponent& c, cplx z, double tol = 1e-12)
{
    const cplx I(0.0, 1.0);
    auto f = [&](double y) -> cplx {
        const cplx w = I * z * y;
        if (std::abs(y) <= 1.0) {
            if (std::abs(w) < 1e-3) {
                // e^w - 1 - w by series
                return w * w * (0.5 + w * (1.0 / 6 + w * (1.0 / 24 + w / 120.0)));
            }
            return std::exp(w) - 1.0 - w;
        }
        return std::exp(w) - 1.0;
    };
    const double re = integrate(c, [&](double y) { return f(y).real(); }, -kInf, kInf, 2.0, tol);
    const double im = integrate(c, [&](double y) { return f(y).imag(); }, -kInf, kInf, 2.0, tol);
    return {re, im};
}

// Same integral, closed form where available.
inline cplx exponent(const JumpComponent& c, cplx z)
{
    const cplx I(0.0, 1.0);
    const cplx iz = I * z;
    return std::visit(
        detail::overloaded{
            [&](const Atoms& a) {
                cplx s = 0.0;
                for (const auto& at : a.atoms) {
                    const double y = at.location;
                    s += at.intensity *
                         (std::exp(iz * y) - 1.0 - (std::abs(y) <= 1.0 ? iz * y : cplx(0.0)));
                }
                return s;
            },
            [&](const DoubleExponential& d) {
                const double mu = d.eta_up, md = d.eta_down;
                const cplx jump = d.lambda * (d.p * mu / (mu - iz) + (1 - d.p) * md / (md + iz) - 1.0);
                const double small = d.lambda * d.p * (1 - std::exp(-mu) * (1 + mu)) / mu -
                                     d.lambda * (1 - d.p) * (1 - std::exp(-md) * (1 + md)) / md;
                return jump - iz * small;
            },
            [&](const TemperedStableNegative& d) {
                const double A = -d.a0;
                if (d.eta || (iz.real() < 0.0 && std::abs(iz) * A > 4.0))
                    return exponent_quadrature(c, z);
                const double comp = A > 1.0 ? (std::abs(d.alpha - 1.0) > 0
                                                   ? (std::pow(A, 1.0 - d.alpha) - 1.0) / (1.0 - d.alpha)
                                                   : std::log(A))
                                            : 0.0;
                return d.eta0 * (detail::ts_core(d.alpha, A, iz) - iz * comp);
            },
            [&](const GammaLike& d) {
                cplx s = 0.0;
                if (d.c_pos > 0)
                    s += -d.c_pos * std::log(1.0 - iz / d.m) - iz * d.c_pos * (1 - std::exp(-d.m)) / d.m;
                if (d.c_neg > 0)
                    s += -d.c_neg * std::log(1.0 + iz / d.g) + iz * d.c_neg * (1 - std::exp(-d.g)) / d.g;
                return s;
            }},
        c);
}

inline cplx exponent(const JumpMeasure& nu, cplx z)
{
    cplx s = 0.0;
    for (const auto& c : nu.components)
        s += exponent(c, z);
    return s;
}

inline void validate(const JumpComponent& c)
{
    auto fail = [](const std::string& m) { throw std::invalid_argument(m); };
    std::visit(detail::overloaded{
                   [&](const Atoms& a) {
                       for (const auto& at : a.atoms) {
                           if (!(at.intensity > 0) || !std::isfinite(at.location))
                               fail("atom intensity must be positive and location finite");
                       }
                   },
                   [&](const DoubleExponential& d) {
                       if (!(d.lambda > 0) || !(d.p >= 0 && d.p <= 1) || !(d.eta_up > 0) ||
                           !(d.eta_down > 0))
                           fail("double exponential: need lambda>0, p in [0,1], decay rates > 0");
                   },
                   [&](const TemperedStableNegative& d) {
                       if (!(d.alpha > 0 && d.alpha < 2) || d.alpha == 1.0)
                           fail("tempered stable: alpha must lie in (0,2) and differ from 1");
                       if (!(d.eta0 > 0) || !(d.a0 < 0))
                           fail("tempered stable: need eta0 > 0 and a0 < 0");
                       if (d.eta && !d.eta_sup)
                           fail("tempered stable: a custom eta needs its sup function");
                   },
                   [&](const GammaLike& d) {
                       if (d.c_neg < 0 || d.c_pos < 0 || !(d.g > 0) || !(d.m > 0))
                           fail("gamma-like: need c >= 0 and decay rates > 0");
                   }},
               c);
}

} // namespace amlevy

#endif
