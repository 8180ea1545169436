#ifndef AMLEVY_ASYMPTOTICS_HPP
#define AMLEVY_ASYMPTOTICS_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "american.hpp"
#include "levy_model.hpp"
#include "quadrature.hpp"

namespace amlevy {

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class RegimeTag { DiffusionDominated, FiniteVariation, TemperedStable, InfiniteVariationOther, LimitBelowStrike };

inline const char* to_string(RegimeTag t)
{
    switch (t) {
    case RegimeTag::DiffusionDominated: return "DiffusionDominated";
    case RegimeTag::FiniteVariation: return "FiniteVariation";
    case RegimeTag::TemperedStable: return "TemperedStable";
    case RegimeTag::InfiniteVariationOther: return "InfiniteVariationOther";
    case RegimeTag::LimitBelowStrike: return "LimitBelowStrike";
    }
    return "?";
}

struct Regime {
    RegimeTag tag = RegimeTag::InfiniteVariationOther;
    double strike = 0.0;
    double sigma = 0.0;
    double neg_integral = 0.0; // \int (e^y-1)_- nu(dy)
    double alpha = 0.0;
    double eta0 = 0.0;
    double limit_price = 0.0;  // xi when d_plus < 0
};

// Single negative tempered-stable part with 1 < alpha < 2, everything else of finite variation.
inline const TemperedStableNegative* stable_part(const JumpMeasure& nu)
{
    const TemperedStableNegative* ts = nullptr;
    JumpMeasure rest;
    for (const auto& c : nu.components) {
        if (auto p = std::get_if<TemperedStableNegative>(&c); p && p->alpha > 1.0) {
            if (ts)
                return nullptr;
            ts = p;
        } else {
            rest.components.push_back(c);
        }
    }
    if (!ts || !finite_variation(rest))
        return nullptr;
    return ts;
}

inline Regime detect_regime(const LevyModel& m)
{
    Regime g;
    g.strike = m.market.strike;
    g.sigma = m.sigma;
    if (d_plus(m) < 0) {
        g.tag = RegimeTag::LimitBelowStrike;
        g.limit_price = limit_critical_price(m);
        return g;
    }
    if (finite_variation(m.nu)) {
        g.neg_integral = exp_moment_integrals(m).neg;
        g.tag = m.sigma > 0 ? RegimeTag::DiffusionDominated : RegimeTag::FiniteVariation;
        return g;
    }
    if (m.sigma == 0.0) {
        if (const auto ts = stable_part(m.nu)) {
            g.tag = RegimeTag::TemperedStable;
            g.alpha = ts->alpha;
            g.eta0 = ts->eta0;
            return g;
        }
    }
    g.tag = RegimeTag::InfiniteVariationOther;
    return g;
}

// ---------------------------------------------------------------- stable constants

struct StableConstants {
    double I_alpha = 0.0;         // Gamma formula
    double I_alpha_quad = 0.0;    // direct quadrature
    std::vector<double> a;
    std::vector<double> J_alpha;  // at each a
    double rate_constant = 0.0;   // (eta0 Gamma(2-alpha)/(alpha-1))^{1/alpha}
    std::string warning;
};

inline double stable_I_quadrature(double alpha)
{
    auto f = [alpha](double z) { return expm1_minus_id(-z) * std::pow(z, -1.0 - alpha); };
    const double head = quad::power_singular(f, 1.0, 1.0 - alpha, 1e-13);
    const double decay = quad::semi_infinite([alpha](double z) { return std::exp(-z) * std::pow(z, -1.0 - alpha); }, 1.0, 1e-13);
    // \int_1^inf (z-1) z^{-1-alpha} dz
    const double linear = 1.0 / (alpha - 1.0) - 1.0 / alpha;
    return head + decay + linear;
}

inline StableConstants stable_constants(double alpha, double eta0, const std::function<double(double)>& eta_sup,
                                        const std::vector<double>& a_values = {})
{
    if (!(alpha > 1.0 && alpha < 2.0))
        throw std::invalid_argument("stable constants need 1 < alpha < 2");
    if (!(eta0 > 0))
        throw std::invalid_argument("eta0 must be positive");
    StableConstants c;
    if (alpha - 1.0 < 1e-3 || 2.0 - alpha < 1e-3) {
        c.warning = "alpha within 1e-3 of an endpoint: constants blow up";
        std::cerr << "warning: " << c.warning << "\n";
    }
    const double g = std::tgamma(2.0 - alpha);
    c.I_alpha = g / (alpha * (alpha - 1.0));
    c.I_alpha_quad = stable_I_quadrature(alpha);
    c.rate_constant = std::pow(eta0 * g / (alpha - 1.0), 1.0 / alpha);
    for (double a : a_values) {
        const double es = eta_sup ? eta_sup(a) : eta0;
        c.a.push_back(a);
        c.J_alpha.push_back((alpha - 1.0) /
                            (std::pow(alpha, alpha / (alpha - 1.0)) * std::pow(es * c.I_alpha, 1.0 / (alpha - 1.0))));
    }
    return c;
}

// ---------------------------------------------------------------- predictions

enum class GapForm { StrikeMinusBoundary, StrikeOverBoundaryMinusOne };

struct RatePrediction {
    GapForm form = GapForm::StrikeMinusBoundary;
    double constant = 0.0;
    double exponent = 0.0;
    double log_exponent = 0.0;
    double gap(double theta) const
    {
        return constant * std::pow(theta, exponent) * std::pow(std::abs(std::log(theta)), log_exponent);
    }
};

inline RatePrediction rate_prediction(const Regime& g)
{
    const double K = g.strike;
    switch (g.tag) {
    case RegimeTag::DiffusionDominated:
        return {GapForm::StrikeMinusBoundary, g.sigma * K, 0.5, 0.5};
    case RegimeTag::FiniteVariation:
        return {GapForm::StrikeOverBoundaryMinusOne, g.neg_integral, 1.0, 0.0};
    case RegimeTag::TemperedStable: {
        const double c = std::pow(g.eta0 * std::tgamma(2.0 - g.alpha) / (g.alpha - 1.0), 1.0 / g.alpha);
        return {GapForm::StrikeMinusBoundary, K * c, 1.0 / g.alpha, 1.0 - 1.0 / g.alpha};
    }
    case RegimeTag::LimitBelowStrike:
        return {GapForm::StrikeMinusBoundary, K - g.limit_price, 0.0, 0.0};
    case RegimeTag::InfiniteVariationOther:
        break;
    }
    throw DomainError("no closed form; use divergence_check");
}

// Predicted K - b(theta) in currency.
inline double predicted_gap(const Regime& g, double theta, const MarketParams& mk)
{
    if (!(theta > 0 && theta <= 0.5 * mk.maturity))
        throw std::invalid_argument("theta must lie in (0, T/2]");
    const RatePrediction p = rate_prediction(g);
    if (p.form == GapForm::StrikeOverBoundaryMinusOne) {
        const double u = p.gap(theta);
        return g.strike * u / (1.0 + u);
    }
    return p.gap(theta);
}

// ---------------------------------------------------------------- fits

struct RateFit {
    double window_lo = 0.0, window_hi = 0.0;
    std::size_t n = 0;
    double exponent = 0.0;
    double exponent_ci = 0.0; // 95% half-width
    double constant = 0.0;
    double constant_ci_lo = 0.0, constant_ci_hi = 0.0;
    double r_squared = 0.0;
    std::vector<double> residuals;
};

// OLS of ln gap - q ln|ln theta| on ln theta.
inline RateFit fit_power_law(const std::vector<double>& theta, const std::vector<double>& gap, double log_exponent)
{
    if (theta.size() != gap.size())
        throw std::invalid_argument("theta and gap differ in length");
    if (theta.size() < 8)
        throw DataError("need at least 8 boundary points in the window");
    const std::size_t n = theta.size();
    std::vector<double> u(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(gap[i] > 0))
            throw DataError("nonpositive gap at theta=" + std::to_string(theta[i]));
        u[i] = std::log(theta[i]);
        y[i] = std::log(gap[i]) - log_exponent * std::log(std::abs(u[i]));
    }
    double mu = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mu += u[i];
        my += y[i];
    }
    mu /= double(n);
    my /= double(n);
    double suu = 0, suy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        suu += (u[i] - mu) * (u[i] - mu);
        suy += (u[i] - mu) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    RateFit f;
    f.window_lo = *std::min_element(theta.begin(), theta.end());
    f.window_hi = *std::max_element(theta.begin(), theta.end());
    f.n = n;
    f.exponent = suy / suu;
    const double icpt = my - f.exponent * mu;
    f.constant = std::exp(icpt);
    double sse = 0;
    f.residuals.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        f.residuals[i] = y[i] - (icpt + f.exponent * u[i]);
        sse += f.residuals[i] * f.residuals[i];
    }
    f.r_squared = syy > 0 ? std::clamp(1.0 - sse / syy, 0.0, 1.0) : 1.0;
    const double s2 = sse / double(n - 2);
    const double tq = boost::math::quantile(boost::math::complement(boost::math::students_t(double(n - 2)), 0.025));
    f.exponent_ci = tq * std::sqrt(s2 / suu);
    const double se_icpt = std::sqrt(s2 * (1.0 / double(n) + mu * mu / suu));
    f.constant_ci_lo = std::exp(icpt - tq * se_icpt);
    f.constant_ci_hi = std::exp(icpt + tq * se_icpt);
    return f;
}

inline double curve_gap(const BoundaryCurve& c, std::size_t i, GapForm form)
{
    return form == GapForm::StrikeMinusBoundary ? c.strike - c.b[i] : c.strike / c.b[i] - 1.0;
}

// Fit over theta in [lo, hi] in the regime's gap form.
inline RateFit fit_boundary_rate(const BoundaryCurve& c, const Regime& g, double lo, double hi)
{
    if (c.theta.empty() || lo < c.theta.front() || hi > c.theta.back() || !(lo < hi))
        throw DataError("fit window must lie inside the resolved theta range");
    const RatePrediction p = rate_prediction(g);
    std::vector<double> th, gap;
    for (std::size_t i = 0; i < c.theta.size(); ++i)
        if (c.theta[i] >= lo && c.theta[i] <= hi) {
            th.push_back(c.theta[i]);
            gap.push_back(curve_gap(c, i, p.form));
        }
    RateFit f = fit_power_law(th, gap, p.log_exponent);
    f.window_lo = lo;
    f.window_hi = hi;
    return f;
}

// ---------------------------------------------------------------- divergence

struct DivergenceReport {
    std::vector<double> theta; // decreasing
    std::vector<double> g;     // (K/b - 1)/theta
    bool increasing = false;   // g grows as theta decreases
    double growth = 0.0;       // g(smallest theta)/g(largest theta)
};

// Boundary at theta by linear interpolation in ln theta.
inline double boundary_at(const BoundaryCurve& c, double theta)
{
    if (theta < c.theta.front() || theta > c.theta.back())
        throw DataError("theta outside the boundary curve");
    auto it = std::lower_bound(c.theta.begin(), c.theta.end(), theta);
    std::size_t i = std::size_t(it - c.theta.begin());
    if (i == 0)
        return c.b.front();
    if (!(c.theta[i - 1] > 0))
        return c.b[i];
    const double f = (std::log(theta) - std::log(c.theta[i - 1])) / (std::log(c.theta[i]) - std::log(c.theta[i - 1]));
    return (1 - f) * c.b[i - 1] + f * c.b[i];
}

inline DivergenceReport divergence_check(const BoundaryCurve& c, std::vector<double> ladder)
{
    std::sort(ladder.begin(), ladder.end(), std::greater<>());
    DivergenceReport r;
    for (double th : ladder) {
        r.theta.push_back(th);
        r.g.push_back((c.strike / boundary_at(c, th) - 1.0) / th);
    }
    r.increasing = true;
    for (std::size_t i = 1; i < r.g.size(); ++i)
        r.increasing = r.increasing && r.g[i] > r.g[i - 1];
    r.growth = r.g.back() / r.g.front();
    return r;
}

} // namespace amlevy

#endif
