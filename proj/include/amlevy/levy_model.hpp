#ifndef AMLEVY_LEVY_MODEL_HPP
#define AMLEVY_LEVY_MODEL_HPP

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

#include "jump_measure.hpp"
#include "quadrature.hpp"

namespace amlevy {

struct MarketParams {
    double r = 0.05;
    double delta = 0.0;
    double strike = 100.0;
    double maturity = 1.0;
    double spot = 100.0;
};

struct LevyModel {
    double sigma = 0.0;
    double gamma = 0.0; // solved from the martingale condition
    JumpMeasure nu;
    MarketParams market;
};

enum class ModelClass { TypeA, TypeB, TypeC };

inline const char* to_string(ModelClass c)
{
    switch (c) {
    case ModelClass::TypeA: return "TypeA";
    case ModelClass::TypeB: return "TypeB";
    case ModelClass::TypeC: return "TypeC";
    }
    return "?";
}

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

struct ExpMoments {
    double pos; // \int (e^y-1)_+ nu(dy)
    double neg; // \int (e^y-1)_- nu(dy), infinite for infinite-variation negative jumps
};

// e^y - 1 - y without cancellation.
inline double expm1_minus_id(double y)
{
    if (std::abs(y) < 1e-2)
        return y * y * (0.5 + y * (1.0 / 6 + y * (1.0 / 24 + y * (1.0 / 120 + y / 720.0))));
    return std::expm1(y) - y;
}

// \int (e^y - 1 - y 1_{|y|<=1}) nu(dy)
inline double martingale_integral(const JumpMeasure& nu, double tol = kQuadTol)
{
    return integrate(
        nu, [](double y) { return std::abs(y) <= 1.0 ? expm1_minus_id(y) : std::expm1(y); }, -kInf,
        kInf, 2.0, tol);
}

inline double second_moment(const JumpMeasure& nu)
{
    return integrate(nu, [](double y) { return y * y; }, -kInf, kInf, 2.0);
}

struct ModelOptions {
    bool require_positive_rate = true;
};

inline LevyModel make_model(double sigma, JumpMeasure nu, const MarketParams& market,
                            ModelOptions opt = {})
{
    if (!(sigma >= 0) || !std::isfinite(sigma))
        throw std::invalid_argument("sigma must be finite and nonnegative");
    if (opt.require_positive_rate ? !(market.r > 0) : !(market.r >= 0))
        throw std::invalid_argument("interest rate r must be positive");
    if (!(market.delta >= 0))
        throw std::invalid_argument("dividend rate must be nonnegative");
    if (!(market.strike > 0) || !(market.maturity > 0) || !(market.spot > 0))
        throw std::invalid_argument("strike, maturity and spot must be positive");
    for (const auto& c : nu.components)
        validate(c);
    if (moment_strip(nu).second <= 1.0)
        throw std::invalid_argument("jump measure has no finite exponential moment: "
                                    "\\int_{|x|>=1} e^x nu(dx) diverges");
    const bool neg_mass = integrate(nu, [](double) { return 1.0; }, -kInf, 0.0, 0.0) > 0;
    const bool pos_inf_var = !std::isfinite(
        integrate(nu, [](double y) { return std::min(y, 1.0); }, 0.0, kInf, 1.0));
    if (sigma == 0.0 && !neg_mass && !pos_inf_var)
        throw std::invalid_argument("degenerate model: need sigma > 0, negative jumps, or "
                                    "infinite variation of the positive jumps");

    LevyModel m;
    m.sigma = sigma;
    m.nu = std::move(nu);
    m.market = market;
    m.gamma = -0.5 * sigma * sigma - martingale_integral(m.nu);
    if (!std::isfinite(m.gamma))
        throw std::invalid_argument("martingale integral is not finite");
    return m;
}

// sigma^2/2 + gamma + \int(e^x-1-x1)nu, recomputed at a tighter tolerance.
inline double martingale_residual(const LevyModel& m)
{
    return 0.5 * m.sigma * m.sigma + m.gamma + martingale_integral(m.nu, 1e-13);
}

inline ModelClass classify(const LevyModel& m)
{
    if (m.sigma == 0.0 && std::isfinite(total_mass(m.nu)))
        return ModelClass::TypeA;
    if (m.sigma == 0.0 && finite_variation(m.nu))
        return ModelClass::TypeB;
    return ModelClass::TypeC;
}

// phi with E e^{izX_t} = e^{t phi(z)}.
inline cplx characteristic_exponent(const LevyModel& m, cplx z)
{
    const double p = -z.imag();
    auto [lo, hi] = moment_strip(m.nu);
    if (!(p > lo && p < hi))
        throw DomainError("characteristic exponent evaluated outside the moment strip");
    const cplx I(0.0, 1.0);
    return -0.5 * m.sigma * m.sigma * z * z + I * m.gamma * z + exponent(m.nu, z);
}

inline ExpMoments exp_moment_integrals(const LevyModel& m)
{
    const double pos = integrate(m.nu, [](double y) { return std::expm1(y); }, 0.0, kInf, 1.0);
    const double neg = integrate(m.nu, [](double y) { return -std::expm1(y); }, -kInf, 0.0, 1.0);
    return {pos, neg};
}

inline double d_plus(const LevyModel& m)
{
    return m.market.r - m.market.delta - exp_moment_integrals(m).pos;
}

// gamma - \int_{|x|<=1} x nu(dx); finite-variation models only.
inline double gamma0(const LevyModel& m)
{
    if (!finite_variation(m.nu))
        throw DomainError("gamma0 needs a finite-variation jump measure");
    return m.gamma - integrate(m.nu, [](double y) { return y; }, -1.0, 1.0, 1.0);
}

inline double phi0(const LevyModel& m, double x)
{
    const double K = m.market.strike;
    if (!(x > 0))
        return 0.0;
    const double cut = std::log(K / x);
    const double jumps = integrate(
        m.nu, [&](double y) { return std::max(x * std::exp(y) - K, 0.0); }, cut, kInf, 0.0);
    return m.market.delta * x + jumps;
}

inline double limit_critical_price(const LevyModel& m)
{
    const double K = m.market.strike;
    if (d_plus(m) >= 0.0)
        return K;
    const double target = m.market.r * K;
    return find_root([&](double x) { return phi0(m, x) - target; }, 1e-12 * K, K, 1e-12);
}

} // namespace amlevy

#endif
