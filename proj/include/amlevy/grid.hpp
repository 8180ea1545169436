#ifndef AMLEVY_GRID_HPP
#define AMLEVY_GRID_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "levy_model.hpp"
#include "simulation.hpp"

namespace amlevy {

struct GridSpec {
    int n_x = 2000;           // nodes across [x_min, x_max]
    int n_t = 400;            // time steps (fine part plus geometric part)
    double theta_min = 1e-4;  // absolute; resolved by 20 uniform steps
    double epsilon = 1e-3;    // small-jump cutoff in log-price
    double half_width = 0.0;  // 0: eight standard deviations of X_T, clamped to [1.5, 12]
    double max_proxy_share = 0.5;
    double horizon = 0.0;     // largest time to maturity solved; 0 means the maturity
};

struct JumpWeight {
    int offset; // in cells
    double weight;
};

struct Grid {
    double x_min = 0.0;
    double dx = 0.0;
    int n = 0;
    int strike_index = 0;
    std::vector<double> theta; // theta[0] = 0
    double epsilon_jump = 0.0; // effective cutoff for densities, max(epsilon, dx); atoms use epsilon
    std::vector<JumpWeight> jumps;
    double intensity = 0.0; // sum of weights
    double sigma_eps = 0.0;
    double sigma_total = 0.0;
    double drift = 0.0; // makes e^x a discrete martingale

    double x(int j) const { return x_min + j * dx; }
};

inline double half_width_for(const LevyModel& m)
{
    const double sd = std::sqrt((m.sigma * m.sigma + second_moment(m.nu)) * m.market.maturity);
    return std::clamp(8.0 * sd, 1.5, 12.0);
}

// Time-to-maturity nodes: 20 uniform steps up to theta_min (the first two split in halves),
// then geometric steps to T.
inline std::vector<double> time_nodes(double theta_min, double T, int n_t)
{
    if (!(theta_min > 0) || !(theta_min < T))
        throw ConfigError("theta_min must lie in (0, T)");
    const int fine = 20;
    if (n_t < fine + 3)
        throw ConfigError("n_t too small");
    std::vector<double> th{0.0};
    const double d = theta_min / fine;
    for (int i = 1; i <= 4; ++i)
        th.push_back(0.5 * d * i);
    for (int i = 3; i <= fine; ++i)
        th.push_back(d * i);
    const int geo = n_t - fine - 2;
    const double q = std::pow(T / theta_min, 1.0 / geo);
    for (int i = 1; i < geo; ++i)
        th.push_back(theta_min * std::pow(q, i));
    th.push_back(T);
    return th;
}

// Round interior nodes to multiples of tau (one cell of drift), dropping repeats.
// Without diffusion the transport is then an exact shift.
inline std::vector<double> drift_aligned(const std::vector<double>& th, double tau)
{
    std::vector<double> out{0.0};
    long long prev = 0;
    for (std::size_t i = 1; i + 1 < th.size(); ++i) {
        const long long k = std::llround(th[i] / tau);
        if (k <= prev)
            continue;
        if (double(k) * tau >= th.back())
            break;
        out.push_back(double(k) * tau);
        prev = k;
    }
    out.push_back(th.back());
    return out;
}

namespace detail {

inline void add_weight(std::vector<double>& w, int lo_offset, int k, double v)
{
    if (k == 0 || v == 0.0)
        return;
    w[k - lo_offset] += v;
}

} // namespace detail

inline Grid build_grid(const LevyModel& m, const GridSpec& spec)
{
    if (spec.n_x < 200)
        throw ConfigError("n_x must be at least 200");
    if (spec.n_t < 100)
        throw ConfigError("n_t must be at least 100");
    if (!(spec.epsilon > 0))
        throw ConfigError("epsilon must be positive");
    const double K = m.market.strike, T = m.market.maturity;
    Grid g;
    const double W = spec.half_width > 0 ? spec.half_width : half_width_for(m);
    const int c = (spec.n_x - 1) / 2;
    g.dx = W / c;
    g.strike_index = c;
    g.x_min = std::log(K) - c * g.dx;
    g.n = spec.n_x;

    const double h = g.dx;
    const double eps = std::max(spec.epsilon, h);
    g.epsilon_jump = eps;

    // hat-function weights on node offsets
    auto [slo, shi] = effective_support(m.nu, 1e-10);
    const int klo = int(std::floor(slo / h)) - 1, khi = int(std::ceil(shi / h)) + 1;
    std::vector<double> w(std::size_t(khi - klo + 1), 0.0);
    double small_var = 0.0;
    for (const auto& comp : m.nu.components) {
        if (auto a = std::get_if<Atoms>(&comp)) {
            for (const auto& at : a->atoms) {
                if (at.location == 0.0)
                    continue;
                if (std::abs(at.location) < spec.epsilon) {
                    small_var += at.intensity * at.location * at.location;
                    continue;
                }
                double u = at.location / h;
                if (std::abs(u - std::round(u)) < 1e-9)
                    u = std::round(u);
                const int k0 = int(std::floor(u));
                const double f = u - k0;
                detail::add_weight(w, klo, k0, at.intensity * (1 - f));
                detail::add_weight(w, klo, k0 + 1, at.intensity * f);
            }
            continue;
        }
        small_var += integrate(comp, [](double y) { return y * y; }, -eps, eps, 2.0);
        auto cell = [&](double a, double b, int i) {
            // [a,b] inside [ih, (i+1)h]
            const double xl = i * h;
            const double right =
                integrate(comp, [&](double y) { return (y - xl) / h; }, a, b, 0.0);
            const double mass = integrate(comp, [](double) { return 1.0; }, a, b, 0.0);
            detail::add_weight(w, klo, i, mass - right);
            detail::add_weight(w, klo, i + 1, right);
        };
        for (int i = klo; i < khi; ++i) {
            double a = i * h, b = (i + 1) * h;
            a = std::max(a, slo);
            b = std::min(b, shi);
            if (b <= -eps || a >= eps) {
                if (b > a)
                    cell(a, b, i);
            } else {
                if (a < -eps)
                    cell(a, -eps, i);
                if (b > eps)
                    cell(eps, b, i);
            }
        }
    }
    for (int k = klo; k <= khi; ++k)
        if (w[k - klo] > 0)
            g.jumps.push_back({k, w[k - klo]});

    const double qv = m.sigma * m.sigma + second_moment(m.nu);
    if (small_var > spec.max_proxy_share * qv)
        throw ConfigError("epsilon too large: small-jump proxy exceeds its share of the quadratic variation");
    g.sigma_eps = std::sqrt(small_var);
    g.sigma_total = std::sqrt(m.sigma * m.sigma + small_var);
    double comp = 0.0, lam = 0.0;
    for (const auto& jw : g.jumps) {
        comp += jw.weight * std::expm1(jw.offset * h);
        lam += jw.weight;
    }
    g.intensity = lam;
    g.drift = m.market.r - m.market.delta - 0.5 * g.sigma_total * g.sigma_total - comp;
    const double top = spec.horizon > 0 ? std::min(spec.horizon, T) : T;
    g.theta = time_nodes(spec.theta_min, top, spec.n_t);
    if (g.sigma_total == 0.0 && g.drift != 0.0)
        g.theta = drift_aligned(g.theta, h / std::abs(g.drift));
    return g;
}

// r - delta minus the discrete generator applied to e^x at x = 0.
inline double discrete_martingale_defect(const Grid& g, const MarketParams& mk)
{
    double comp = 0.0;
    for (const auto& jw : g.jumps)
        comp += jw.weight * std::expm1(jw.offset * g.dx);
    return mk.r - mk.delta - (0.5 * g.sigma_total * g.sigma_total + g.drift + comp);
}

} // namespace amlevy

#endif
