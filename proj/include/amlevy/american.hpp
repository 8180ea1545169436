#ifndef AMLEVY_AMERICAN_HPP
#define AMLEVY_AMERICAN_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <iostream>
#include <limits>
#include <memory>
#include <vector>

#include <fftw3.h>

#include "european.hpp"
#include "grid.hpp"
#include "lcp.hpp"
#include "report.hpp"
#include "simulation.hpp"

namespace amlevy {

struct SolveOptions {
    bool european = true;
    bool premium = true;
    double store_below = 2.0; // stored window in log-price around ln K
    double store_above = 1.0;
    double lcp_tol = 1e-9;    // relative to K
    int lcp_max_iter = 10000;
    double omega = 1.2;
};

struct PriceSurface {
    double strike = 0.0, r = 0.0, delta = 0.0, maturity = 0.0;
    double dx = 0.0;
    std::vector<double> theta;
    std::vector<double> x; // stored nodes
    std::vector<double> payoff;
    std::vector<std::vector<double>> american, european, premium;
    std::vector<std::vector<double>> kernel;  // rK - delta e^x - positive-jump term, no indicator
    std::vector<double> boundary_x;           // full-grid log boundary per slice, NaN if absent
    std::vector<double> residual;             // complementarity residual per slice
    std::vector<int> sweeps;                  // projected SOR sweeps per slice
    bool has_european() const { return !european.empty(); }
    bool has_premium() const { return !premium.empty(); }
};

struct BoundaryCurve {
    std::vector<double> theta;
    std::vector<double> b;
    std::vector<double> b_e;
    std::vector<double> zeta; // K/b_e - 1
    double strike = 0.0;
    double dx = 0.0;
};

namespace detail {

struct FftwDeleter {
    void operator()(double* p) const { fftw_free(p); }
    void operator()(fftw_complex* p) const { fftw_free(p); }
};

// exp(dt (W - Lambda)) combined with an integer shift, applied by FFT on a padded line.
class JumpPropagator {
public:
    JumpPropagator(const Grid& g, int left_pad, int right_pad) : g_(g), left_(left_pad)
    {
        std::size_t need = std::size_t(g.n + left_pad + right_pad);
        M_ = 1;
        while (M_ < need)
            M_ <<= 1;
        in_.reset(fftw_alloc_real(M_));
        out_.reset(fftw_alloc_complex(M_ / 2 + 1));
        fwd_ = fftw_plan_dft_r2c_1d(int(M_), in_.get(), out_.get(), FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_c2r_1d(int(M_), out_.get(), in_.get(), FFTW_ESTIMATE);
        const std::size_t H = M_ / 2 + 1;
        w_hat_ = spectrum([](int) { return true; });
        wpos_hat_ = spectrum([](int k) { return k > 0; });
        mult_.assign(H, cplx(1.0, 0.0));
    }
    ~JumpPropagator()
    {
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
    }
    JumpPropagator(const JumpPropagator&) = delete;
    JumpPropagator& operator=(const JumpPropagator&) = delete;

    std::size_t size() const { return M_; }

    void set_step(double dt, int shift)
    {
        const double lam = g_.intensity;
        for (std::size_t k = 0; k < mult_.size(); ++k) {
            const double ang = 2.0 * kPi * double(k) * double(shift) / double(M_);
            const cplx e = std::exp(cplx(0.0, -ang) + dt * (w_hat_[k] - lam));
            mult_[k] = std::conj(e) / double(M_);
        }
    }

    // out[j] = E f(x_j + shift h + jumps); ext gives values left of the grid, zero on the right.
    std::vector<double> apply(const std::vector<double>& f, const std::function<double(double)>& ext)
    {
        return run(f, ext, mult_);
    }

    // sum_{k>0} w_k f(x_j + k h)
    std::vector<double> positive_sum(const std::vector<double>& f, const std::function<double(double)>& ext)
    {
        if (pos_mult_.empty()) {
            pos_mult_.resize(wpos_hat_.size());
            for (std::size_t k = 0; k < wpos_hat_.size(); ++k)
                pos_mult_[k] = std::conj(wpos_hat_[k]) / double(M_);
        }
        return run(f, ext, pos_mult_);
    }

private:
    template <class Pred>
    std::vector<cplx> spectrum(Pred keep)
    {
        std::fill(in_.get(), in_.get() + M_, 0.0);
        for (const auto& jw : g_.jumps)
            if (keep(jw.offset)) {
                const long idx = ((long(jw.offset) % long(M_)) + long(M_)) % long(M_);
                in_.get()[std::size_t(idx)] += jw.weight;
            }
        fftw_execute(fwd_);
        std::vector<cplx> s(M_ / 2 + 1);
        for (std::size_t k = 0; k < s.size(); ++k)
            s[k] = cplx(out_.get()[k][0], out_.get()[k][1]);
        return s;
    }

    std::vector<double> run(const std::vector<double>& f, const std::function<double(double)>& ext,
                            const std::vector<cplx>& mult)
    {
        double* in = in_.get();
        for (int a = 0; a < left_; ++a)
            in[a] = ext(g_.x_min + (a - left_) * g_.dx);
        std::copy(f.begin(), f.end(), in + left_);
        std::fill(in + left_ + g_.n, in + M_, 0.0);
        fftw_execute(fwd_);
        for (std::size_t k = 0; k < mult.size(); ++k) {
            const cplx v = cplx(out_.get()[k][0], out_.get()[k][1]) * mult[k];
            out_.get()[k][0] = v.real();
            out_.get()[k][1] = v.imag();
        }
        fftw_execute(bwd_);
        return std::vector<double>(in + left_, in + left_ + g_.n);
    }

    const Grid& g_;
    int left_;
    std::size_t M_ = 0;
    std::unique_ptr<double, FftwDeleter> in_;
    std::unique_ptr<fftw_complex, FftwDeleter> out_;
    fftw_plan fwd_ = nullptr, bwd_ = nullptr;
    std::vector<cplx> w_hat_, wpos_hat_, mult_, pos_mult_;
};

// Offsets (in cells) that the jump part reaches over dt except with probability ~1e-18:
// the tighter of a Poisson count bound and a Bernstein bound on the compensated sum.
inline std::pair<double, double> jump_reach(double dt, double lam, double m1, double m2, int kmin, int kmax)
{
    const double mu = lam * dt;
    const double b = std::max(-kmin, kmax);
    const double u = 18 * std::log(10.0);
    const double v = dt * m2;
    const double t = (2 * u * b / 3 + std::sqrt(4 * u * u * b * b / 9 + 8 * u * v)) / 2;
    const double mean = dt * m1;
    double n = 0, pmf = std::exp(-mu), tail = 1.0 - pmf;
    if (pmf > 0) {
        while (tail > 1e-18 && n * b < 2 * t) {
            n += 1;
            pmf *= mu / n;
            tail -= pmf;
        }
    } else {
        n = kInf;
    }
    const double lo = std::max(n * kmin, mean - t), hi = std::min(n * kmax, mean + t);
    return {std::min(lo, double(kmin)), std::max(hi, double(kmax))};
}

// Pure shift without jumps.
inline std::vector<double> shift_values(const Grid& g, const std::vector<double>& f, int shift,
                                        const std::function<double(double)>& ext)
{
    if (shift == 0)
        return f;
    std::vector<double> out(f.size());
    for (int j = 0; j < g.n; ++j) {
        const int s = j + shift;
        out[j] = s < 0 ? ext(g.x(s)) : (s >= g.n ? 0.0 : f[s]);
    }
    return out;
}

// (1 + c) v - dt (a v'' + m v'), upwinded where the cell Peclet number exceeds one.
// c and m are fitted so that constants and e^x come out exactly as
// e^{-r dt} and e^{(a + mu - r) dt} times themselves.
inline Tridiagonal local_matrix(int n, double dx, double dt, double a, double mu, double r)
{
    Tridiagonal A(n);
    const double c = std::expm1(r * dt);
    const double target = std::exp(r * dt) * -std::expm1(-(a + mu) * dt) / dt;
    const double sh = 2.0 * std::sinh(0.5 * dx) / dx;
    const double l2 = sh * sh; // D2 applied to e^x, over e^x
    const double d2 = a / (dx * dx);
    double m = (target - a * l2) / (std::sinh(dx) / dx);
    double lo, up;
    if (std::abs(m) * dx <= 2.0 * a) {
        lo = d2 - m / (2 * dx);
        up = d2 + m / (2 * dx);
    } else if (m > 0) {
        m = (target - a * l2) / (std::expm1(dx) / dx);
        lo = d2;
        up = d2 + m / dx;
    } else {
        m = (target - a * l2) / (-std::expm1(-dx) / dx);
        lo = d2 - m / dx;
        up = d2;
    }
    for (int j = 1; j + 1 < n; ++j) {
        A.lower[j] = -dt * lo;
        A.upper[j] = -dt * up;
        A.diag[j] = 1.0 + c + dt * (lo + up);
    }
    A.diag[0] = A.diag[n - 1] = 1.0;
    return A;
}

} // namespace detail

// contact threshold relative to K; the premium one cell above b is O(theta dx)
inline constexpr double kBoundaryTol = 1e-11;

// Log-price of the exercise boundary on one slice: the largest node below ln K with
// P - psi <= tol_abs, refined by linear interpolation of P - psi toward the next node.
inline double boundary_log_price(const std::vector<double>& x, const std::vector<double>& P,
                                 const std::vector<double>& psi, double tol_abs, double log_strike)
{
    long jb = -1;
    for (std::size_t j = 0; j < x.size() && x[j] < log_strike; ++j)
        if (P[j] - psi[j] <= tol_abs)
            jb = long(j);
    if (jb < 0 || std::size_t(jb + 1) >= x.size())
        return std::numeric_limits<double>::quiet_NaN();
    const double d0 = P[jb] - psi[jb], d1 = P[jb + 1] - psi[jb + 1];
    double f = d1 > d0 ? (tol_abs - d0) / (d1 - d0) : 0.0;
    f = std::clamp(f, 0.0, 1.0);
    return x[jb] + f * (x[jb + 1] - x[jb]);
}

inline PriceSurface solve_variational_inequality(const LevyModel& m, const Grid& g, const SolveOptions& opt = {})
{
    const double K = m.market.strike, r = m.market.r, q = m.market.delta;
    const double lnK = std::log(K);
    const int n = g.n;
    std::vector<double> x(n), psi(n);
    for (int j = 0; j < n; ++j) {
        x[j] = g.x(j);
        psi[j] = std::max(K - std::exp(x[j]), 0.0);
    }
    const bool jumps = !g.jumps.empty();

    // shifts and padding
    const std::size_t steps = g.theta.size() - 1;
    std::vector<int> shift(steps);
    int kmin = 0, kmax = 0;
    double m1 = 0.0, m2 = 0.0, wpos_exp = 0.0, lam_pos = 0.0;
    for (const auto& jw : g.jumps) {
        kmin = std::min(kmin, jw.offset);
        kmax = std::max(kmax, jw.offset);
        m1 += jw.weight * jw.offset;
        m2 += jw.weight * double(jw.offset) * jw.offset;
        if (jw.offset > 0) {
            wpos_exp += jw.weight * std::exp(jw.offset * g.dx);
            lam_pos += jw.weight;
        }
    }
    int left_pad = 16, right_pad = 16;
    for (std::size_t i = 0; i < steps; ++i) {
        const double dt = g.theta[i + 1] - g.theta[i];
        shift[i] = int(std::lround(g.drift * dt / g.dx));
        const auto [lo, hi] = detail::jump_reach(dt, g.intensity, m1, m2, kmin, kmax);
        left_pad = std::max(left_pad, int(std::ceil(-(lo + shift[i]))) + 16);
        right_pad = std::max(right_pad, int(std::ceil(hi + shift[i])) + 16);
    }
    std::unique_ptr<detail::JumpPropagator> prop;
    if (jumps)
        prop = std::make_unique<detail::JumpPropagator>(g, left_pad, right_pad);

    // stored window
    int jlo = 0, jhi = n - 1;
    while (jlo < n - 1 && x[jlo] < lnK - opt.store_below)
        ++jlo;
    while (jhi > 0 && x[jhi] > lnK + opt.store_above)
        --jhi;
    PriceSurface s;
    s.strike = K;
    s.r = r;
    s.delta = q;
    s.maturity = m.market.maturity;
    s.dx = g.dx;
    s.theta = g.theta;
    s.x.assign(x.begin() + jlo, x.begin() + jhi + 1);
    s.payoff.assign(psi.begin() + jlo, psi.begin() + jhi + 1);
    auto keep = [&](const std::vector<double>& v) { return std::vector<double>(v.begin() + jlo, v.begin() + jhi + 1); };

    const bool want_e = opt.european || opt.premium;
    std::vector<double> P = psi, Pe = psi, E(n, 0.0);
    s.american.push_back(keep(P));
    if (want_e)
        s.european.push_back(keep(Pe));
    if (opt.premium) {
        s.premium.push_back(keep(E));
        std::vector<double> k0(jhi - jlo + 1);
        for (int j = jlo; j <= jhi; ++j)
            k0[j - jlo] = r * K - q * std::exp(x[j]);
        s.kernel.push_back(k0);
    }
    s.boundary_x.push_back(lnK);
    s.residual.push_back(0.0);
    s.sweeps.push_back(0);

    LcpOptions lo;
    lo.omega = opt.omega;
    lo.tol = opt.lcp_tol * K;
    lo.max_iter = opt.lcp_max_iter;
    const double a = 0.5 * g.sigma_total * g.sigma_total;

    for (std::size_t i = 0; i < steps; ++i) {
        const double th0 = g.theta[i], th1 = g.theta[i + 1], dt = th1 - th0;
        const int ns = shift[i];
        const double mu_res = g.drift - ns * g.dx / dt;
        auto ext_am = [K](double y) { return K - std::exp(y); };
        auto ext_eu = [K, r, q, th0](double y) { return K * std::exp(-r * th0) - std::exp(y - q * th0); };
        auto ext_pr = [&](double y) { return ext_am(y) - ext_eu(y); };
        auto propagate = [&](const std::vector<double>& f, const std::function<double(double)>& ext) {
            return jumps ? prop->apply(f, ext) : detail::shift_values(g, f, ns, ext);
        };
        if (jumps)
            prop->set_step(dt, ns);
        const Tridiagonal A = detail::local_matrix(n, g.dx, dt, a, mu_res, r);

        LcpStats st;
        const auto rhs = propagate(P, ext_am);
        P = solve_lcp(A, rhs, psi, psi[0], 0.0, lo, &st);
        const double xb = boundary_log_price(x, P, psi, std::max(kBoundaryTol * K, st.residual), lnK);

        if (want_e) {
            const auto rhs_e = propagate(Pe, ext_eu);
            Pe = solve_tridiagonal(A, rhs_e, K * std::exp(-r * th1) - std::exp(x[0] - q * th1), 0.0);
        }
        if (opt.premium) {
            std::vector<double> kern(n);
            std::vector<double> jpos;
            if (jumps && lam_pos > 0)
                jpos = prop->positive_sum(P, ext_am);
            for (int j = 0; j < n; ++j) {
                const double ex = std::exp(x[j]);
                double jp = 0.0;
                if (!jpos.empty())
                    jp = jpos[j] - K * lam_pos + ex * wpos_exp;
                kern[j] = r * K - q * ex - jp;
            }
            auto rhs_p = propagate(E, ext_pr);
            for (int j = 0; j < n; ++j)
                if (x[j] < xb)
                    rhs_p[j] += dt * kern[j];
            const double left = K * (1 - std::exp(-r * th1)) - std::exp(x[0]) * (1 - std::exp(-q * th1));
            E = solve_tridiagonal(A, rhs_p, left, 0.0);
            s.premium.push_back(keep(E));
            s.kernel.push_back(keep(kern));
        }
        s.american.push_back(keep(P));
        if (want_e)
            s.european.push_back(keep(Pe));
        s.boundary_x.push_back(xb);
        s.residual.push_back(st.residual);
        s.sweeps.push_back(st.sweeps);
    }
    return s;
}

inline double surface_value(const PriceSurface& s, const std::vector<double>& slice, double x)
{
    const double x0 = s.x.front();
    const double u = (x - x0) / s.dx;
    if (u <= 0)
        return slice.front();
    const std::size_t j = std::size_t(u);
    if (j + 1 >= slice.size())
        return slice.back();
    const double f = u - double(j);
    return (1 - f) * slice[j] + f * slice[j + 1];
}

inline double american_price(const PriceSurface& s, std::size_t slice, double spot)
{
    return surface_value(s, s.american.at(slice), std::log(spot));
}

// Boundary from the stored window of each slice; b_e left empty.
inline BoundaryCurve extract_boundary(const PriceSurface& s, double tol = kBoundaryTol)
{
    BoundaryCurve c;
    c.strike = s.strike;
    c.dx = s.dx;
    const double lnK = std::log(s.strike);
    for (std::size_t i = 1; i < s.theta.size(); ++i) {
        const double xb = boundary_log_price(s.x, s.american[i], s.payoff, std::max(tol * s.strike, s.residual[i]), lnK);
        if (std::isnan(xb))
            std::cerr << "warning: no exercise region on slice theta=" << s.theta[i] << "\n";
        c.theta.push_back(s.theta[i]);
        c.b.push_back(std::exp(xb));
    }
    return c;
}

// Fills b_e and zeta from the Fourier European price.
inline void attach_european_boundary(BoundaryCurve& c, const LevyModel& m)
{
    const double K = m.market.strike;
    c.b_e.resize(c.theta.size());
    c.zeta.resize(c.theta.size());
    for (std::size_t i = 0; i < c.theta.size(); ++i) {
        c.b_e[i] = european_boundary(m, c.theta[i], 1e-11, i ? c.b_e[i - 1] : 0.0);
        c.zeta[i] = K / c.b_e[i] - 1.0;
    }
}

// One-sided derivative of P - psi in spot at b+, read as the forward difference
// between the first two nodes off the contact set; the cell that touches the
// contact set carries the O(dx) smearing of the kink.
inline double slope_jump_at_boundary(const PriceSurface& s, std::size_t slice, double tol = kBoundaryTol)
{
    const auto& P = s.american.at(slice);
    const double lnK = std::log(s.strike);
    const double tol_abs = std::max(tol * s.strike, s.residual.at(slice));
    const double xb = boundary_log_price(s.x, P, s.payoff, tol_abs, lnK);
    if (std::isnan(xb))
        return xb;
    std::size_t j = std::size_t(std::floor((xb - s.x.front()) / s.dx));
    while (j < s.x.size() && P[j] - s.payoff[j] <= tol_abs)
        ++j;
    if (j + 1 >= s.x.size())
        return std::numeric_limits<double>::quiet_NaN();
    const double d0 = P[j] - s.payoff[j], d1 = P[j + 1] - s.payoff[j + 1];
    return (d1 - d0) / (std::exp(s.x[j + 1]) - std::exp(s.x[j]));
}

// ---------------------------------------------------------------- checks

inline std::vector<Assertion> surface_invariants(const PriceSurface& s, const BoundaryCurve& c)
{
    const double K = s.strike;
    std::vector<Assertion> out;
    double obstacle = kInf, above_e = kInf, incr_x = -kInf, convex = kInf, incr_t = kInf;
    for (std::size_t i = 0; i < s.theta.size(); ++i) {
        const auto& P = s.american[i];
        for (std::size_t j = 0; j < P.size(); ++j) {
            obstacle = std::min(obstacle, P[j] - s.payoff[j]);
            if (s.has_european())
                above_e = std::min(above_e, P[j] - s.european[i][j]);
            if (j + 1 < P.size())
                incr_x = std::max(incr_x, P[j + 1] - P[j]);
            if (j + 2 < P.size()) {
                const double S0 = std::exp(s.x[j]), S1 = std::exp(s.x[j + 1]), S2 = std::exp(s.x[j + 2]);
                const double s01 = (P[j + 1] - P[j]) / (S1 - S0), s12 = (P[j + 2] - P[j + 1]) / (S2 - S1);
                convex = std::min(convex, (s12 - s01) * 0.5 * (S2 - S0));
            }
            if (i + 1 < s.theta.size())
                incr_t = std::min(incr_t, s.american[i + 1][j] - P[j]);
        }
    }
    out.push_back(at_least("american >= payoff", obstacle, 0.0, 1e-12 * K));
    if (s.has_european())
        out.push_back(at_least("american >= european", above_e, 0.0, 1e-9 * K));
    out.push_back(at_most("american nonincreasing in spot", incr_x, 0.0, 1e-9 * K));
    out.push_back(at_least("american convex in spot", convex, 0.0, 1e-9 * K));
    out.push_back(at_least("american nondecreasing in theta", incr_t, 0.0, 1e-8 * K));

    const double cell = std::exp(c.dx);
    double bmin = kInf, excess_be = 0.0, be_over_k = 0.0, rise = 0.0;
    for (std::size_t i = 0; i < c.b.size(); ++i) {
        bmin = std::min(bmin, std::isnan(c.b[i]) ? -kInf : c.b[i]);
        if (!c.b_e.empty()) {
            excess_be = std::max(excess_be, c.b[i] / c.b_e[i]);
            be_over_k = std::max(be_over_k, c.b_e[i] / K);
        }
        if (i + 1 < c.b.size())
            rise = std::max(rise, c.b[i + 1] / c.b[i]);
    }
    out.push_back(at_least("boundary positive", bmin, 0.0, 0.0));
    if (!c.b_e.empty()) {
        out.push_back(at_most("b <= b_e (one cell)", excess_be, cell));
        out.push_back(at_most("b_e <= K", be_over_k, 1.0, 1e-12));
    }
    out.push_back(at_most("b nonincreasing in theta (one cell)", rise, cell));
    double res = 0.0;
    for (double v : s.residual)
        res = std::max(res, v);
    out.push_back(at_most("complementarity residual", res, 1e-8 * K));
    return out;
}

// 0 <= P - P_e <= rK theta at every node, and P - P_e nonincreasing in spot.
// The upper bound and the monotonicity carry the discretization slack 1e-7 K.
inline std::vector<Assertion> eep_bound_check(const PriceSurface& s)
{
    if (!s.has_european())
        throw std::invalid_argument("eep_bound_check needs the European companion");
    const double K = s.strike;
    double low = kInf, high = -kInf, incr = -kInf;
    for (std::size_t i = 0; i < s.theta.size(); ++i) {
        const double cap = s.r * K * s.theta[i];
        for (std::size_t j = 0; j < s.x.size(); ++j) {
            const double d = s.american[i][j] - s.european[i][j];
            low = std::min(low, d);
            high = std::max(high, d - cap);
            if (j + 1 < s.x.size())
                incr = std::max(incr, (s.american[i][j + 1] - s.european[i][j + 1]) - d);
        }
    }
    return {at_least("P - P_e >= 0", low, 0.0, 1e-9 * K),
            at_most("P - P_e <= rK theta", high, 0.0, 1e-7 * K),
            at_most("P - P_e nonincreasing in spot", incr, 0.0, 1e-7 * K)};
}

// ---------------------------------------------------------------- premium by simulation

struct EepOptions {
    std::size_t n_paths = 20000;
    int n_steps = 200;
    double target_jumps = 10.0; // resolved jumps per time step
    std::uint64_t seed = 1;
    unsigned threads = 1;
};

struct EepEstimate {
    double value = 0.0;
    double stderr_ = 0.0;
};

// E int_0^theta k(theta - s, S_s) e^{-rs} ds with S_0 = spot, k read from the surface.
inline EepEstimate eep_premium(const LevyModel& m, const PriceSurface& s, double theta, double spot,
                               const EepOptions& opt = {})
{
    if (classify(m) == ModelClass::TypeA)
        throw DomainError("early exercise premium identity needs a model of type B or C");
    if (!s.has_premium())
        throw std::invalid_argument("eep_premium needs a surface solved with the premium kernel");
    if (!(theta > 0) || theta > s.theta.back() * (1 + 1e-12))
        throw std::invalid_argument("eep_premium: theta outside the solved range");
    for (std::size_t i = 1; i < s.theta.size() && s.theta[i - 1] < theta; ++i)
        if (std::isnan(s.boundary_x[i]))
            throw NumericalFailure("eep_premium: boundary missing on a slice");

    const double r = m.market.r, q = m.market.delta, K = m.market.strike;
    const double ds = theta / opt.n_steps;
    SimOptions so;
    so.target_jumps = opt.target_jumps;
    const IncrementSampler sampler = make_sampler(m, ds, so);
    const double x_lo = s.x.front();

    // slice bracket and weight for time-to-maturity u
    auto locate = [&](double u, std::size_t& i, double& f) {
        auto it = std::upper_bound(s.theta.begin(), s.theta.end(), u);
        i = std::size_t(std::max<long>(1, long(it - s.theta.begin()))) - 1;
        if (i + 1 >= s.theta.size())
            i = s.theta.size() - 2;
        f = (u - s.theta[i]) / (s.theta[i + 1] - s.theta[i]);
        f = std::clamp(f, 0.0, 1.0);
    };
    auto boundary_at = [&](std::size_t i, double f) {
        const double b0 = i == 0 ? s.boundary_x[1] : s.boundary_x[i];
        return (1 - f) * b0 + f * s.boundary_x[i + 1];
    };
    // per-step precomputation of the time interpolation
    std::vector<std::size_t> idx(opt.n_steps);
    std::vector<double> wt(opt.n_steps), xb(opt.n_steps), disc(opt.n_steps);
    for (int k = 0; k < opt.n_steps; ++k) {
        const double sk = (k + 0.5) * ds;
        locate(theta - sk, idx[k], wt[k]);
        xb[k] = boundary_at(idx[k], wt[k]);
        disc[k] = std::exp(-r * sk) * ds;
    }
    auto kernel = [&](int k, double x) {
        if (x < x_lo)
            return r * K - q * std::exp(x);
        const std::size_t i = idx[k];
        return (1 - wt[k]) * surface_value(s, s.kernel[i], x) + wt[k] * surface_value(s, s.kernel[i + 1], x);
    };

    std::vector<double> v(opt.n_paths);
    for_each_chunk(opt.n_paths, opt.seed, opt.threads, [&](std::size_t, std::size_t b, std::size_t e, auto& rng) {
        for (std::size_t p = b; p < e; ++p) {
            double x = std::log(spot), acc = 0.0;
            for (int k = 0; k < opt.n_steps; ++k) {
                const double dt = k == 0 ? 0.5 * ds : ds;
                x += (r - q) * dt + sampler.draw(dt, rng);
                if (x < xb[k])
                    acc += kernel(k, x) * disc[k];
            }
            v[p] = acc;
        }
    });
    const auto st = sample_stats(v);
    return {st.mean, st.stderr_};
}

} // namespace amlevy

#endif
