#ifndef AMLEVY_SIMULATION_HPP
#define AMLEVY_SIMULATION_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "levy_model.hpp"
#include "quadrature.hpp"

namespace amlevy {

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------- streams

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Independent generator for substream `index` of `seed`.
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t index)
{
    const std::uint64_t a = splitmix64(seed);
    const std::uint64_t b = splitmix64(a ^ splitmix64(index + 0x632BE59BD9B4E019ull));
    std::seed_seq seq{std::uint32_t(a), std::uint32_t(a >> 32), std::uint32_t(b),
                      std::uint32_t(b >> 32), std::uint32_t(index), std::uint32_t(index >> 32)};
    return std::mt19937_64(seq);
}

inline constexpr std::size_t kChunk = 4096;

// Runs body(chunk_index, begin, end, rng) over fixed-size chunks of [0, n).
// Chunk c always draws from substream c, so results do not depend on `threads`.
template <class Body>
void for_each_chunk(std::size_t n, std::uint64_t seed, unsigned threads, Body&& body)
{
    const std::size_t chunks = (n + kChunk - 1) / kChunk;
    auto run = [&](std::size_t c) {
        auto rng = substream(seed, c);
        body(c, c * kChunk, std::min(n, (c + 1) * kChunk), rng);
    };
    threads = std::max(1u, std::min<unsigned>(threads, unsigned(std::max<std::size_t>(chunks, 1))));
    if (threads == 1) {
        for (std::size_t c = 0; c < chunks; ++c)
            run(c);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w)
        pool.emplace_back([&] {
            for (std::size_t c = next++; c < chunks; c = next++)
                run(c);
        });
    for (auto& t : pool)
        t.join();
}

struct SampleStats {
    double mean = 0.0;
    double stderr_ = 0.0;
};

inline SampleStats sample_stats(const std::vector<double>& v)
{
    SampleStats s;
    if (v.empty())
        return s;
    s.mean = pairwise_sum(v) / double(v.size());
    std::vector<double> sq(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        sq[i] = (v[i] - s.mean) * (v[i] - s.mean);
    const double var = v.size() > 1 ? pairwise_sum(sq) / double(v.size() - 1) : 0.0;
    s.stderr_ = std::sqrt(var / double(v.size()));
    return s;
}

// ---------------------------------------------------------------- sampler

// nu restricted to |y| >= eps.
inline double mass_outside(const JumpMeasure& nu, double eps)
{
    double s = 0.0;
    for (const auto& c : nu.components) {
        if (auto a = std::get_if<Atoms>(&c)) {
            for (const auto& at : a->atoms)
                if (at.location != 0.0 && std::abs(at.location) >= eps)
                    s += at.intensity;
        } else if (auto ts = std::get_if<TemperedStableNegative>(&c); ts && !ts->eta) {
            const double A = -ts->a0;
            if (eps < A)
                s += eps > 0 ? ts->eta0 * (std::pow(eps, -ts->alpha) - std::pow(A, -ts->alpha)) / ts->alpha
                             : kInf;
        } else {
            s += integrate(c, [](double) { return 1.0; }, -kInf, -eps, 0.0) +
                 integrate(c, [](double) { return 1.0; }, eps, kInf, 0.0);
        }
    }
    return s;
}

// \int_{|y|<eps} f dnu with f = O(y^order).
template <class F>
double integrate_inside(const JumpMeasure& nu, F&& f, double eps, double order)
{
    if (!(eps > 0))
        return 0.0;
    return integrate(nu, f, -eps, eps, order);
}

class IncrementSampler {
public:
    using Rng = std::mt19937_64;

    IncrementSampler(const LevyModel& model, double epsilon, double max_proxy_share = 0.5)
        : sigma_(model.sigma), epsilon_(epsilon)
    {
        if (epsilon < 0)
            throw ConfigError("small-jump cutoff must be nonnegative");
        const JumpMeasure& nu = model.nu;
        sigma_eps2_ = integrate_inside(nu, [](double y) { return y * y; }, epsilon, 2.0);
        const double qv = sigma_ * sigma_ + second_moment(nu);
        if (sigma_eps2_ > max_proxy_share * qv)
            throw ConfigError("small-jump cutoff too large: Gaussian proxy exceeds its share of the "
                              "quadratic variation");
        const double c_small = integrate_inside(nu, expm1_minus_id, epsilon, 2.0);
        const double comp = integrate(nu, [](double y) { return y; }, -1.0, -epsilon, 1.0) +
                            integrate(nu, [](double y) { return y; }, epsilon, 1.0, 1.0) +
                            boundary_atoms(nu, epsilon);
        drift_ = model.gamma - comp + (c_small - 0.5 * sigma_eps2_);
        diffusion_ = std::sqrt(sigma_ * sigma_ + sigma_eps2_);
        for (const auto& c : nu.components)
            add_sources(c);
        cumulative_.reserve(sources_.size());
        double acc = 0.0;
        for (const auto& s : sources_) {
            acc += s.mass;
            cumulative_.push_back(acc);
        }
        intensity_ = acc;
    }

    double epsilon() const { return epsilon_; }
    double drift() const { return drift_; }
    double sigma_eps() const { return std::sqrt(sigma_eps2_); }
    double diffusion() const { return diffusion_; }
    double intensity() const { return intensity_; }

    // One resolved jump.
    double jump(Rng& g) const
    {
        std::uniform_real_distribution<double> U(0.0, intensity_);
        const double u = U(g);
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        const std::size_t k = std::min<std::size_t>(it - cumulative_.begin(), sources_.size() - 1);
        return sources_[k].draw(g);
    }

    long jump_count(double t, Rng& g) const
    {
        if (intensity_ <= 0.0)
            return 0;
        std::poisson_distribution<long> P(intensity_ * t);
        return P(g);
    }

    // Sum of the resolved jumps over [0,t].
    double jump_sum(double t, Rng& g) const
    {
        const long n = jump_count(t, g);
        double s = 0.0;
        for (long i = 0; i < n; ++i)
            s += jump(g);
        return s;
    }

    // One draw of X_t.
    double draw(double t, Rng& g) const
    {
        std::normal_distribution<double> N;
        double x = drift_ * t;
        if (diffusion_ > 0)
            x += diffusion_ * std::sqrt(t) * N(g);
        return x + jump_sum(t, g);
    }

private:
    struct Source {
        double mass;
        std::function<double(Rng&)> draw;
    };

    static double boundary_atoms(const JumpMeasure& nu, double eps)
    {
        // atoms sitting exactly at |y| = eps are resolved; integrate() uses open intervals
        double s = 0.0;
        if (eps <= 0 || eps > 1)
            return 0.0;
        for (const auto& c : nu.components)
            if (auto a = std::get_if<Atoms>(&c))
                for (const auto& at : a->atoms)
                    if (std::abs(at.location) == eps)
                        s += at.intensity * at.location;
        return s;
    }

    void add_sources(const JumpComponent& c)
    {
        const double eps = epsilon_;
        std::visit(
            detail::overloaded{
                [&](const Atoms& a) {
                    for (const auto& at : a.atoms) {
                        if (at.location == 0.0 || std::abs(at.location) < eps)
                            continue;
                        const double y = at.location;
                        sources_.push_back({at.intensity, [y](Rng&) { return y; }});
                    }
                },
                [&](const DoubleExponential& d) {
                    if (d.p > 0) {
                        const double rate = d.eta_up;
                        sources_.push_back({d.lambda * d.p * std::exp(-rate * eps), [eps, rate](Rng& g) {
                                                std::exponential_distribution<double> E(rate);
                                                return eps + E(g);
                                            }});
                    }
                    if (d.p < 1) {
                        const double rate = d.eta_down;
                        sources_.push_back({d.lambda * (1 - d.p) * std::exp(-rate * eps),
                                            [eps, rate](Rng& g) {
                                                std::exponential_distribution<double> E(rate);
                                                return -eps - E(g);
                                            }});
                    }
                },
                [&](const TemperedStableNegative& d) {
                    const double A = -d.a0;
                    if (!(eps > 0))
                        throw ConfigError("infinite-activity measure needs a positive cutoff");
                    if (eps >= A)
                        return;
                    const double a = d.alpha;
                    const double lo = std::pow(eps, -a), hi = std::pow(A, -a);
                    const double mass = d.eta0 * (lo - hi) / a;
                    // inverse CDF of s^{-1-alpha} on [eps, A]
                    auto base = [lo, hi, a](Rng& g) {
                        std::uniform_real_distribution<double> U(0.0, 1.0);
                        return -std::pow(lo - U(g) * (lo - hi), -1.0 / a);
                    };
                    if (!d.eta) {
                        sources_.push_back({mass, base});
                        return;
                    }
                    const double sup = d.sup_eta(d.a0);
                    const double true_mass =
                        integrate(JumpComponent{d}, [](double) { return 1.0; }, -kInf, -eps, 0.0);
                    auto eta = d.eta;
                    sources_.push_back({true_mass, [base, eta, sup](Rng& g) {
                                            std::uniform_real_distribution<double> U(0.0, 1.0);
                                            for (;;) {
                                                const double y = base(g);
                                                if (U(g) * sup <= eta(y))
                                                    return y;
                                            }
                                        }});
                    (void)mass;
                },
                [&](const GammaLike& d) {
                    if (!(eps > 0))
                        throw ConfigError("infinite-activity measure needs a positive cutoff");
                    add_gamma_side(d.c_pos, d.m, +1.0);
                    add_gamma_side(d.c_neg, d.g, -1.0);
                }},
            c);
    }

    // c e^{-k s}/s on s >= eps, mirrored by `sign`.
    void add_gamma_side(double c, double k, double sign)
    {
        if (!(c > 0))
            return;
        const double eps = epsilon_;
        auto dens = [c, k](double s) { return c * std::exp(-k * s) / s; };
        if (eps < 1.0) {
            // log scale: s = e^v
            const double mass =
                quad::gk([c, k](double v) { return c * std::exp(-k * std::exp(v)); }, std::log(eps), 0.0);
            sources_.push_back({mass, [eps, k, sign](Rng& g) {
                                    std::uniform_real_distribution<double> U(0.0, 1.0);
                                    for (;;) {
                                        const double s = eps * std::pow(1.0 / eps, U(g));
                                        if (U(g) <= std::exp(-k * (s - eps)))
                                            return sign * s;
                                    }
                                }});
        }
        const double start = std::max(eps, 1.0);
        const double tail = quad::semi_infinite(dens, start);
        sources_.push_back({tail, [start, k, sign](Rng& g) {
                                std::uniform_real_distribution<double> U(0.0, 1.0);
                                std::exponential_distribution<double> E(k);
                                for (;;) {
                                    const double s = start + E(g);
                                    if (U(g) <= start / s)
                                        return sign * s;
                                }
                            }});
    }

    double sigma_;
    double epsilon_;
    double sigma_eps2_ = 0.0;
    double drift_ = 0.0;
    double diffusion_ = 0.0;
    double intensity_ = 0.0;
    std::vector<Source> sources_;
    std::vector<double> cumulative_;
};

struct SimOptions {
    double epsilon = -1.0;       // negative: chosen from target_jumps
    double target_jumps = 200.0; // expected resolved jumps per draw when auto
    unsigned threads = 1;
};

// Cutoff giving about `target` resolved jumps over [0,t]; 0 for finite activity.
inline double default_epsilon(const LevyModel& m, double t, double target = 200.0)
{
    if (std::isfinite(total_mass(m.nu)))
        return 0.0;
    double lo = std::log(1e-12), hi = std::log(1.0);
    if (mass_outside(m.nu, std::exp(lo)) * t <= target)
        return std::exp(lo);
    for (int i = 0; i < 100; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mass_outside(m.nu, std::exp(mid)) * t > target)
            lo = mid;
        else
            hi = mid;
    }
    return std::exp(hi);
}

inline IncrementSampler make_sampler(const LevyModel& m, double t, const SimOptions& opt)
{
    return IncrementSampler(m, opt.epsilon >= 0 ? opt.epsilon : default_epsilon(m, t, opt.target_jumps));
}

inline std::vector<double> sample_terminal(const LevyModel& m, double t, std::size_t n,
                                           std::uint64_t seed, const SimOptions& opt = {})
{
    if (!(t > 0) || n == 0)
        throw std::invalid_argument("sample_terminal: need t > 0 and n >= 1");
    const IncrementSampler s = make_sampler(m, t, opt);
    std::vector<double> out(n);
    for_each_chunk(n, seed, opt.threads, [&](std::size_t, std::size_t b, std::size_t e, auto& g) {
        for (std::size_t i = b; i < e; ++i)
            out[i] = s.draw(t, g);
    });
    return out;
}

// ---------------------------------------------------------------- checks

struct RungResult {
    double t;
    double estimate;
    double stderr_;
    double target;
    double zscore;
};

inline double zscore(double est, double se, double target)
{
    const double d = est - target;
    if (std::abs(d) <= 1e-12 * std::max(1.0, std::abs(target)))
        return 0.0;
    return se > 0 ? d / se : (d > 0 ? kInf : -kInf);
}

struct CompensationReport {
    RungResult result;
    double epsilon;
    bool pass(double zmax = 3.0) const { return std::abs(result.zscore) <= zmax; }
};

// E[sum_{s<=t} f(Delta X_s)] over resolved jumps against t \int_{|y|>=eps} f dnu.
inline CompensationReport compensation_check(const LevyModel& m, const std::function<double(double)>& f,
                                             double t, std::size_t n, std::uint64_t seed,
                                             const SimOptions& opt = {})
{
    const IncrementSampler s = make_sampler(m, t, opt);
    const double eps = s.epsilon();
    std::vector<double> sums(n);
    for_each_chunk(n, seed, opt.threads, [&](std::size_t, std::size_t b, std::size_t e, auto& g) {
        for (std::size_t i = b; i < e; ++i) {
            const long k = s.jump_count(t, g);
            double acc = 0.0;
            for (long j = 0; j < k; ++j)
                acc += f(s.jump(g));
            sums[i] = acc;
        }
    });
    auto st = sample_stats(sums);
    double target = 0.0;
    for (const auto& c : m.nu.components) {
        if (auto a = std::get_if<Atoms>(&c)) {
            for (const auto& at : a->atoms)
                if (at.location != 0.0 && std::abs(at.location) >= eps)
                    target += at.intensity * f(at.location);
        } else {
            target += integrate(c, f, -kInf, -eps, 0.0) + integrate(c, f, eps, kInf, 0.0);
        }
    }
    target *= t;
    return {{t, st.mean, st.stderr_, target, zscore(st.mean, st.stderr_, target)}, eps};
}

inline double median_of(std::vector<double> v)
{
    const std::size_t h = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + h, v.end());
    const double hi = v[h];
    if (v.size() % 2)
        return hi;
    return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + h));
}

struct DriftReport {
    std::vector<RungResult> rungs; // estimate = median of Y_t/t
    std::vector<double> means;     // E[Y_t/t]
    double target;                 // -\int_{|x|<=1} x nu(dx)
};

// Y_t = sum of jumps on [0,t] minus t \int_{|x|<=1} x nu(dx).
inline DriftReport small_time_drift_check(const LevyModel& m, const std::vector<double>& t_ladder,
                                          std::size_t n, std::uint64_t seed, const SimOptions& opt = {})
{
    if (!finite_variation(m.nu))
        throw DomainError("small_time_drift_check needs a finite-variation jump measure");
    DriftReport rep;
    rep.target = -integrate(m.nu, [](double y) { return y; }, -1.0, 1.0, 1.0);
    for (std::size_t r = 0; r < t_ladder.size(); ++r) {
        const double t = t_ladder[r];
        const IncrementSampler s = make_sampler(m, t, opt);
        const double eps = s.epsilon();
        const double small_mean = integrate_inside(m.nu, [](double y) { return y; }, eps, 1.0);
        std::vector<double> v(n);
        for_each_chunk(n, seed + r, opt.threads, [&](std::size_t, std::size_t b, std::size_t e, auto& g) {
            std::normal_distribution<double> N;
            for (std::size_t i = b; i < e; ++i) {
                double sum = s.jump_sum(t, g) + small_mean * t;
                if (s.sigma_eps() > 0)
                    sum += s.sigma_eps() * std::sqrt(t) * N(g);
                v[i] = sum / t + rep.target;
            }
        });
        auto st = sample_stats(v);
        const double med = median_of(v);
        // asymptotic standard error of a median under a locally Gaussian shape
        const double se = std::sqrt(kPi / 2) * st.stderr_;
        rep.rungs.push_back({t, med, se, rep.target, zscore(med, se, rep.target)});
        rep.means.push_back(st.mean);
    }
    return rep;
}

struct GrowthReport {
    std::vector<RungResult> rungs; // target = sigma/sqrt(2 pi t) when sigma > 0, else NaN
    double fitted_exponent;        // slope of ln E(X_t/t)_+ against ln t
    bool monotone;                 // estimate increases as t decreases
};

inline GrowthReport positive_part_growth(const LevyModel& m, const std::vector<double>& t_ladder,
                                         std::size_t n, std::uint64_t seed, const SimOptions& opt = {})
{
    GrowthReport rep;
    std::vector<double> lx, ly;
    for (std::size_t r = 0; r < t_ladder.size(); ++r) {
        const double t = t_ladder[r];
        const IncrementSampler s = make_sampler(m, t, opt);
        std::vector<double> v(n);
        for_each_chunk(n, seed + r, opt.threads, [&](std::size_t, std::size_t b, std::size_t e, auto& g) {
            for (std::size_t i = b; i < e; ++i)
                v[i] = std::max(s.draw(t, g) / t, 0.0);
        });
        auto st = sample_stats(v);
        const double bench = m.sigma > 0 ? m.sigma / std::sqrt(2 * kPi * t) : std::nan("");
        rep.rungs.push_back({t, st.mean, st.stderr_, bench,
                             m.sigma > 0 ? zscore(st.mean, st.stderr_, bench) : std::nan("")});
        lx.push_back(std::log(t));
        ly.push_back(std::log(st.mean));
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= double(lx.size());
    my /= double(ly.size());
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    rep.fitted_exponent = sxx > 0 ? sxy / sxx : std::nan("");
    rep.monotone = true;
    for (std::size_t i = 1; i < rep.rungs.size(); ++i)
        if ((t_ladder[i] < t_ladder[i - 1]) != (rep.rungs[i].estimate > rep.rungs[i - 1].estimate))
            rep.monotone = false;
    return rep;
}

// eta0 \int_0^inf (e^{-iuz} - 1 + iuz) z^{-1-alpha} dz, 1 < alpha < 2.
inline cplx stable_limit_exponent(double alpha, double eta0, double u)
{
    if (u == 0.0)
        return 0.0;
    const cplx I(0.0, 1.0);
    // near 0: (e^{-iuz}-1+iuz)/z^2 by series, then times z^{1-alpha}
    auto head = [&](double z) -> cplx {
        const cplx w = -I * u * z;
        cplx q;
        if (std::abs(w) < 0.1) {
            cplx t = 0.5, sum = 0.0;
            for (int k = 3; k < 20; ++k) {
                sum += t;
                t *= w / double(k);
            }
            q = sum * (-I * u) * (-I * u);
        } else {
            q = (std::exp(w) - 1.0 - w) / (z * z);
        }
        return q * std::pow(z, 1.0 - alpha);
    };
    // [0,1] with the substitution z = s^p removing z^{1-alpha}
    const double p = 1.0 / (2.0 - alpha);
    auto h0 = [&](double s) -> cplx {
        if (s <= 0)
            return 0.0;
        const double z = std::pow(s, p);
        return head(z) * p * std::pow(s, p - 1.0);
    };
    cplx total = quad::gk_complex(h0, 0.0, 1.0, 1e-12);
    // [1, inf): e^{-iuz} z^{-1-alpha} along z = 1 - i v/u, which decays like e^{-v}
    const double au = std::abs(u);
    auto rotated = [&](double v) -> cplx { return std::exp(-v) * std::pow(cplx(1.0, -v / au), -1.0 - alpha); };
    cplx tail = -I * std::exp(-I * au) / au * quad::gk_complex(rotated, 0.0, 60.0, 1e-13);
    if (u < 0)
        tail = std::conj(tail);
    total += tail - 1.0 / alpha;       // the -1 term
    total += I * u / (alpha - 1.0);    // \int_1^inf iuz z^{-1-alpha} dz
    return eta0 * total;
}

struct StableRung {
    double t;
    double sup_error;
    double noise; // max over u of the standard error of the empirical ch.f.
};

struct StableLimitReport {
    std::vector<StableRung> rungs;
    double alpha;
    double eta0;
};

inline const TemperedStableNegative* stable_component(const LevyModel& m)
{
    const TemperedStableNegative* ts = nullptr;
    for (const auto& c : m.nu.components) {
        if (auto p = std::get_if<TemperedStableNegative>(&c)) {
            if (ts)
                return nullptr;
            ts = p;
        } else if (!finite_variation(JumpMeasure{{c}})) {
            return nullptr;
        }
    }
    return ts;
}

// Assumption (AS): sigma = 0, one tempered-stable component with 1 < alpha < 2,
// everything else of finite variation, and \int (e^y-1)_+ nu < r - delta.
inline bool satisfies_as(const LevyModel& m)
{
    const auto* ts = stable_component(m);
    return m.sigma == 0.0 && ts && ts->alpha > 1.0 && ts->alpha < 2.0 && d_plus(m) > 0.0;
}

inline StableLimitReport stable_limit_check(const LevyModel& m, const std::vector<double>& t_ladder,
                                            std::size_t n, const std::vector<double>& u_grid,
                                            std::uint64_t seed, SimOptions opt = {})
{
    if (!satisfies_as(m))
        throw DomainError("stable_limit_check needs a model satisfying (AS)");
    const auto* ts = stable_component(m);
    StableLimitReport rep{{}, ts->alpha, ts->eta0};
    std::vector<cplx> limit(u_grid.size());
    for (std::size_t k = 0; k < u_grid.size(); ++k)
        limit[k] = std::exp(stable_limit_exponent(ts->alpha, ts->eta0, u_grid[k]));
    if (opt.epsilon < 0 && opt.target_jumps == SimOptions{}.target_jumps)
        opt.target_jumps = 1000.0;
    for (std::size_t r = 0; r < t_ladder.size(); ++r) {
        const double t = t_ladder[r];
        const double scale = std::pow(t, 1.0 / ts->alpha);
        auto x = sample_terminal(m, t, n, seed + r, opt);
        double sup = 0.0, noise = 0.0;
        std::vector<double> c(n), s(n);
        for (std::size_t k = 0; k < u_grid.size(); ++k) {
            const double u = u_grid[k];
            for (std::size_t i = 0; i < n; ++i) {
                const double a = u * x[i] / scale;
                c[i] = std::cos(a);
                s[i] = std::sin(a);
            }
            auto sc = sample_stats(c);
            auto ss = sample_stats(s);
            sup = std::max(sup, std::abs(cplx(sc.mean, ss.mean) - limit[k]));
            noise = std::max(noise, std::hypot(sc.stderr_, ss.stderr_));
        }
        rep.rungs.push_back({t, sup, noise});
    }
    return rep;
}

} // namespace amlevy

#endif
