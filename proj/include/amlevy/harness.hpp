#ifndef AMLEVY_HARNESS_HPP
#define AMLEVY_HARNESS_HPP

// Batch experiments behind the command line: each command solves what it needs,
// writes its CSV files into the output directory and returns its assertions.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "american.hpp"
#include "asymptotics.hpp"
#include "config.hpp"
#include "oracles.hpp"
#include "report.hpp"
#include "simulation.hpp"

namespace amlevy {

// ---------------------------------------------------------------- output

inline std::string format_double(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class CsvWriter {
public:
    using Cell = std::variant<double, std::string>;

    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
        : out_(path, std::ios::binary), width_(header.size())
    {
        if (!out_)
            throw std::runtime_error("cannot write " + path.string());
        write_line(header);
    }

    void row(const std::vector<Cell>& cells)
    {
        if (cells.size() != width_)
            throw std::logic_error("csv row width");
        std::vector<std::string> text;
        for (const auto& c : cells)
            text.push_back(std::holds_alternative<double>(c) ? format_double(std::get<double>(c))
                                                             : std::get<std::string>(c));
        write_line(text);
    }

private:
    void write_line(const std::vector<std::string>& v)
    {
        for (std::size_t i = 0; i < v.size(); ++i)
            out_ << (i ? "," : "") << v[i];
        out_ << '\n';
    }

    std::ofstream out_;
    std::size_t width_;
};

inline nlohmann::ordered_json assertions_json(const std::vector<Assertion>& v)
{
    auto arr = nlohmann::ordered_json::array();
    auto num = [](double x) -> nlohmann::ordered_json {
        if (std::isfinite(x))
            return x;
        return format_double(x);
    };
    for (const auto& a : v)
        arr.push_back({{"name", a.name},
                       {"measured", num(a.measured)},
                       {"target", num(a.target)},
                       {"tolerance", num(a.tolerance)},
                       {"pass", a.pass}});
    return arr;
}

inline void write_summary(const std::filesystem::path& dir, const std::string& command, const ExperimentConfig& cfg,
                          const std::vector<Assertion>& v, const std::vector<std::string>& files)
{
    nlohmann::ordered_json j;
    j["command"] = command;
    j["config"] = std::filesystem::path(cfg.path).filename().string();
    j["seed"] = cfg.experiment.seed;
    j["model_class"] = to_string(classify(cfg.model));
    j["files"] = files;
    j["all_pass"] = all_pass(v);
    j["assertions"] = assertions_json(v);
    std::ofstream out(dir / "summary.json", std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write summary.json");
    out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------- runs

struct RunOptions {
    std::filesystem::path out_dir = "out";
    unsigned threads = 1;
};

struct RunResult {
    std::vector<Assertion> assertions;
    std::vector<std::string> files;
};

namespace detail {

inline void append(std::vector<Assertion>& to, const std::vector<Assertion>& from)
{
    to.insert(to.end(), from.begin(), from.end());
}

inline std::string tagged(const std::string& name, const std::string& what, double v)
{
    return name + " " + what + "=" + format_double(v);
}

// Evenly spread indices in [0, n), always keeping the last one.
inline std::vector<std::size_t> spread(std::size_t n, std::size_t count)
{
    std::vector<std::size_t> out;
    if (n == 0)
        return out;
    const std::size_t stride = std::max<std::size_t>(1, (n - 1) / std::max<std::size_t>(1, count - 1));
    for (std::size_t i = 0; i < n; i += stride)
        out.push_back(i);
    if (out.back() != n - 1)
        out.push_back(n - 1);
    return out;
}

inline void write_surface(const std::filesystem::path& path, const PriceSurface& s, const ExperimentSettings& ex)
{
    CsvWriter w(path, {"theta", "x", "american", "european", "premium"});
    const auto nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i : spread(s.theta.size(), ex.surface_slices))
        for (std::size_t j : spread(s.x.size(), ex.surface_nodes))
            w.row({s.theta[i], s.x[j], s.american[i][j], s.has_european() ? s.european[i][j] : nan,
                   s.has_premium() ? s.premium[i][j] : nan});
}

inline void write_boundary(const std::filesystem::path& path, const BoundaryCurve& c)
{
    CsvWriter w(path, {"theta", "b", "b_e", "zeta"});
    const auto nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < c.theta.size(); ++i)
        w.row({c.theta[i], c.b[i], c.b_e.empty() ? nan : c.b_e[i], c.zeta.empty() ? nan : c.zeta[i]});
}

inline std::vector<Assertion> price_assertions(const LevyModel& m, const PriceSurface& s, const ExperimentSettings& ex)
{
    std::vector<Assertion> out;
    const std::size_t last = s.theta.size() - 1;
    for (double S : ex.spots) {
        const double P = american_price(s, last, S);
        const double Pe = surface_value(s, s.european[last], std::log(S));
        out.push_back(at_least(tagged("american >= european at maturity", "S", S), P, Pe, 1e-9 * m.market.strike));
    }
    return out;
}

} // namespace detail

inline RunResult run_price(const ExperimentConfig& cfg, const RunOptions& ro)
{
    const auto& m = cfg.model;
    const auto s = solve_variational_inequality(m, build_grid(m, cfg.grid));
    const auto c = extract_boundary(s);
    RunResult r;
    detail::write_surface(ro.out_dir / "surface.csv", s, cfg.experiment);
    r.files.push_back("surface.csv");
    r.assertions = surface_invariants(s, c);
    detail::append(r.assertions, eep_bound_check(s));
    detail::append(r.assertions, detail::price_assertions(m, s, cfg.experiment));
    return r;
}

inline RunResult run_boundary(const ExperimentConfig& cfg, const RunOptions& ro)
{
    const auto& m = cfg.model;
    const auto s = solve_variational_inequality(m, build_grid(m, cfg.grid), {true, false});
    auto c = extract_boundary(s);
    attach_european_boundary(c, m);
    RunResult r;
    detail::write_boundary(ro.out_dir / "boundary.csv", c);
    r.files.push_back("boundary.csv");
    r.assertions = surface_invariants(s, c);
    const double K = m.market.strike;
    if (d_plus(m) < 0) {
        const double xi = limit_critical_price(m);
        r.assertions.push_back(near("b on the first slice / xi", c.b.front() / xi, 1.0, 0.02));
    } else {
        r.assertions.push_back(at_most("b on the first slice <= K", c.b.front(), K));
    }
    return r;
}

inline RunResult run_asympt(const ExperimentConfig& cfg, const RunOptions& ro)
{
    const auto& m = cfg.model;
    const auto& ex = cfg.experiment;
    const double T = m.market.maturity;
    const Regime g = detect_regime(m);
    GridSpec gs = cfg.grid;
    const bool diverge = g.tag == RegimeTag::InfiniteVariationOther;
    const double lo = diverge ? *std::min_element(ex.ladder.begin(), ex.ladder.end()) * T : ex.fit_lo * T;
    const double hi = diverge ? *std::max_element(ex.ladder.begin(), ex.ladder.end()) * T : ex.fit_hi * T;
    if (!(gs.theta_min <= lo))
        schema_fail(cfg, "grid.theta_min", "grid.theta_min must not exceed the smallest fitted theta");
    if (gs.horizon == 0.0)
        gs.horizon = std::min(T, 2.0 * hi);
    const auto s = solve_variational_inequality(m, build_grid(m, gs), {false, false});
    const auto c = extract_boundary(s);

    RunResult r;
    CsvWriter w(ro.out_dir / "fits.csv", {"regime", "window_lo", "window_hi", "exponent", "constant", "target", "r2"});
    r.files.push_back("fits.csv");
    const std::string tag = to_string(g.tag);
    if (diverge) {
        const auto d = divergence_check(c, ex.ladder);
        const double slope = std::log(d.growth) / std::log(d.theta.back() / d.theta.front());
        w.row({tag, lo, hi, slope, d.growth, 3.0, std::numeric_limits<double>::quiet_NaN()});
        r.assertions.push_back(at_least("divergence growth of (K/b-1)/theta", d.growth, 3.0));
        r.assertions.push_back(at_least("(K/b-1)/theta increasing as theta decreases", d.increasing ? 1.0 : 0.0, 1.0));
        return r;
    }
    const RatePrediction p = rate_prediction(g);
    const RateFit f = fit_boundary_rate(c, g, lo, hi);
    w.row({tag, lo, hi, f.exponent, f.constant, p.constant, f.r_squared});
    r.assertions.push_back(near("fitted exponent", f.exponent, p.exponent, ex.exponent_tol));
    if (g.tag == RegimeTag::LimitBelowStrike)
        r.assertions.push_back(near("fitted K - xi", f.constant, p.constant, ex.constant_tol * p.constant));
    else
        r.assertions.push_back(near("fitted constant / predicted", f.constant / p.constant, 1.0, ex.constant_tol));
    return r;
}

inline RunResult run_simcheck(const ExperimentConfig& cfg, const RunOptions& ro)
{
    const auto& m = cfg.model;
    const auto& ex = cfg.experiment;
    SimOptions so;
    so.threads = ro.threads;
    RunResult r;
    CsvWriter w(ro.out_dir / "simreport.csv", {"t", "estimate", "stderr", "target", "zscore"});
    r.files.push_back("simreport.csv");
    auto add = [&](const RungResult& q, const std::string& what) {
        w.row({q.t, q.estimate, q.stderr_, q.target, q.zscore});
        r.assertions.push_back(at_most(detail::tagged(what + " |z|", "t", q.t), std::abs(q.zscore), 3.0));
    };
    std::uint64_t stream = ex.seed;
    if (!m.nu.components.empty()) {
        for (double t : ex.sim_times) {
            add(compensation_check(m, [](double y) { return y * y; }, t, ex.sim_paths, stream++, so).result,
                "compensation y^2");
            add(compensation_check(m, [](double y) { return std::max(-std::expm1(y), 0.0); }, t, ex.sim_paths,
                                   stream++, so)
                    .result,
                "compensation (e^y-1)_-");
        }
    }
    if (m.nu.components.empty() && m.sigma > 0) {
        const auto rep = positive_part_growth(m, ex.sim_times, ex.sim_paths, stream++, so);
        for (const auto& q : rep.rungs) {
            w.row({q.t, q.estimate, q.stderr_, q.target, q.zscore});
            r.assertions.push_back(near(detail::tagged("E(X_t/t)_+ / (sigma/sqrt(2 pi t))", "t", q.t),
                                        q.estimate / q.target, 1.0, 0.05));
        }
    }
    if (satisfies_as(m)) {
        const double t = *std::min_element(ex.sim_times.begin(), ex.sim_times.end());
        std::vector<double> u;
        for (int k = 1; k <= 20; ++k)
            u.push_back(0.25 * k);
        const auto rep = stable_limit_check(m, {t}, ex.sim_paths, u, stream++, so);
        const auto& q = rep.rungs.front();
        w.row({q.t, q.sup_error, q.noise, 0.0, q.noise > 0 ? q.sup_error / q.noise : 0.0});
        r.assertions.push_back(at_most(detail::tagged("stable limit sup ch.f. error", "t", q.t), q.sup_error, 0.05));
    }
    return r;
}

inline RunResult run_verify(const ExperimentConfig& cfg, const RunOptions& ro)
{
    const auto& m = cfg.model;
    const auto& ex = cfg.experiment;
    const auto& mk = m.market;
    const auto s = solve_variational_inequality(m, build_grid(m, cfg.grid));
    auto c = extract_boundary(s);
    attach_european_boundary(c, m);

    RunResult r;
    detail::write_surface(ro.out_dir / "surface.csv", s, ex);
    detail::write_boundary(ro.out_dir / "boundary.csv", c);
    r.files = {"surface.csv", "boundary.csv"};
    r.assertions = surface_invariants(s, c);
    detail::append(r.assertions, eep_bound_check(s));
    detail::append(r.assertions, detail::price_assertions(m, s, ex));

    const double T = mk.maturity, K = mk.strike;
    const std::size_t last = s.theta.size() - 1;
    if (s.theta[last] != T)
        schema_fail(cfg, "grid.horizon", "verify needs grid.horizon = 0");
    if (m.nu.components.empty()) {
        for (double S : ex.spots) {
            const double bin = reference::binomial_american_put(S, K, mk.r, mk.delta, m.sigma, T, 2000);
            r.assertions.push_back(
                near(detail::tagged("american / binomial tree", "S", S), american_price(s, last, S) / bin, 1.0, 5e-3));
            const double bs = reference::black_scholes_put(S, K, mk.r, mk.delta, m.sigma, T);
            r.assertions.push_back(
                near(detail::tagged("fourier european - closed form", "S", S), price_put_fourier(m, S, T).value - bs, 0.0,
                     1e-8));
        }
    } else {
        SimOptions so;
        so.threads = ro.threads;
        std::uint64_t stream = ex.seed;
        for (double S : ex.spots) {
            const auto f = price_put_fourier(m, S, T);
            const auto mc = price_put_mc(m, S, T, ex.sim_paths, stream++, so);
            r.assertions.push_back(near(detail::tagged("fourier european vs monte carlo (3 se)", "S", S),
                                        f.value - mc.value, 0.0, 3.0 * mc.stderr_ + 1e-6 * K));
        }
    }
    if (ex.eep_points > 0 && classify(m) != ModelClass::TypeA) {
        EepOptions eo;
        eo.n_paths = ex.eep_paths;
        eo.seed = ex.seed;
        eo.threads = ro.threads;
        const double th = T;
        for (std::size_t k = 0; k < ex.eep_points; ++k) {
            const double S = K * (0.8 + 0.4 * (k + 0.5) / double(ex.eep_points));
            const auto e = eep_premium(m, s, th, S, eo);
            const double grid = american_price(s, last, S) - surface_value(s, s.european[last], std::log(S));
            r.assertions.push_back(near(detail::tagged("P - P_e vs simulated premium", "S", S), grid - e.value, 0.0,
                                        std::max(0.01 * K, 3.0 * e.stderr_)));
            ++eo.seed;
        }
    }
    return r;
}

} // namespace amlevy

#endif
