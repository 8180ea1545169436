#include <catch_amalgamated.hpp>

#include <amlevy/american.hpp>
#include <amlevy/oracles.hpp>

#include "oracles.hpp"

using namespace amlevy;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

MarketParams market(double r = 0.05, double T = 1.0)
{
    MarketParams m;
    m.r = r;
    m.strike = 100;
    m.maturity = T;
    return m;
}

PriceSurface solve(const LevyModel& m, const GridSpec& gs, SolveOptions opt = {})
{
    return solve_variational_inequality(m, build_grid(m, gs), opt);
}

void require_all(const std::vector<Assertion>& v)
{
    for (const auto& a : v) {
        INFO(a.name << " measured " << a.measured << " target " << a.target << " tol " << a.tolerance);
        CHECK(a.pass);
    }
}

} // namespace

TEST_CASE("solver basics", "[american]")
{
    const auto m = make_model(0.3, {}, market(0.05, 0.5));
    const auto s = solve(m, GridSpec{});
    REQUIRE(s.theta.size() == 401);
    CHECK(s.american.front() == s.payoff);
    CHECK(s.european.front() == s.payoff);
    for (double v : s.premium.front())
        CHECK(v == 0.0);
    for (std::size_t j = 0; j < s.x.size(); ++j)
        CHECK(s.payoff[j] == std::max(100.0 - std::exp(s.x[j]), 0.0));
    // stored window
    CHECK(s.x.front() >= std::log(100.0) - 2.0 - 1e-12);
    CHECK(s.x.back() <= std::log(100.0) + 1.0 + 1e-12);
    const Grid g = build_grid(m, GridSpec{});
    CHECK((s.x.front() < std::log(100.0) - 2.0 + s.dx || s.x.front() == g.x(0)));
}

TEST_CASE("Black-Scholes American put against a binomial tree", "[american]")
{
    const auto m = make_model(0.3, {}, market(0.05, 0.5));
    GridSpec gs;
    gs.n_t = 800;
    const auto s = solve(m, gs);
    const std::size_t last = s.theta.size() - 1;
    for (double S : {80.0, 100.0, 120.0}) {
        const double tree = reference::binomial_american_put(S, 100, 0.05, 0.0, 0.3, 0.5, 2000);
        CHECK_THAT(american_price(s, last, S), WithinRel(tree, 5e-3));
        const double bs = reference::black_scholes_put(S, 100, 0.05, 0.0, 0.3, 0.5);
        CHECK_THAT(surface_value(s, s.european[last], std::log(S)), WithinRel(bs, 5e-3));
    }
}

TEST_CASE("zero rate: no early exercise", "[american]")
{
    ModelOptions mo;
    mo.require_positive_rate = false;
    const auto m = make_model(0.2, JumpMeasure{{Atoms{{{-0.1, 1.0}}}}}, market(0.0, 0.5), mo);
    const auto s = solve(m, GridSpec{});
    double worst = 0.0;
    for (std::size_t i = 0; i < s.theta.size(); ++i)
        for (std::size_t j = 0; j < s.x.size(); ++j)
            worst = std::max(worst, s.american[i][j] - s.european[i][j]);
    CHECK(worst <= 1e-6 * 100);
    // and the grid European tracks the Fourier price
    const std::size_t last = s.theta.size() - 1;
    for (double S : {80.0, 100.0, 120.0})
        CHECK_THAT(american_price(s, last, S), WithinRel(price_put_fourier(m, S, 0.5).value, 5e-3));
}

TEST_CASE("grid convergence at the money", "[american]")
{
    std::vector<LevyModel> models{
        make_model(0.3, {}, market(0.05, 0.5)),
        make_model(0.2, JumpMeasure{{Atoms{{{-0.1, 1.0}, {0.15, 0.5}}}}}, market(0.05, 0.5)),
    };
    for (const auto& m : models) {
        GridSpec coarse, fine;
        fine.n_x = 2 * coarse.n_x - 1;
        fine.n_t = 2 * coarse.n_t;
        const auto a = solve(m, coarse, {false, false});
        const auto b = solve(m, fine, {false, false});
        const double pa = american_price(a, a.theta.size() - 1, 100.0);
        const double pb = american_price(b, b.theta.size() - 1, 100.0);
        CHECK_THAT(pa, WithinRel(pb, 2e-3));
    }
}

TEST_CASE("structural invariants across model families", "[american]")
{
    std::vector<std::pair<LevyModel, GridSpec>> cases;
    GridSpec gs;
    cases.push_back({make_model(0.3, {}, market(0.05, 0.5)), gs});
    cases.push_back({make_model(0.2, JumpMeasure{{Atoms{{{-0.1, 1.0}, {0.15, 0.5}}}}}, market()), gs});
    cases.push_back({make_model(0.0, JumpMeasure{{Atoms{{{-0.2, 5.0}}}}}, market(0.06, 0.1)), gs});
    cases.push_back({make_model(0.0, JumpMeasure{{DoubleExponential{3.0, 0.3, 9.0, 6.0}}}, market()), gs});
    GridSpec ts = gs;
    ts.n_x = 6001;
    ts.half_width = 1.5;
    cases.push_back({make_model(0.0, JumpMeasure{{TemperedStableNegative{1.5, 1.0, -1.0, {}, {}}}}, market(0.05, 0.1)), ts});
    cases.push_back({make_model(0.0, JumpMeasure{{TemperedStableNegative{0.5, 1.0, -1.0, {}, {}}}}, market()), gs});
    cases.push_back({make_model(0.0, JumpMeasure{{GammaLike{2.0, 6.0, 1.0, 9.0}}}, market()), gs});
    for (const auto& [m, spec] : cases) {
        const auto s = solve(m, spec);
        auto c = extract_boundary(s);
        attach_european_boundary(c, m);
        require_all(surface_invariants(s, c));
        require_all(eep_bound_check(s));
    }
}

TEST_CASE("boundary near maturity", "[american]")
{
    SECTION("d_plus >= 0: boundary tends to the strike")
    {
        const auto m = make_model(0.3, {}, market());
        GridSpec gs;
        gs.n_x = 8001;
        gs.horizon = 0.01;
        const auto c = extract_boundary(solve(m, gs, {false, false}));
        CHECK(c.b.front() > 99.5);
        CHECK(c.b.front() < 100.0);
    }
    SECTION("d_plus < 0: boundary tends to the sub-strike root")
    {
        const auto m = make_model(0.2, JumpMeasure{{Atoms{{{0.3, 1.0}}}}}, market());
        REQUIRE(d_plus(m) < 0);
        // phi0(xi) = rK by bisection
        const double xi = oracle::bisect(
            [](double x) { return std::max(x * std::exp(0.3) - 100.0, 0.0) * 1.0 - 0.05 * 100; }, 1.0, 100.0);
        GridSpec gs;
        gs.n_x = 4001;
        gs.horizon = 0.01;
        const auto c = extract_boundary(solve(m, gs, {false, false}));
        CHECK_THAT(c.b.front(), WithinRel(xi, 0.02));
    }
}

TEST_CASE("slope of the value at the boundary", "[american]")
{
    SECTION("smooth fit under refinement")
    {
        const auto m = make_model(0.3, {}, market(0.06));
        GridSpec gs;
        gs.half_width = 1.0;
        gs.n_t = 200;
        gs.theta_min = 1e-3;
        gs.horizon = 0.1;
        std::vector<double> jumps;
        for (int nx : {1001, 2001, 4001}) {
            gs.n_x = nx;
            const auto s = solve(m, gs, {false, false});
            jumps.push_back(slope_jump_at_boundary(s, s.theta.size() - 1));
        }
        CHECK(jumps[1] < jumps[0]);
        CHECK(jumps[2] < jumps[1]);
        CHECK(jumps[2] < 2e-3);
    }
    SECTION("finite variation: derivative jump bounded below")
    {
        std::vector<LevyModel> models{
            make_model(0.0, JumpMeasure{{Atoms{{{-0.2, 5.0}}}}}, market(0.06)),
            make_model(0.0, JumpMeasure{{TemperedStableNegative{0.5, 1.0, -1.0, {}, {}}}}, market(0.06)),
        };
        for (const auto& m : models) {
            const double dp = d_plus(m);
            REQUIRE(dp > 0);
            const double ratio = dp / (dp + exp_moment_integrals(m).neg);
            GridSpec gs;
            gs.n_x = 4001;
            gs.half_width = 1.0;
            gs.n_t = 200;
            gs.theta_min = 1e-3;
            gs.horizon = 0.1;
            const auto s = solve(m, gs, {false, false});
            int checked = 0;
            for (std::size_t i = 1; i < s.theta.size(); ++i) {
                const double b = std::exp(s.boundary_x[i]);
                if (100.0 - b < 20 * s.dx * 100.0)
                    continue; // gap not resolved
                ++checked;
                INFO("theta " << s.theta[i]);
                CHECK(slope_jump_at_boundary(s, i) >= 0.9 * ratio);
            }
            CHECK(checked > 20);
        }
    }
}

TEST_CASE("premium kernel on the grid", "[american]")
{
    SECTION("no positive jumps: kernel is rK - delta S")
    {
        MarketParams mk = market();
        mk.delta = 0.02;
        const auto m = make_model(0.0, JumpMeasure{{TemperedStableNegative{0.5, 1.0, -1.0, {}, {}}}}, mk);
        const auto s = solve(m, GridSpec{});
        for (std::size_t i = 0; i < s.theta.size(); i += 37)
            for (std::size_t j = 0; j < s.x.size(); j += 101)
                CHECK_THAT(s.kernel[i][j], WithinAbs(0.05 * 100 - 0.02 * std::exp(s.x[j]), 1e-12));
    }
    SECTION("grid premium tracks P - P_e, first order in the step")
    {
        const auto m = make_model(0.2, JumpMeasure{{Atoms{{{-0.1, 1.0}, {0.15, 0.5}}}}}, market());
        auto worst_gap = [&](const GridSpec& gs) {
            const auto s = solve(m, gs);
            double worst = 0.0;
            for (std::size_t i = 0; i < s.theta.size(); ++i)
                for (std::size_t j = 0; j < s.x.size(); ++j)
                    worst = std::max(worst, std::abs(s.american[i][j] - s.european[i][j] - s.premium[i][j]));
            return worst;
        };
        GridSpec gs;
        const double coarse = worst_gap(gs);
        gs.n_x = 2 * gs.n_x;
        gs.n_t = 2 * gs.n_t;
        const double fine = worst_gap(gs);
        CHECK(coarse < 1e-4 * 100);
        CHECK(fine < 0.6 * coarse);
    }
}

TEST_CASE("early exercise premium by simulation", "[american]")
{
    SECTION("refuses finite activity without diffusion")
    {
        const auto m = make_model(0.0, JumpMeasure{{Atoms{{{-0.2, 5.0}}}}}, market(0.06, 0.1));
        const auto s = solve(m, GridSpec{});
        CHECK_THROWS_AS(eep_premium(m, s, 0.05, 100.0), DomainError);
    }
    SECTION("boundary gap is an error")
    {
        const auto m = make_model(0.3, {}, market(0.05, 0.5));
        auto s = solve(m, GridSpec{});
        s.boundary_x[5] = std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_AS(eep_premium(m, s, 0.25, 100.0), NumericalFailure);
    }
    SECTION("spot far above the boundary earns nothing")
    {
        const auto m = make_model(0.3, {}, market(0.05, 0.5));
        const auto s = solve(m, GridSpec{});
        const auto e = eep_premium(m, s, 1e-3, 200.0);
        CHECK(e.value == 0.0);
        CHECK(e.stderr_ == 0.0);
    }
    SECTION("matches P - P_e for a tempered stable model")
    {
        const auto m = make_model(0.0, JumpMeasure{{TemperedStableNegative{1.5, 1.0, -1.0, {}, {}}}}, market(0.05, 0.25));
        GridSpec gs;
        gs.n_x = 6001;
        gs.half_width = 1.5;
        const auto s = solve(m, gs);
        const std::size_t last = s.theta.size() - 1;
        EepOptions eo;
        eo.n_paths = 4000;
        eo.n_steps = 100;
        for (double S : {80.0, 95.0, 110.0}) {
            const auto e = eep_premium(m, s, 0.25, S, eo);
            const double x = std::log(S);
            const double diff = surface_value(s, s.american[last], x) - surface_value(s, s.european[last], x);
            CHECK(std::abs(diff - e.value) <= std::max(1.0, 3 * e.stderr_));
            CHECK(e.value >= 0.0);
        }
    }
}

TEST_CASE("complementarity cap raises a numerical failure", "[american]")
{
    const auto m = make_model(0.3, {}, market(0.05, 0.5));
    SolveOptions opt;
    opt.lcp_tol = 0.0;
    opt.lcp_max_iter = 0;
    CHECK_THROWS_AS(solve(m, GridSpec{}, opt), NumericalFailure);
}
