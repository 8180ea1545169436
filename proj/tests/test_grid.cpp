#include <catch_amalgamated.hpp>

#include <amlevy/grid.hpp>

#include "oracles.hpp"

using namespace amlevy;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

MarketParams market()
{
    MarketParams m;
    m.r = 0.05;
    m.strike = 100;
    m.maturity = 1.0;
    return m;
}

double weight_sum(const Grid& g, double (*f)(double), double h)
{
    double s = 0.0;
    for (const auto& jw : g.jumps)
        s += jw.weight * f(jw.offset * h);
    return s;
}

} // namespace

TEST_CASE("grid without jumps", "[grid]")
{
    const auto m = make_model(0.3, {}, market());
    const Grid g = build_grid(m, GridSpec{});
    CHECK(g.jumps.empty());
    CHECK(g.sigma_eps == 0.0);
    CHECK(g.sigma_total == 0.3);
    CHECK_THAT(g.x(g.strike_index), WithinAbs(std::log(100.0), 1e-12));
    CHECK(g.strike_index > 0);
    CHECK(g.strike_index < g.n - 1);
    // eight price scales either side
    CHECK(std::log(100.0) - g.x(0) >= 8 * 0.3 - 1e-12);
    CHECK(g.x(g.n - 1) - std::log(100.0) >= 8 * 0.3 - 1e-12);
    CHECK_THAT(g.drift, WithinAbs(0.05 - 0.045, 1e-15));
}

TEST_CASE("single atom lands on one offset", "[grid]")
{
    const auto m = make_model(0.0, JumpMeasure{{Atoms{{{-0.2, 5.0}}}}}, market());
    for (double eps : {1e-4, 1e-3, 0.1}) {
        GridSpec gs;
        gs.n_x = 1001;
        gs.half_width = 1.0; // h = 0.002
        gs.epsilon = eps;
        const Grid g = build_grid(m, gs);
        REQUIRE(g.jumps.size() == 1);
        CHECK(g.jumps[0].offset == -100);
        CHECK_THAT(g.jumps[0].weight, WithinRel(5.0, 1e-14));
        CHECK(g.sigma_eps == 0.0);
    }
}

TEST_CASE("off-node atom splits between neighbours", "[grid]")
{
    const auto m = make_model(0.1, JumpMeasure{{Atoms{{{-0.2013, 2.0}}}}}, market());
    GridSpec gs;
    gs.n_x = 1001;
    gs.half_width = 1.0;
    const Grid g = build_grid(m, gs);
    REQUIRE(g.jumps.size() == 2);
    CHECK_THAT(g.jumps[0].weight + g.jumps[1].weight, WithinRel(2.0, 1e-14));
    // first moment preserved
    const double mean = g.jumps[0].weight * g.jumps[0].offset * g.dx + g.jumps[1].weight * g.jumps[1].offset * g.dx;
    CHECK_THAT(mean, WithinRel(2.0 * -0.2013, 1e-12));
}

TEST_CASE("small-jump variance proxy", "[grid]")
{
    const double alpha = 1.5, eta0 = 1.0;
    const auto m = make_model(0.0, JumpMeasure{{TemperedStableNegative{alpha, eta0, -1.0, {}, {}}}}, market());
    GridSpec gs;
    gs.n_x = 1001;
    gs.half_width = 0.1; // h = 2e-4 < eps
    gs.epsilon = 1e-3;
    const Grid g = build_grid(m, gs);
    CHECK(g.epsilon_jump == 1e-3);
    const double closed = eta0 * std::pow(1e-3, 2 - alpha) / (2 - alpha);
    const double quad = oracle::ts_integral([&](double s) { return eta0 * std::pow(s, 1 - alpha); }, 0.0, 1e-3);
    CHECK_THAT(closed, WithinRel(quad, 1e-10));
    CHECK_THAT(g.sigma_eps * g.sigma_eps, WithinRel(closed, 1e-8));

    // the cutoff never drops below one cell for infinite activity
    gs.half_width = 2.0; // h = 4e-3
    const Grid coarse = build_grid(m, gs);
    CHECK_THAT(coarse.epsilon_jump, WithinRel(coarse.dx, 1e-15));
}

TEST_CASE("jump weights carry the mass outside the cutoff", "[grid]")
{
    const auto m = make_model(0.0, JumpMeasure{{DoubleExponential{3.0, 0.3, 9.0, 6.0}}}, market());
    GridSpec gs;
    gs.n_x = 4001;
    const Grid g = build_grid(m, gs);
    double mass = 0.0, var = 0.0;
    for (const auto& jw : g.jumps) {
        mass += jw.weight;
        var += jw.weight * std::pow(jw.offset * g.dx, 2);
    }
    const double eps = g.epsilon_jump;
    CHECK_THAT(mass, WithinRel(3.0 * (0.3 * std::exp(-9 * eps) + 0.7 * std::exp(-6 * eps)), 1e-8));
    const double second = 3.0 * (0.3 * 2 / 81.0 + 0.7 * 2 / 36.0);
    // hat functions add at most h^2/4 per unit mass to the second moment
    CHECK(std::abs(var + g.sigma_eps * g.sigma_eps - second) < 3.0 * g.dx * g.dx);
}

TEST_CASE("discrete martingale identity", "[grid]")
{
    std::vector<LevyModel> models{
        make_model(0.25, {}, market()),
        make_model(0.0, JumpMeasure{{Atoms{{{-0.2, 5.0}}}}}, market()),
        make_model(0.2, JumpMeasure{{Atoms{{{-0.1, 1.0}, {0.15, 0.5}}}}}, market()),
        make_model(0.0, JumpMeasure{{DoubleExponential{3.0, 0.3, 9.0, 6.0}}}, market()),
        make_model(0.0, JumpMeasure{{TemperedStableNegative{1.5, 1.0, -1.0, {}, {}}}}, market()),
        make_model(0.0, JumpMeasure{{TemperedStableNegative{0.5, 1.0, -1.0, {}, {}}}}, market()),
        make_model(0.0, JumpMeasure{{GammaLike{2.0, 6.0, 1.0, 9.0}}}, market()),
    };
    for (const auto& m : models) {
        const Grid g = build_grid(m, GridSpec{});
        CHECK(std::abs(discrete_martingale_defect(g, m.market)) <= 1e-8);
        // drift is the exact compensator of the discrete weights
        const double comp = weight_sum(g, [](double y) { return std::expm1(y); }, g.dx);
        CHECK_THAT(g.drift + 0.5 * g.sigma_total * g.sigma_total + comp, WithinAbs(0.05, 1e-12));
    }
}

TEST_CASE("time nodes", "[grid]")
{
    const auto th = time_nodes(1e-4, 1.0, 200);
    REQUIRE(th.size() == 201);
    CHECK(th.front() == 0.0);
    CHECK(th.back() == 1.0);
    CHECK_THAT(th[1], WithinRel(2.5e-6, 1e-12));
    CHECK_THAT(th[4], WithinRel(1e-5, 1e-12));
    CHECK_THAT(th[22], WithinRel(1e-4, 1e-12));
    for (std::size_t i = 1; i < th.size(); ++i)
        CHECK(th[i] > th[i - 1]);
    // geometric part
    const double q = th[24] / th[23];
    CHECK_THAT(th[100] / th[99], WithinRel(q, 1e-10));
    CHECK_THROWS_AS(time_nodes(0.0, 1.0, 200), ConfigError);
    CHECK_THROWS_AS(time_nodes(2.0, 1.0, 200), ConfigError);
}

TEST_CASE("time nodes follow the drift when nothing diffuses", "[grid]")
{
    JumpMeasure nu;
    nu.components.push_back(Atoms{{{-0.2, 5.0}}});
    auto mk = market();
    mk.r = 0.06;
    const auto m = make_model(0.0, nu, mk);
    GridSpec gs;
    gs.n_x = 20001;
    gs.half_width = 1.0;
    gs.horizon = 0.01;
    const Grid g = build_grid(m, gs);
    REQUIRE(g.sigma_total == 0.0);
    const double tau = g.dx / std::abs(g.drift);
    CHECK(g.theta.front() == 0.0);
    CHECK(g.theta.back() == 0.01);
    for (std::size_t i = 1; i + 1 < g.theta.size(); ++i) {
        CHECK(g.theta[i] > g.theta[i - 1]);
        const double cells = g.theta[i] / tau;
        CHECK_THAT(cells, WithinAbs(std::round(cells), 1e-9 * cells));
    }
    // fewer nodes than requested when tau exceeds the fine spacing
    CHECK(g.theta.size() < std::size_t(gs.n_t) + 1);

    const auto snapped = drift_aligned({0.0, 0.1, 0.15, 0.2, 1.0, 2.5}, 0.5);
    CHECK(snapped == std::vector<double>{0.0, 1.0, 2.5});
}

TEST_CASE("grid preconditions", "[grid]")
{
    const auto m = make_model(0.0, JumpMeasure{{TemperedStableNegative{1.5, 1.0, -1.0, {}, {}}}}, market());
    GridSpec gs;
    gs.n_x = 199;
    CHECK_THROWS_AS(build_grid(m, gs), ConfigError);
    gs = {};
    gs.n_t = 99;
    CHECK_THROWS_AS(build_grid(m, gs), ConfigError);
    gs = {};
    gs.theta_min = 0.0;
    CHECK_THROWS_AS(build_grid(m, gs), ConfigError);
    gs = {};
    gs.epsilon = 0.5; // proxy would hold almost all of the quadratic variation
    CHECK_THROWS_AS(build_grid(m, gs), ConfigError);
}
