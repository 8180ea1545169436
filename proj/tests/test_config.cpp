#include <catch_amalgamated.hpp>

#include <amlevy/harness.hpp>

using namespace amlevy;
using Catch::Matchers::ContainsSubstring;

namespace {

const std::string kBase = R"([market]
r = 0.05
strike = 100
maturity = 1

[model]
sigma = 0.2

[grid]
n_x = 2000
)";

// Line number carried by the schema error, or -1.
int error_line(const std::string& text, std::string* msg = nullptr)
{
    try {
        parse_config_text(text, "t.ini");
    } catch (const SchemaError& e) {
        if (msg)
            *msg = e.what();
        return e.line;
    }
    return -1;
}

} // namespace

TEST_CASE("minimal config with defaults", "[config]")
{
    const auto c = parse_config_text(kBase);
    CHECK(c.model.sigma == 0.2);
    CHECK(c.model.market.r == 0.05);
    CHECK(c.model.market.delta == 0.0);
    CHECK(c.model.market.spot == 100.0);
    CHECK(c.model.nu.components.empty());
    CHECK(c.grid.n_x == 2000);
    CHECK(c.grid.n_t == GridSpec{}.n_t);
    CHECK(c.grid.theta_min == GridSpec{}.theta_min);
    REQUIRE(c.experiment.spots.size() == 1);
    CHECK(c.experiment.spots[0] == 100.0);
    CHECK(c.experiment.seed == 1);
    CHECK(c.lines.at("market.r") == 2);
    CHECK(c.lines.at("[grid]") == 9);
}

TEST_CASE("jump sections build the measure", "[config]")
{
    const std::string text = kBase + R"(
[jumps.atoms]
locations = -0.1, 0.15
intensities = 1, 0.5

[jumps.double_exponential]
lambda = 3
p = 0.3
eta_up = 9
eta_down = 6

[jumps.tempered_stable]
alpha = 1.5
eta0 = 1
a0 = -1

[jumps.gamma_like]
c_neg = 2
g = 6
c_pos = 1
m = 9

[experiment]
seed = 42
spots = 90, 110
ladder = 0.01, 0.001
)";
    const auto c = parse_config_text(text);
    REQUIRE(c.model.nu.components.size() == 4);
    const auto& a = std::get<Atoms>(c.model.nu.components[0]);
    REQUIRE(a.atoms.size() == 2);
    CHECK(a.atoms[1].location == 0.15);
    CHECK(a.atoms[1].intensity == 0.5);
    CHECK(std::get<DoubleExponential>(c.model.nu.components[1]).eta_down == 6);
    CHECK(std::get<TemperedStableNegative>(c.model.nu.components[2]).alpha == 1.5);
    CHECK(std::get<GammaLike>(c.model.nu.components[3]).m == 9);
    CHECK(c.experiment.seed == 42);
    CHECK(c.experiment.spots == std::vector<double>{90, 110});
    CHECK(c.experiment.ladder == std::vector<double>{0.01, 0.001});
    // the martingale condition is imposed on load
    CHECK(std::abs(martingale_residual(c.model)) < 1e-9);
}

TEST_CASE("schema errors name the key and its line", "[config]")
{
    std::string msg;
    SECTION("missing key")
    {
        std::string text = kBase;
        text.replace(text.find("r = 0.05\n"), 9, "");
        CHECK(error_line(text, &msg) == 1);
        CHECK_THAT(msg, ContainsSubstring("t.ini:1:") && ContainsSubstring("market.r"));
    }
    SECTION("missing section")
    {
        const std::string text = "[market]\nr = 0.05\nstrike = 100\nmaturity = 1\n[grid]\n";
        CHECK(error_line(text, &msg) == 5);
        CHECK_THAT(msg, ContainsSubstring("[model]"));
    }
    SECTION("unknown key")
    {
        CHECK(error_line(kBase + "n_z = 3\n", &msg) == 11);
        CHECK_THAT(msg, ContainsSubstring("grid.n_z"));
    }
    SECTION("unknown section")
    {
        CHECK(error_line(kBase + "[jumps.cauchy]\nscale = 1\n", &msg) == 11);
        CHECK_THAT(msg, ContainsSubstring("jumps.cauchy"));
    }
    SECTION("malformed number")
    {
        std::string text = kBase;
        text.replace(text.find("sigma = 0.2"), 11, "sigma = 0.2x");
        CHECK(error_line(text, &msg) == 7);
        CHECK_THAT(msg, ContainsSubstring("model.sigma"));
    }
    SECTION("malformed integer")
    {
        std::string text = kBase;
        text.replace(text.find("n_x = 2000"), 10, "n_x = 2e3");
        CHECK(error_line(text, &msg) == 10);
    }
    SECTION("atom lists of different length")
    {
        CHECK(error_line(kBase + "[jumps.atoms]\nlocations = -0.1, 0.2\nintensities = 1\n", &msg) == 13);
    }
    SECTION("theta_min outside (0, T)")
    {
        CHECK(error_line(kBase + "theta_min = 2\n", &msg) == 11);
        CHECK_THAT(msg, ContainsSubstring("theta_min"));
    }
    SECTION("invalid model parameters are reported at [model]")
    {
        std::string text = kBase;
        text.replace(text.find("sigma = 0.2"), 11, "sigma = -1");
        CHECK(error_line(text, &msg) == 6);
    }
    SECTION("ini syntax")
    {
        CHECK(error_line("[market]\nthis line has no equals sign\n") == 2);
    }
    SECTION("unreadable file")
    {
        CHECK_THROWS_AS(load_config("/nonexistent/dir/x.ini"), SchemaError);
    }
}

TEST_CASE("zero rate needs the explicit flag", "[config]")
{
    std::string text = kBase;
    text.replace(text.find("r = 0.05"), 8, "r = 0");
    CHECK(error_line(text) == 6);
    text.replace(text.find("sigma = 0.2"), 11, "sigma = 0.2\nallow_zero_rate = true");
    CHECK(parse_config_text(text).model.market.r == 0.0);
}

TEST_CASE("post-parse schema errors anchor at the key", "[config]")
{
    const auto c = parse_config_text(kBase + "horizon = 0.5\n", "t.ini");
    try {
        schema_fail(c, "grid.horizon", "bad");
        FAIL("no throw");
    } catch (const SchemaError& e) {
        CHECK(e.line == 11);
    }
    try {
        schema_fail(c, "grid.theta_min", "bad");
        FAIL("no throw");
    } catch (const SchemaError& e) {
        CHECK(e.line == 9); // section header when the key is absent
    }
}

TEST_CASE("floats are written with 17 significant digits", "[config]")
{
    for (double v : {0.1, 1.0 / 3.0, 2.5e-6, -123456.789, 1e300, 5e-324}) {
        const std::string s = format_double(v);
        CHECK(std::strtod(s.c_str(), nullptr) == v);
    }
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
}

TEST_CASE("surface subsampling keeps the ends", "[config]")
{
    const auto idx = detail::spread(401, 41);
    CHECK(idx.front() == 0);
    CHECK(idx.back() == 400);
    CHECK(idx.size() == 41);
    CHECK(detail::spread(5, 100).size() == 5);
    const auto odd = detail::spread(10, 4);
    CHECK(odd.back() == 9);
}
