#ifndef AMLEVY_CONFIG_HPP
#define AMLEVY_CONFIG_HPP

// INI experiment configuration. Parsing is boost::property_tree; a second pass over
// the raw lines records where each section and key sits, for error messages.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "grid.hpp"
#include "levy_model.hpp"

namespace amlevy {

// Schema violation anchored at a line of the config file (0 when the file is unreadable).
struct SchemaError : std::runtime_error {
    std::string path;
    int line;
    SchemaError(std::string p, int l, const std::string& msg)
        : std::runtime_error(p + ":" + std::to_string(l) + ": " + msg), path(std::move(p)), line(l)
    {
    }
};

struct ExperimentSettings {
    std::uint64_t seed = 1;
    std::vector<double> spots;               // empty: the strike
    double fit_lo = 1e-3, fit_hi = 5e-3;     // fractions of T
    double exponent_tol = 0.1;
    double constant_tol = 0.3;               // relative
    std::vector<double> ladder{1e-2, 1e-3, 1e-4}; // fractions of T
    std::size_t sim_paths = 100000;
    std::vector<double> sim_times{1e-2, 1e-3};
    std::size_t eep_points = 0;
    std::size_t eep_paths = 20000;
    std::size_t surface_slices = 41; // rows of surface.csv: slices x nodes
    std::size_t surface_nodes = 201;
};

struct ExperimentConfig {
    std::string path;
    LevyModel model;
    GridSpec grid;
    ExperimentSettings experiment;
    std::map<std::string, int> lines; // "section.key" and "[section]" to line numbers
};

namespace detail {

class IniLines {
public:
    explicit IniLines(const std::string& text)
    {
        std::istringstream in(text);
        std::string raw, section;
        int n = 0;
        while (std::getline(in, raw)) {
            ++n;
            const std::string s = trim(raw);
            last_ = n;
            if (s.empty() || s[0] == ';' || s[0] == '#')
                continue;
            if (s.front() == '[' && s.back() == ']') {
                section = trim(s.substr(1, s.size() - 2));
                sections_.emplace(section, n);
            } else if (auto eq = s.find('='); eq != std::string::npos) {
                keys_.emplace(section + "\n" + trim(s.substr(0, eq)), n);
            }
        }
    }
    int section(const std::string& s) const
    {
        auto it = sections_.find(s);
        return it == sections_.end() ? last_ : it->second;
    }
    std::map<std::string, int> index() const
    {
        std::map<std::string, int> out;
        for (const auto& [s, n] : sections_)
            out["[" + s + "]"] = n;
        for (const auto& [k, n] : keys_)
            out[k.substr(0, k.find('\n')) + "." + k.substr(k.find('\n') + 1)] = n;
        return out;
    }
    int key(const std::string& s, const std::string& k) const
    {
        auto it = keys_.find(s + "\n" + k);
        return it == keys_.end() ? section(s) : it->second;
    }
    static std::string trim(const std::string& s)
    {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos)
            return {};
        return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
    }

private:
    std::map<std::string, int> sections_, keys_;
    int last_ = 0;
};

class Reader {
public:
    Reader(std::string path, const boost::property_tree::ptree& tree, const IniLines& lines)
        : path_(std::move(path)), tree_(tree), lines_(lines)
    {
    }

    bool has_section(const std::string& s) const { return tree_.find(s) != tree_.not_found(); }

    [[noreturn]] void fail(const std::string& s, const std::string& k, const std::string& msg) const
    {
        throw SchemaError(path_, k.empty() ? lines_.section(s) : lines_.key(s, k), msg);
    }

    std::optional<std::string> raw(const std::string& s, const std::string& k) const
    {
        used_.insert(s + "\n" + k);
        auto sec = tree_.find(s);
        if (sec == tree_.not_found())
            return std::nullopt;
        auto v = sec->second.find(k);
        if (v == sec->second.not_found())
            return std::nullopt;
        return IniLines::trim(v->second.data());
    }

    void require_section(const std::string& s) const
    {
        if (!has_section(s))
            fail(s, "", "missing section [" + s + "]");
    }

    double number(const std::string& s, const std::string& k, std::optional<double> fallback = {}) const
    {
        auto v = raw(s, k);
        if (!v) {
            if (fallback)
                return *fallback;
            fail(s, "", "missing key " + s + "." + k);
        }
        return parse_double(s, k, *v);
    }

    std::vector<double> list(const std::string& s, const std::string& k,
                             std::optional<std::vector<double>> fallback = {}) const
    {
        auto v = raw(s, k);
        if (!v) {
            if (fallback)
                return *fallback;
            fail(s, "", "missing key " + s + "." + k);
        }
        std::vector<double> out;
        std::stringstream ss(*v);
        std::string item;
        while (std::getline(ss, item, ','))
            out.push_back(parse_double(s, k, IniLines::trim(item)));
        if (out.empty())
            fail(s, k, s + "." + k + " is an empty list");
        return out;
    }

    std::uint64_t count(const std::string& s, const std::string& k, std::uint64_t fallback) const
    {
        auto v = raw(s, k);
        if (!v)
            return fallback;
        std::uint64_t out = 0;
        auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
        if (ec != std::errc() || p != v->data() + v->size())
            fail(s, k, s + "." + k + " is not a nonnegative integer: '" + *v + "'");
        return out;
    }

    bool flag(const std::string& s, const std::string& k, bool fallback) const
    {
        auto v = raw(s, k);
        if (!v)
            return fallback;
        if (*v == "true" || *v == "1")
            return true;
        if (*v == "false" || *v == "0")
            return false;
        fail(s, k, s + "." + k + " is not a boolean: '" + *v + "'");
    }

    // Unknown sections and keys are schema errors.
    void reject_unused(const std::set<std::string>& sections) const
    {
        for (const auto& [sec, body] : tree_) {
            if (!sections.count(sec))
                fail(sec, "", "unknown section [" + sec + "]");
            for (const auto& kv : body)
                if (!used_.count(sec + "\n" + kv.first))
                    fail(sec, kv.first, "unknown key " + sec + "." + kv.first);
        }
    }

private:
    double parse_double(const std::string& s, const std::string& k, const std::string& v) const
    {
        double out = 0.0;
        auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out))
            fail(s, k, s + "." + k + " is not a number: '" + v + "'");
        return out;
    }

    std::string path_;
    const boost::property_tree::ptree& tree_;
    const IniLines& lines_;
    mutable std::set<std::string> used_;
};

} // namespace detail

inline ExperimentConfig parse_config_text(const std::string& text, const std::string& path = "<config>")
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw SchemaError(path, int(e.line()), e.message());
    }
    const detail::IniLines lines(text);
    const detail::Reader rd(path, tree, lines);

    ExperimentConfig cfg;
    cfg.path = path;

    rd.require_section("market");
    MarketParams mk;
    mk.r = rd.number("market", "r");
    mk.delta = rd.number("market", "delta", 0.0);
    mk.strike = rd.number("market", "strike");
    mk.maturity = rd.number("market", "maturity");
    mk.spot = rd.number("market", "spot", mk.strike);

    rd.require_section("model");
    const double sigma = rd.number("model", "sigma");
    ModelOptions mo;
    mo.require_positive_rate = !rd.flag("model", "allow_zero_rate", false);

    JumpMeasure nu;
    if (rd.has_section("jumps.atoms")) {
        const auto loc = rd.list("jumps.atoms", "locations");
        const auto lam = rd.list("jumps.atoms", "intensities");
        if (loc.size() != lam.size())
            rd.fail("jumps.atoms", "intensities", "jumps.atoms.locations and intensities differ in length");
        Atoms a;
        for (std::size_t i = 0; i < loc.size(); ++i)
            a.atoms.push_back({loc[i], lam[i]});
        nu.components.emplace_back(a);
    }
    if (rd.has_section("jumps.double_exponential")) {
        const std::string s = "jumps.double_exponential";
        nu.components.emplace_back(DoubleExponential{rd.number(s, "lambda"), rd.number(s, "p"),
                                                     rd.number(s, "eta_up"), rd.number(s, "eta_down")});
    }
    if (rd.has_section("jumps.tempered_stable")) {
        const std::string s = "jumps.tempered_stable";
        nu.components.emplace_back(
            TemperedStableNegative{rd.number(s, "alpha"), rd.number(s, "eta0"), rd.number(s, "a0"), {}, {}});
    }
    if (rd.has_section("jumps.gamma_like")) {
        const std::string s = "jumps.gamma_like";
        nu.components.emplace_back(
            GammaLike{rd.number(s, "c_neg"), rd.number(s, "g"), rd.number(s, "c_pos"), rd.number(s, "m")});
    }

    rd.require_section("grid");
    GridSpec gs;
    gs.n_x = int(rd.count("grid", "n_x", std::uint64_t(gs.n_x)));
    gs.n_t = int(rd.count("grid", "n_t", std::uint64_t(gs.n_t)));
    gs.theta_min = rd.number("grid", "theta_min", gs.theta_min);
    gs.epsilon = rd.number("grid", "epsilon", gs.epsilon);
    gs.half_width = rd.number("grid", "half_width", gs.half_width);
    gs.horizon = rd.number("grid", "horizon", gs.horizon);
    if (!(gs.theta_min > 0) || !(gs.theta_min < mk.maturity))
        rd.fail("grid", "theta_min", "grid.theta_min must lie in (0, market.maturity)");
    if (gs.horizon != 0 && !(gs.horizon > gs.theta_min && gs.horizon <= mk.maturity))
        rd.fail("grid", "horizon", "grid.horizon must lie in (theta_min, maturity], or be 0");

    auto& ex = cfg.experiment;
    if (rd.has_section("experiment")) {
        const std::string s = "experiment";
        ex.seed = rd.count(s, "seed", ex.seed);
        ex.spots = rd.list(s, "spots", std::vector<double>{});
        ex.fit_lo = rd.number(s, "fit_lo", ex.fit_lo);
        ex.fit_hi = rd.number(s, "fit_hi", ex.fit_hi);
        ex.exponent_tol = rd.number(s, "exponent_tol", ex.exponent_tol);
        ex.constant_tol = rd.number(s, "constant_tol", ex.constant_tol);
        ex.ladder = rd.list(s, "ladder", ex.ladder);
        ex.sim_paths = rd.count(s, "sim_paths", ex.sim_paths);
        ex.sim_times = rd.list(s, "sim_times", ex.sim_times);
        ex.eep_points = rd.count(s, "eep_points", ex.eep_points);
        ex.eep_paths = rd.count(s, "eep_paths", ex.eep_paths);
        ex.surface_slices = rd.count(s, "surface_slices", ex.surface_slices);
        ex.surface_nodes = rd.count(s, "surface_nodes", ex.surface_nodes);
        if (ex.surface_slices < 2 || ex.surface_nodes < 2)
            rd.fail(s, "surface_slices", "experiment.surface_slices and surface_nodes must be at least 2");
        if (!(ex.fit_lo > 0 && ex.fit_lo < ex.fit_hi && ex.fit_hi <= 0.5))
            rd.fail(s, "fit_lo", "need 0 < experiment.fit_lo < experiment.fit_hi <= 0.5");
        for (double v : ex.spots)
            if (!(v > 0))
                rd.fail(s, "spots", "experiment.spots must be positive");
    }
    if (ex.spots.empty())
        ex.spots = {mk.strike};

    rd.reject_unused({"market", "model", "grid", "experiment", "jumps.atoms", "jumps.double_exponential",
                      "jumps.tempered_stable", "jumps.gamma_like"});

    try {
        cfg.model = make_model(sigma, std::move(nu), mk, mo);
    } catch (const std::invalid_argument& e) {
        throw SchemaError(path, lines.section("model"), e.what());
    }
    cfg.grid = gs;
    cfg.lines = lines.index();
    return cfg;
}

// Schema error found after parsing, anchored at `key` ("section.key"), else its section.
[[noreturn]] inline void schema_fail(const ExperimentConfig& cfg, const std::string& key, const std::string& msg)
{
    int line = 0;
    if (auto it = cfg.lines.find(key); it != cfg.lines.end())
        line = it->second;
    else if (auto sec = cfg.lines.find("[" + key.substr(0, key.rfind('.')) + "]"); sec != cfg.lines.end())
        line = sec->second;
    throw SchemaError(cfg.path, line, msg);
}

inline ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw SchemaError(path, 0, "cannot read config file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

} // namespace amlevy

#endif
