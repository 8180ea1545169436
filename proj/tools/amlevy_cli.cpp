// Command-line front end: amlevy_cli <command> --config file.ini [--out dir] [--seed n] [--threads n]
// Exit status: 0 all assertions pass, 1 some assertion fails, 2 schema or usage error,
// 3 numerical failure.

#include <CLI11.hpp>
#include <iostream>

#include <amlevy/harness.hpp>

namespace {

using amlevy::ExperimentConfig;
using amlevy::RunOptions;
using amlevy::RunResult;

struct Args {
    std::string config;
    std::string out = "out";
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
};

int run(const std::string& command, const Args& a)
{
    ExperimentConfig cfg;
    try {
        cfg = amlevy::load_config(a.config);
    } catch (const amlevy::SchemaError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }
    if (a.seed)
        cfg.experiment.seed = *a.seed;
    RunOptions ro;
    ro.out_dir = a.out;
    ro.threads = std::max(1u, a.threads);
    std::error_code ec;
    std::filesystem::create_directories(ro.out_dir, ec);
    if (ec) {
        std::cerr << "cannot create output directory " << a.out << ": " << ec.message() << "\n";
        return 2;
    }

    RunResult r;
    try {
        if (command == "price")
            r = amlevy::run_price(cfg, ro);
        else if (command == "boundary")
            r = amlevy::run_boundary(cfg, ro);
        else if (command == "asympt")
            r = amlevy::run_asympt(cfg, ro);
        else if (command == "simcheck")
            r = amlevy::run_simcheck(cfg, ro);
        else
            r = amlevy::run_verify(cfg, ro);
    } catch (const amlevy::SchemaError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure in " << command << " (" << cfg.path << "): " << e.what() << "\n";
        return 3;
    }
    amlevy::write_summary(ro.out_dir, command, cfg, r.assertions, r.files);

    std::size_t failed = 0;
    for (const auto& x : r.assertions)
        if (!x.pass) {
            ++failed;
            std::cerr << "FAIL " << x.name << ": measured " << amlevy::format_double(x.measured) << " target "
                      << amlevy::format_double(x.target) << " tol " << amlevy::format_double(x.tolerance) << "\n";
        }
    std::cout << command << ": " << r.assertions.size() - failed << "/" << r.assertions.size()
              << " assertions pass\n";
    return failed ? 1 : 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"American puts in exponential Levy models"};
    app.require_subcommand(1);
    Args args;
    std::string chosen;
    for (const char* name : {"price", "boundary", "asympt", "simcheck", "verify"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", args.config, "INI experiment file")->required();
        sub->add_option("--out", args.out, "output directory");
        sub->add_option("--seed", args.seed, "overrides experiment.seed");
        sub->add_option("--threads", args.threads, "worker threads for simulation");
        sub->callback([&chosen, name] { chosen = name; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    return run(chosen, args);
}
