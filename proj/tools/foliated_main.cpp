#include "foliated/config.hpp"
#include "foliated/errors.hpp"
#include "foliated/runner.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv)
{
    foliated::RunOptions options;
    CLI::App app{"Levy-driven Marcus SDEs on foliated spaces: averaging experiments"};
    app.require_subcommand(1, 1);

    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir = "out";
    std::size_t threads = 0;
    std::size_t paths = 0;
    std::string eps;

    for (auto const& name : foliated::subcommand_names())
    {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "INI experiment config")->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "global 64-bit seed (overrides the config)");
        sub->add_option("--out", out_dir, "output directory")->capture_default_str();
        sub->add_option("--threads", threads, "worker threads (overrides FOLIATED_THREADS)")
            ->check(CLI::PositiveNumber);
        sub->add_option("--paths", paths, "number of paths or realizations")
            ->check(CLI::PositiveNumber);
        sub->add_option("--eps", eps, "comma-separated eps list");
    }

    try
    {
        app.parse(argc, argv);
    }
    catch (CLI::ParseError const& e)
    {
        // Usage errors share the runner's status for an unknown subcommand.
        return app.exit(e) == 0 ? 0 : 2;
    }

    auto* sub = app.get_subcommands().front();
    options.subcommand = sub->get_name();
    if (sub->count("--config"))
        options.config_path = config_path;
    if (sub->count("--seed"))
        options.seed = seed;
    options.out_dir = out_dir;
    if (sub->count("--threads"))
        options.threads = threads;
    if (sub->count("--paths"))
        options.paths = paths;
    if (sub->count("--eps"))
    {
        try
        {
            options.eps = foliated::parse_double_list(eps);
        }
        catch (foliated::Error const& e)
        {
            std::cerr << "--eps: " << e.what() << '\n';
            return 2;
        }
    }
    return foliated::run(options, std::cout, std::cerr);
}
