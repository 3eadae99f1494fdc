#pragma once

#include "foliated/config.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace foliated {

std::vector<std::string> subcommand_names();

struct RunOptions
{
    std::string subcommand;
    std::optional<std::filesystem::path> config_path;
    std::optional<std::uint64_t> seed;
    std::filesystem::path out_dir = "out";
    std::optional<std::size_t> threads;
    std::optional<std::size_t> paths;
    std::optional<std::vector<double>> eps;
};

/// Config file (or defaults) with command-line overrides applied.
RunConfig effective_config(RunOptions const& options);

/*!
 * Execute one subcommand, writing its CSV/JSON outputs and manifest.json into
 * options.out_dir. On failure the manifest is marked FAILED, a FAILED marker
 * file holds the message, and the exit status is nonzero.
 */
int run(RunOptions const& options, std::ostream& out, std::ostream& err);

}  // namespace foliated
