#pragma once

#include "foliated/rate.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace foliated {

struct SimulateSettings
{
    double eps = 0.1;
    std::size_t paths = 4;
};

struct EstimateQSettings
{
    std::vector<double> v_grid{-1.0, -0.5, 0.0, 0.5, 1.0};
};

struct DecomposeSettings
{
    double eps = 0.1;
    std::size_t realizations = 100;
};

struct BihariSettings
{
    std::vector<double> p_values{2.0, 3.0, 4.0};
    std::vector<double> eps_T_values{0.01, 0.05, 0.1};
    double c = 1.0;
    double T = 1.0;
    std::size_t m = 1000;
    double smallness = 0.1;
};

/// Everything a config file can set, plus which keys were left at their defaults.
struct RunConfig
{
    ExperimentConfig experiment;
    SimulateSettings simulate;
    EstimateQSettings estimate_q;
    DecomposeSettings decompose;
    BihariSettings bihari;
    std::vector<std::string> defaulted_keys; //!< "section.key"
    std::string source_text;
};

/*!
 * Strict "[section]" / "key = value" parser. '#' starts a comment anywhere, ';' only at line start.
 * Unknown sections or keys, duplicates and malformed values raise ConfigError
 * with the offending line and key.
 */
RunConfig parse_config(std::string const& text);
RunConfig load_config(std::filesystem::path const& path);

/// Config with every key at its default.
RunConfig default_config();

/// Comma-separated decimal list.
std::vector<double> parse_double_list(std::string const& text);

}  // namespace foliated
