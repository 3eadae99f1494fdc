#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace foliated {

/// git-describe string baked in at configure time.
std::string version_string();

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(std::filesystem::path const& path);

struct ManifestEntry
{
    std::string file; //!< relative to the output directory
    std::string sha256;
};

struct RunManifest
{
    std::string subcommand;
    std::string version;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    std::string started_utc;
    std::string finished_utc;
    std::string config_text;
    std::string effective_config_json; //!< serialized JSON object
    std::vector<std::string> defaulted_keys;
    std::vector<ManifestEntry> outputs;
    bool failed = false;
    std::string error;
};

inline constexpr char const* manifest_file_name = "manifest.json";
inline constexpr char const* failure_marker_name = "FAILED";

std::string utc_timestamp();

/// Hash `files` (relative names inside `dir`) into the manifest and write manifest.json.
void write_manifest(std::filesystem::path const& dir, RunManifest manifest,
                    std::vector<std::string> const& files);

/// Files whose current hash differs from the manifest (missing files included).
std::vector<std::string> verify_manifest(std::filesystem::path const& dir);

}  // namespace foliated
