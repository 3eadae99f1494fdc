#include "foliated/manifest.hpp"

#include "foliated/errors.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <array>
#include <chrono>
#include <ctime>
#include <fstream>
#include <memory>

#ifndef FOLIATED_VERSION
#define FOLIATED_VERSION "unknown"
#endif

namespace foliated {

std::string version_string()
{
    return FOLIATED_VERSION;
}

std::string sha256_file(std::filesystem::path const& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot read " + path.string() + " for hashing");

    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                                &EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 initialization failed");
    std::array<char, 1 << 16> buffer;
    while (in)
    {
        in.read(buffer.data(), buffer.size());
        if (in.gcount() > 0)
            EVP_DigestUpdate(ctx.get(), buffer.data(), static_cast<std::size_t>(in.gcount()));
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest;
    unsigned int length = 0;
    EVP_DigestFinal_ex(ctx.get(), digest.data(), &length);

    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < length; ++i)
    {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

std::string utc_timestamp()
{
    auto const now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buffer[32];
    std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buffer;
}

void write_manifest(std::filesystem::path const& dir, RunManifest manifest,
                    std::vector<std::string> const& files)
{
    manifest.outputs.clear();
    for (auto const& f : files)
        if (std::filesystem::exists(dir / f))
            manifest.outputs.push_back({f, sha256_file(dir / f)});

    nlohmann::ordered_json j;
    j["subcommand"] = manifest.subcommand;
    j["version"] = manifest.version;
    j["seed"] = manifest.seed;
    j["threads"] = manifest.threads;
    j["started_utc"] = manifest.started_utc;
    j["finished_utc"] = manifest.finished_utc;
    j["status"] = manifest.failed ? "FAILED" : "ok";
    if (manifest.failed)
        j["error"] = manifest.error;
    j["config_text"] = manifest.config_text;
    j["effective_config"] = manifest.effective_config_json.empty()
                                ? nlohmann::ordered_json::object()
                                : nlohmann::ordered_json::parse(manifest.effective_config_json);
    j["defaulted_keys"] = manifest.defaulted_keys;
    auto& outputs = j["outputs"] = nlohmann::ordered_json::array();
    for (auto const& e : manifest.outputs)
        outputs.push_back({{"file", e.file}, {"sha256", e.sha256}});

    std::ofstream out(dir / manifest_file_name, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error("cannot write manifest in " + dir.string());
    out << j.dump(2) << '\n';
}

std::vector<std::string> verify_manifest(std::filesystem::path const& dir)
{
    std::ifstream in(dir / manifest_file_name, std::ios::binary);
    if (!in)
        throw Error("no manifest in " + dir.string());
    auto const j = nlohmann::json::parse(in);
    std::vector<std::string> mismatched;
    for (auto const& e : j.at("outputs"))
    {
        std::string const file = e.at("file").get<std::string>();
        std::filesystem::path const path = dir / file;
        if (!std::filesystem::exists(path) || sha256_file(path) != e.at("sha256").get<std::string>())
            mismatched.push_back(file);
    }
    return mismatched;
}

}  // namespace foliated
