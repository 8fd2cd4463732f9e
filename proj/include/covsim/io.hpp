#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace covsim {

/// Shortest round-trip decimal rendering (std::to_chars), so repeated runs
/// emit byte-identical files.
std::string format_double(double x);

/// Write-temp-then-rename so readers never observe partial files.
void atomic_write(const std::filesystem::path& path, std::string_view content);

std::string iso8601_utc_now();

/// Reproducibility record written next to every CLI output.
struct RunManifest {
    std::string tool;
    std::string version;
    std::string subcommand;
    nlohmann::json config_echo;
    std::uint64_t seed = 0;
    std::vector<std::uint64_t> replicate_seeds;
    std::vector<std::string> outputs;
    std::string started_at;
    std::string finished_at;

    nlohmann::json to_json() const;
};

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);

}  // namespace covsim
