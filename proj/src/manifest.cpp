#include "sinkwatch/manifest.hpp"

#include <chrono>
#include <ctime>

#include <fmt/format.h>

#include "sinkwatch/rng.hpp"

namespace sinkwatch {

std::uint64_t fnv1a64(std::string_view bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

nlohmann::json RunManifest::to_json() const
{
    return {
        {"subcommand", subcommand}, {"config", config},   {"seeds", seeds},         {"version", version},
        {"calibration", calibration}, {"outputs", outputs}, {"timestamp", timestamp},
    };
}

std::string RunManifest::hash() const
{
    auto j = to_json();
    j.erase("timestamp");
    return fmt::format("{:016x}", fnv1a64(j.dump()));
}

std::string RunManifest::csv_comment() const
{
    return fmt::format("# sinkwatch {} {} manifest={}", version, subcommand, hash());
}

nlohmann::json default_calibration()
{
    return {
        {"rope_time_dim", 44},
        {"riflex_index_base", 1},
        {"sink_reference", "nearest"},
        {"rng", std::string(philox::kName)},
        {"collapse_metric", "trailing-p90-w32"},
        {"motion_proxy", "median"},
    };
}

std::string utc_timestamp()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace sinkwatch
