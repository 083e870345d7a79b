#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace sinkwatch {

std::uint64_t fnv1a64(std::string_view bytes);

struct RunManifest {
    std::string subcommand;
    nlohmann::json config = nlohmann::json::object();
    std::vector<std::uint64_t> seeds;
    std::string version = SINKWATCH_VERSION;
    nlohmann::json calibration = nlohmann::json::object();
    std::vector<std::string> outputs;
    std::string timestamp; // excluded from the hash

    [[nodiscard]] nlohmann::json to_json() const;
    // 16 hex digits of FNV-1a over the canonical (sorted-key) JSON without the timestamp.
    [[nodiscard]] std::string hash() const;
    [[nodiscard]] std::string csv_comment() const;
};

// Identifiers of the calibration choices baked into every run.
nlohmann::json default_calibration();

std::string utc_timestamp();

} // namespace sinkwatch
