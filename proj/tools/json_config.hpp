#pragma once

#include <istream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

namespace sinkwatch::cli {

// CLI11 config reader for JSON files. Top-level scalars and arrays apply to the
// active subcommand; an object keyed by that subcommand's name applies too, so
// one file can carry sections for several subcommands.
class JsonConfig : public CLI::Config {
public:
    explicit JsonConfig(std::string active) : active_(std::move(active)) {}

    std::string to_config(const CLI::App*, bool, bool, std::string) const override
    {
        return "{}\n";
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override
    {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(input);
        } catch (const nlohmann::json::parse_error& e) {
            throw CLI::ConversionError(std::string("config file: ") + e.what());
        }
        if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
        std::vector<CLI::ConfigItem> items;
        for (const auto& [key, value] : j.items()) {
            if (value.is_object()) {
                if (key != active_) continue;
                for (const auto& [k, v] : value.items()) items.push_back(item(k, v));
            } else {
                items.push_back(item(key, value));
            }
        }
        return items;
    }

private:
    CLI::ConfigItem item(const std::string& key, const nlohmann::json& v) const
    {
        CLI::ConfigItem it;
        if (!active_.empty()) it.parents = {active_};
        it.name = key;
        if (v.is_array()) {
            for (const auto& e : v) it.inputs.push_back(scalar(key, e));
        } else {
            it.inputs.push_back(scalar(key, v));
        }
        return it;
    }

    static std::string scalar(const std::string& key, const nlohmann::json& v)
    {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
        if (v.is_number()) return v.dump();
        throw CLI::ConversionError("config key '" + key + "' must be a scalar or a list of scalars");
    }

    std::string active_;
};

} // namespace sinkwatch::cli
