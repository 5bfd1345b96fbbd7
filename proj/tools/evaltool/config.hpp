#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace evaltool {

// Flat "section.key" -> value view over an INI-style config file plus
// command-line overrides (overrides win). Typed getters throw ConfigError
// naming the offending key.
class Config {
public:
    static Config load(const std::optional<std::filesystem::path>& file,
                       const std::vector<std::string>& overrides);

    bool has(const std::string& key) const;

    std::string get_string(const std::string& key) const;  // throws if absent
    std::string get_string_or(const std::string& key,
                              const std::string& fallback) const;
    double get_double_or(const std::string& key, double fallback) const;
    std::int64_t get_int_or(const std::string& key, std::int64_t fallback) const;
    bool get_bool_or(const std::string& key, bool fallback) const;

    // Sorted canonical "key=value" lines; hashed into run manifests.
    std::string canonical_string() const;
    std::string hash() const;

private:
    std::map<std::string, std::string> values_;
};

}  // namespace evaltool
