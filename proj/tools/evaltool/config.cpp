#include "config.hpp"

#include <fstream>
#include <sstream>

#include "dre/errors.hpp"
#include "dre/util.hpp"

namespace evaltool {

using dre::ConfigError;

Config Config::load(const std::optional<std::filesystem::path>& file,
                    const std::vector<std::string>& overrides) {
    Config config;

    if (file) {
        std::ifstream in(*file);
        if (!in) throw ConfigError("cannot open config file: " + file->string());
        std::string line;
        std::string section;
        size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            std::string trimmed = dre::util::trim(line);
            if (trimmed.empty() || trimmed[0] == '#' || trimmed[0] == ';') continue;
            if (trimmed.front() == '[') {
                if (trimmed.back() != ']')
                    throw ConfigError("config line " + std::to_string(line_no) +
                                      ": unterminated section header");
                section = dre::util::trim(trimmed.substr(1, trimmed.size() - 2));
                continue;
            }
            auto eq = trimmed.find('=');
            if (eq == std::string::npos)
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": expected key = value");
            std::string key = dre::util::trim(trimmed.substr(0, eq));
            std::string value = dre::util::trim(trimmed.substr(eq + 1));
            if (key.empty())
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": empty key");
            config.values_[section.empty() ? key : section + "." + key] = value;
        }
    }

    for (const auto& override_spec : overrides) {
        auto eq = override_spec.find('=');
        if (eq == std::string::npos)
            throw ConfigError("override must look like section.key=value: " +
                              override_spec);
        std::string key = dre::util::trim(override_spec.substr(0, eq));
        config.values_[key] = dre::util::trim(override_spec.substr(eq + 1));
    }
    return config;
}

bool Config::has(const std::string& key) const {
    auto it = values_.find(key);
    return it != values_.end() && !it->second.empty();
}

std::string Config::get_string(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end() || it->second.empty())
        throw ConfigError("missing required config value \"" + key + "\"");
    return it->second;
}

std::string Config::get_string_or(const std::string& key,
                                  const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() || it->second.empty() ? fallback : it->second;
}

double Config::get_double_or(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    try {
        return std::stod(values_.at(key));
    } catch (const std::exception&) {
        throw ConfigError("config value \"" + key + "\" is not a number: " +
                          values_.at(key));
    }
}

std::int64_t Config::get_int_or(const std::string& key,
                                std::int64_t fallback) const {
    if (!has(key)) return fallback;
    try {
        return std::stoll(values_.at(key));
    } catch (const std::exception&) {
        throw ConfigError("config value \"" + key + "\" is not an integer: " +
                          values_.at(key));
    }
}

bool Config::get_bool_or(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    std::string value = dre::util::lowercase(values_.at(key));
    if (value == "true" || value == "1" || value == "yes" || value == "on")
        return true;
    if (value == "false" || value == "0" || value == "no" || value == "off")
        return false;
    throw ConfigError("config value \"" + key + "\" is not a boolean: " + value);
}

std::string Config::canonical_string() const {
    std::ostringstream out;
    for (const auto& [key, value] : values_) out << key << '=' << value << '\n';
    return out.str();
}

std::string Config::hash() const {
    return dre::util::sha256_hex(canonical_string());
}

}  // namespace evaltool
