#include "dre/manifest.hpp"

#include <nlohmann/json.hpp>

#include "dre/util.hpp"

namespace dre {

void write_manifest(const RunManifest& manifest,
                    const std::filesystem::path& path) {
    nlohmann::json j;
    j["command"] = manifest.command;
    j["config_hash"] = manifest.config_hash;
    j["seed"] = manifest.seed;
    j["template_hashes"] = nlohmann::json::parse(
        manifest.template_hashes.empty() ? "{}" : manifest.template_hashes);
    j["checkpoint_hash"] = manifest.checkpoint_hash;
    j["tool_version"] = manifest.tool_version;
    util::atomic_write_file(path, j.dump(2) + "\n");
}

std::string file_hash(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) return "";
    return util::sha256_hex(util::read_file(path));
}

}  // namespace dre
