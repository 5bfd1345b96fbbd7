#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace dre {

inline constexpr const char* kToolVersion = "0.1.0";

// Reproducibility record written next to every command's outputs: enough to
// rerun the command bit-identically with the mock/toy backends.
struct RunManifest {
    std::string command;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string template_hashes;  // JSON map name -> sha256
    std::string checkpoint_hash;  // sha256 of the checkpoint file, if any
    std::string tool_version = kToolVersion;
};

void write_manifest(const RunManifest& manifest,
                    const std::filesystem::path& path);

// sha256 of a file's bytes; empty string when the file does not exist.
std::string file_hash(const std::filesystem::path& path);

}  // namespace dre
