#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace dre::util {

// --- text helpers ---------------------------------------------------------

std::string trim(std::string_view s);
std::string lowercase(std::string_view s);

// Lowercased alphanumeric token stream; everything else is a separator.
std::vector<std::string> tokenize(std::string_view text);

// Replaces every occurrence of `placeholder` in `text` with `value`.
std::string replace_all(std::string text, std::string_view placeholder,
                        std::string_view value);

// --- hashing --------------------------------------------------------------

// FNV-1a, stable across platforms and runs (std::hash gives no such promise).
std::uint64_t fnv1a64(std::string_view data);

// Hex-encoded SHA-256 digest (OpenSSL-backed); used for cache keys and
// run-manifest content hashes.
std::string sha256_hex(std::string_view data);

// --- number formatting ----------------------------------------------------

// Shortest decimal string that round-trips to the same double. Keeps
// metrics/score files byte-stable across reruns.
std::string format_double(double value);

// Fixed-precision formatting for prompt interpolation.
std::string format_fixed(double value, int decimals);

// --- filesystem -----------------------------------------------------------

std::string read_file(const std::filesystem::path& path);

// Write-to-temp then rename, so concurrent writers never expose a torn file.
void atomic_write_file(const std::filesystem::path& path,
                       std::string_view content);

std::vector<std::string> read_lines(const std::filesystem::path& path);

}  // namespace dre::util
