#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace simgap {

using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

// Canonical form: entries sorted by key, one `key=value` per line. The hash
// embedded in manifests is FNV-1a 64 over these bytes, printed as 16 hex
// digits, so any consumer can re-derive it.
std::string canonical_config(ConfigEntries entries);

std::uint64_t fnv1a64(std::string_view bytes);

std::string config_hash(const ConfigEntries& entries);

// Flat `key = value` file; '#' starts a comment, blank lines ignored.
ConfigEntries parse_config_file(const std::filesystem::path& path);

} // namespace simgap
