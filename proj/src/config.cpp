#include "simgap/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "simgap/errors.hpp"

namespace simgap {

std::string canonical_config(ConfigEntries entries) {
    std::sort(entries.begin(), entries.end());
    std::string out;
    for (const auto& [key, value] : entries) {
        out += key;
        out += '=';
        out += value;
        out += '\n';
    }
    return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::string config_hash(const ConfigEntries& entries) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(
                      fnv1a64(canonical_config(entries))));
    return buf;
}

ConfigEntries parse_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.is_open(), Errc::io_error, "cannot open " + path.string());
    ConfigEntries entries;
    std::string line;
    std::size_t line_no = 0;
    auto trim = [](std::string s) {
        const auto begin = s.find_first_not_of(" \t\r");
        const auto end = s.find_last_not_of(" \t\r");
        if (begin == std::string::npos) return std::string();
        return s.substr(begin, end - begin + 1);
    };
    while (std::getline(in, line)) {
        ++line_no;
        const auto comment = line.find('#');
        if (comment != std::string::npos) line.erase(comment);
        const std::string trimmed = trim(line);
        if (trimmed.empty()) continue;
        const auto eq = trimmed.find('=');
        require(eq != std::string::npos, Errc::parse_error,
                path.string() + ":" + std::to_string(line_no) +
                    ": expected key = value");
        const std::string key = trim(trimmed.substr(0, eq));
        const std::string value = trim(trimmed.substr(eq + 1));
        require(!key.empty(), Errc::parse_error,
                path.string() + ":" + std::to_string(line_no) + ": empty key");
        entries.emplace_back(key, value);
    }
    return entries;
}

} // namespace simgap
