#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "simgap/embedding_set.hpp"
#include "simgap/rng.hpp"

namespace simgap::test {

// Unique scratch directory under the working directory, removed on scope
// exit.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<unsigned> counter{0};
        path_ = std::filesystem::current_path() /
                ("simgap_test_" + tag + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const {
        return path_ / name;
    }

private:
    std::filesystem::path path_;
};

inline EmbeddingSet make_set(std::uint32_t dim,
                             const std::vector<std::vector<float>>& rows,
                             const std::vector<std::uint64_t>& ids) {
    EmbeddingSet set;
    set.dim = dim;
    set.ids = ids;
    for (const auto& row : rows)
        set.vectors.insert(set.vectors.end(), row.begin(), row.end());
    return set;
}

inline EmbeddingSet random_unit_set(std::uint64_t seed, std::size_t count,
                                    std::uint32_t dim,
                                    std::uint64_t first_id = 0) {
    SplitMix64 rng(seed);
    EmbeddingSet set;
    set.dim = dim;
    set.vectors.reserve(count * dim);
    set.ids.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        for (std::uint32_t j = 0; j < dim; ++j)
            set.vectors.push_back(static_cast<float>(rng.gaussian()));
        set.ids.push_back(first_id + i);
    }
    return normalize(std::move(set));
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

// Resolves the CLI binary: SIMGAP_CLI from ctest, then build-tree fallbacks.
inline std::string cli_path() {
    if (const char* env = std::getenv("SIMGAP_CLI")) return env;
    for (const char* candidate :
         {"./tools/simgap", "../tools/simgap", "./simgap"}) {
        if (std::filesystem::exists(candidate))
            return std::filesystem::absolute(candidate).string();
    }
    return {};
}

struct CliResult {
    int exit_code = -1;
    std::string output;  // stdout
};

inline CliResult run_cli(const std::string& args,
                         const std::filesystem::path& scratch) {
    const std::filesystem::path out_file = scratch / "cli_stdout.txt";
    const std::filesystem::path err_file = scratch / "cli_stderr.txt";
    const std::string command = "\"" + cli_path() + "\" " + args + " > \"" +
                                out_file.string() + "\" 2> \"" +
                                err_file.string() + "\"";
    const int status = std::system(command.c_str());
    CliResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.output = read_file(out_file);
    return result;
}

} // namespace simgap::test
