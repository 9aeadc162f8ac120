#include "simgap/profile.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "simgap/errors.hpp"

namespace simgap {

void write_profile_csv(std::ostream& out, const NearestNeighborProfile& profile) {
    out << "query_id,rank,neighbor_id,similarity\n";
    char line[128];
    for (std::size_t q = 0; q < profile.query_ids.size(); ++q) {
        for (std::uint32_t r = 0; r < profile.k; ++r) {
            const NeighborHit& hit = profile.hits[q * profile.k + r];
            std::snprintf(line, sizeof(line),
                          "%" PRIu64 ",%u,%" PRIu64 ",%.9g\n",
                          profile.query_ids[q], r + 1, hit.neighbor_id,
                          static_cast<double>(hit.similarity));
            out << line;
        }
    }
}

void write_profile_csv(const std::filesystem::path& path,
                       const NearestNeighborProfile& profile) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.is_open(), Errc::io_error, "cannot create " + path.string());
    write_profile_csv(out, profile);
    require(out.good(), Errc::io_error, "write failed: " + path.string());
}

std::string profile_csv_string(const NearestNeighborProfile& profile) {
    std::ostringstream out;
    write_profile_csv(out, profile);
    return out.str();
}

NearestNeighborProfile read_profile_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.is_open(), Errc::io_error, "cannot open " + path.string());
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), Errc::parse_error,
            path.string() + ": empty file");
    require(line == "query_id,rank,neighbor_id,similarity", Errc::parse_error,
            path.string() + ": unexpected header '" + line + "'");

    NearestNeighborProfile profile;
    profile.k = 0;
    std::uint64_t last_query = 0;
    bool have_query = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::uint64_t query_id = 0, neighbor_id = 0;
        unsigned rank = 0;
        double similarity = 0.0;
        const int matched = std::sscanf(line.c_str(),
                                        "%" SCNu64 ",%u,%" SCNu64 ",%lf",
                                        &query_id, &rank, &neighbor_id,
                                        &similarity);
        require(matched == 4, Errc::parse_error,
                path.string() + ": bad row '" + line + "'");
        if (!have_query || query_id != last_query) {
            require(rank == 1, Errc::parse_error,
                    path.string() + ": ranks of query " +
                        std::to_string(query_id) + " do not start at 1");
            profile.query_ids.push_back(query_id);
            last_query = query_id;
            have_query = true;
        }
        profile.hits.push_back(
            {neighbor_id, static_cast<float>(similarity)});
    }
    require(!profile.query_ids.empty(), Errc::empty_input,
            path.string() + ": no rows");
    require(profile.hits.size() % profile.query_ids.size() == 0,
            Errc::parse_error, path.string() + ": ragged rank lists");
    profile.k = static_cast<std::uint32_t>(profile.hits.size() /
                                           profile.query_ids.size());
    return profile;
}

} // namespace simgap
