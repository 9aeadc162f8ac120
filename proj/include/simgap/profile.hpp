#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace simgap {

struct NeighborHit {
    std::uint64_t neighbor_id = 0;
    float similarity = 0.0f;
};

// Total order used everywhere a "closest" is selected: higher similarity
// first, ties to the smaller id. Ids are unique, so the order is strict and
// any k-best selection has exactly one answer.
inline bool hit_better(const NeighborHit& a, const NeighborHit& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.neighbor_id < b.neighbor_id;
}

// Per-query top-k lists, rank-major: hits[q*k + r] is rank r for query q.
struct NearestNeighborProfile {
    std::uint32_t k = 1;
    std::vector<std::uint64_t> query_ids;
    std::vector<NeighborHit> hits;

    std::span<const NeighborHit> of(std::size_t query_index) const {
        return {hits.data() + query_index * k, k};
    }
    float top1(std::size_t query_index) const {
        return hits[query_index * static_cast<std::size_t>(k)].similarity;
    }
};

// CSV: header `query_id,rank,neighbor_id,similarity`, rank 1-based,
// similarity printed with 9 significant digits (round-trips binary32).
void write_profile_csv(std::ostream& out, const NearestNeighborProfile& profile);
void write_profile_csv(const std::filesystem::path& path,
                       const NearestNeighborProfile& profile);
std::string profile_csv_string(const NearestNeighborProfile& profile);

NearestNeighborProfile read_profile_csv(const std::filesystem::path& path);

} // namespace simgap
