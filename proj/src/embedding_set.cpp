#include "simgap/embedding_set.hpp"

#include <algorithm>
#include <cmath>

#include "simgap/errors.hpp"

namespace simgap {

std::size_t EmbeddingSet::injected_count() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(ids.begin(), ids.end(), is_injected_id));
}

EmbeddingSet normalize(EmbeddingSet set) {
    if (set.normalized) return set;
    const std::size_t n = set.count();
    for (std::size_t i = 0; i < n; ++i) {
        float* r = set.row(i);
        double sq = 0.0;
        for (std::uint32_t j = 0; j < set.dim; ++j)
            sq += static_cast<double>(r[j]) * static_cast<double>(r[j]);
        require(sq > 0.0, Errc::zero_norm_row,
                "normalize: zero row at index " + std::to_string(i));
        const double inv = 1.0 / std::sqrt(sq);
        for (std::uint32_t j = 0; j < set.dim; ++j)
            r[j] = static_cast<float>(static_cast<double>(r[j]) * inv);
    }
    set.normalized = true;
    return set;
}

EmbeddingSet inject_subset(const EmbeddingSet& large, const EmbeddingSet& small) {
    if (small.empty()) return large;
    require(large.dim == small.dim, Errc::dim_mismatch,
            "inject_subset: dimension mismatch");
    for (std::uint64_t id : small.ids)
        require(id < kInjectedIdOffset, Errc::id_collision,
                "inject_subset: small id " + std::to_string(id) +
                    " does not fit below the injected range");
    for (std::uint64_t id : large.ids)
        require(!is_injected_id(id), Errc::id_collision,
                "inject_subset: large id " + std::to_string(id) +
                    " already occupies the injected range");
    require(large.normalized == small.normalized, Errc::bad_argument,
            "inject_subset: normalization state differs");

    EmbeddingSet out;
    out.dim = large.dim;
    out.normalized = large.normalized;
    out.vectors.reserve(large.vectors.size() + small.vectors.size());
    out.vectors = large.vectors;
    out.vectors.insert(out.vectors.end(), small.vectors.begin(), small.vectors.end());
    out.ids.reserve(large.ids.size() + small.ids.size());
    out.ids = large.ids;
    for (std::uint64_t id : small.ids) out.ids.push_back(id + kInjectedIdOffset);
    return out;
}

void validate_unique_ids(const EmbeddingSet& set) {
    std::vector<std::uint64_t> sorted = set.ids;
    std::sort(sorted.begin(), sorted.end());
    auto dup = std::adjacent_find(sorted.begin(), sorted.end());
    if (dup != sorted.end())
        fail(Errc::duplicate_id, "duplicate id " + std::to_string(*dup));
}

} // namespace simgap
