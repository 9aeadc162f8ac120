#pragma once

#include <cstdint>
#include <vector>

#include "simgap/embedding_set.hpp"
#include "simgap/profile.hpp"

namespace simgap {

// Clustered unit vectors: centers drawn from the seeded generator, members
// re-normalized center + Gaussian dispersion. The small set's rows are
// embedded verbatim (ids and values) at the front of the large set, so the
// subset assumption of gap alignment holds by construction.
struct SynthSpec {
    std::uint64_t seed = 1;
    std::uint32_t dim = 64;
    std::uint32_t clusters = 16;
    std::uint32_t small_per_cluster = 8;
    std::uint32_t large_extra_per_cluster = 32;
    std::uint32_t tests_per_cluster = 4;
    float dispersion = 0.15f;
    // Near-copies of test samples appended to the large set at an exact
    // cosine distance; exercises the duplicate threshold.
    std::uint32_t planted_duplicates = 0;
    float planted_distance = 0.04f;

    void validate() const;
};

struct SynthFixture {
    EmbeddingSet small;
    EmbeddingSet large;
    EmbeddingSet tests;
};

SynthFixture generate(const SynthSpec& spec);

// Quadratic double-precision scan, single-threaded, no tiling; shares no
// kernel with the production path. Tie-break contract matches topk_search.
// Guarded to |queries| * |reference| <= 1e8.
NearestNeighborProfile oracle_topk(const EmbeddingSet& queries,
                                   const EmbeddingSet& reference,
                                   std::uint32_t k);

// Literal per-test thresholding: the union over test samples of every large
// sample strictly above that test's nearest-neighbor similarity to the small
// set. Returns sorted pruned ids.
std::vector<std::uint64_t> oracle_gap_prune(const EmbeddingSet& large,
                                            const EmbeddingSet& small,
                                            const EmbeddingSet& tests);

} // namespace simgap
