#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "simgap/embedding_set.hpp"
#include "simgap/manifest.hpp"
#include "simgap/sgem.hpp"

namespace simgap {

// "Vicinity" is cosine distance 1 - s; a pair is a near duplicate when the
// distance is strictly below epsilon. For unit rows this is monotone in
// Euclidean distance (|a-b|^2 = 2(1-s)).
struct DedupConfig {
    float epsilon = 0.05f;
    enum class Mode { cross_set, within_set } mode = Mode::cross_set;
    std::size_t chunk_rows = kDefaultChunkRows;
    std::string config_hash;
};

struct DuplicateReport {
    std::vector<std::uint64_t> test_ids;  // test-set row order
    std::vector<std::uint8_t> flagged;    // aligned with test_ids
    std::uint64_t flagged_count = 0;
    float epsilon = 0.05f;
};

// Flags every test sample whose nearest training sample lies within cosine
// distance epsilon.
DuplicateReport count_near_duplicates(const EmbeddingSet& tests,
                                      const DatasetRef& train,
                                      const DedupConfig& config);
DuplicateReport count_near_duplicates(const EmbeddingSet& tests,
                                      const EmbeddingSet& train,
                                      const DedupConfig& config);

// Greedy scan in ascending id order: a sample is pruned when some earlier
// retained sample lies within cosine distance epsilon, so the retained set is
// pairwise at least epsilon apart and re-running prunes nothing. This is a
// deliberately simple exact-threshold pass, not a clustered method.
PruneManifest within_set_dedup(const EmbeddingSet& train,
                               const DedupConfig& config);

} // namespace simgap
