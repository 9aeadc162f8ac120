#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "simgap/embedding_set.hpp"
#include "simgap/manifest.hpp"
#include "simgap/sgem.hpp"

namespace simgap {

// Per-test-sample pruning boundary: the nearest-neighbor similarity of each
// test sample to the small reference training set.
struct GapProfile {
    std::string small_label;
    std::string test_label;
    std::vector<std::uint64_t> test_ids;  // test-set row order
    std::vector<float> thresholds;        // aligned with test_ids
};

GapProfile compute_gap(const EmbeddingSet& small, const EmbeddingSet& tests);

struct GapPruneOptions {
    float slack = 0.0f;  // loosens every boundary; non-negative
    std::string config_hash;
    std::size_t chunk_rows = kDefaultChunkRows;
};

struct GapSource {
    const GapProfile* gap = nullptr;
    const EmbeddingSet* tests = nullptr;
};

// Removes every sample strictly more similar to some test sample than that
// sample's boundary (similarity > threshold + slack). Samples exactly at the
// boundary are retained, which keeps the per-sample gap of the pruned set
// equal to the small set's whenever the small set is contained in the large
// one. The first violating test sample in ascending test-id order is recorded
// as the reason.
PruneManifest gap_align_prune(const DatasetRef& large, const GapProfile& gap,
                              const EmbeddingSet& tests,
                              const GapPruneOptions& options = {});
PruneManifest gap_align_prune(const EmbeddingSet& large, const GapProfile& gap,
                              const EmbeddingSet& tests,
                              const GapPruneOptions& options = {});

// Union of the per-profile pruned sets in one streaming pass. A sample pruned
// by several profiles is attributed to the first one in source order; the
// summary carries per-profile violation counts.
PruneManifest combined_prune(const DatasetRef& large,
                             std::span<const GapSource> sources,
                             const GapPruneOptions& options = {});
PruneManifest combined_prune(const EmbeddingSet& large,
                             std::span<const GapSource> sources,
                             const GapPruneOptions& options = {});

// Recomputes the per-test nearest-neighbor similarity over the retained rows
// and compares it against the profile thresholds.
struct GapEqualityCheck {
    double max_abs_diff = 0.0;   // max |s_i(retained) - threshold_i|
    double max_over = -2.0;      // max (s_i(retained) - threshold_i)
    std::uint64_t worst_test_id = 0;  // test id attaining max_abs_diff
};

GapEqualityCheck verify_gap_equality(const DatasetRef& large,
                                     std::span<const std::uint64_t> pruned_ids,
                                     const GapProfile& gap,
                                     const EmbeddingSet& tests,
                                     std::size_t chunk_rows = kDefaultChunkRows);
GapEqualityCheck verify_gap_equality(const EmbeddingSet& large,
                                     std::span<const std::uint64_t> pruned_ids,
                                     const GapProfile& gap,
                                     const EmbeddingSet& tests);

} // namespace simgap
