#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "simgap/embedding_set.hpp"
#include "simgap/manifest.hpp"
#include "simgap/sgem.hpp"

namespace simgap {

enum class OrderPruneMode { near, far, rand };

// Identifier of the seeded subset selection written into rand manifests.
// Keys are splitmix64-derived from (seed, id) and the `count` smallest keys
// are pruned, so a given seed selects the same split on every platform.
inline constexpr const char* kRandAlgorithmId = "splitmix64-bottomk-v1";

struct OrderPruneSpec {
    OrderPruneMode mode = OrderPruneMode::rand;
    std::uint64_t count = 0;  // samples to prune
    std::uint64_t seed = 0;   // rand mode only
    std::size_t chunk_rows = kDefaultChunkRows;
    std::string config_hash;
};

// near: prunes the `count` samples with the largest nearest-neighbor
// similarity to the test sets (ties: smaller id pruned first); far: the
// `count` smallest; rand: a seeded uniform subset of size `count`.
// Selection keeps O(count) state over the streamed similarities.
PruneManifest order_prune(const DatasetRef& train, const OrderPruneSpec& spec,
                          std::span<const EmbeddingSet> tests);
PruneManifest order_prune(const EmbeddingSet& train, const OrderPruneSpec& spec,
                          std::span<const EmbeddingSet> tests);

// Far-prunes against the union of the test sets until `target_size` samples
// remain; manifest reason is `coreset`.
PruneManifest extract_coreset(const DatasetRef& train,
                              std::span<const EmbeddingSet> tests,
                              std::uint64_t target_size,
                              std::size_t chunk_rows = kDefaultChunkRows,
                              const std::string& config_hash = {});
PruneManifest extract_coreset(const EmbeddingSet& train,
                              std::span<const EmbeddingSet> tests,
                              std::uint64_t target_size,
                              const std::string& config_hash = {});

} // namespace simgap
