#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "simgap/embedding_set.hpp"
#include "simgap/profile.hpp"
#include "simgap/sgem.hpp"

namespace simgap {

struct NNQuery {
    const EmbeddingSet* queries = nullptr;
    DatasetRef reference;
    std::uint32_t k = 1;
    std::size_t chunk_rows = kDefaultChunkRows;
};

// Exact top-k by cosine similarity. The reference side is scanned in chunks;
// queries are resident. Results are independent of shard order, chunk size
// and thread count: per-pair similarities are bitwise reproducible and the
// k-best set under (similarity desc, id asc) is unique.
NearestNeighborProfile topk_search(const NNQuery& query);
NearestNeighborProfile topk_search(const EmbeddingSet& queries,
                                   const EmbeddingSet& reference,
                                   std::uint32_t k = 1);

struct TrainSideHit {
    float similarity = -2.0f;
    std::uint64_t test_id = 0;
    std::uint32_t test_set_index = 0;
};

// Per training sample, the maximum similarity over the union of the given
// test sets and the achieving test sample. Ties go to the smaller
// (test_set_index, test_id). One streaming pass over the training shards.
struct TrainSideResult {
    std::vector<std::uint64_t> train_ids;
    std::vector<TrainSideHit> hits;
};

TrainSideResult train_side_similarity(const DatasetRef& train,
                                      std::span<const EmbeddingSet> tests,
                                      std::size_t chunk_rows = kDefaultChunkRows);
TrainSideResult train_side_similarity(const EmbeddingSet& train,
                                      std::span<const EmbeddingSet> tests);

} // namespace simgap
