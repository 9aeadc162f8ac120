#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace simgap {

// Ids of an injected reference subset live above this offset so provenance
// survives concatenation without an id remap.
inline constexpr std::uint64_t kInjectedIdOffset = 1ULL << 48;

inline bool is_injected_id(std::uint64_t id) { return id >= kInjectedIdOffset; }

// Immutable after construction; safe to share across threads.
struct EmbeddingSet {
    std::uint32_t dim = 0;
    bool normalized = false;
    std::vector<float> vectors;      // count()*dim, row-major
    std::vector<std::uint64_t> ids;  // one per row, unique

    std::size_t count() const noexcept { return ids.size(); }
    bool empty() const noexcept { return ids.empty(); }

    const float* row(std::size_t i) const noexcept { return vectors.data() + i * dim; }
    float* row(std::size_t i) noexcept { return vectors.data() + i * dim; }
    std::span<const float> row_span(std::size_t i) const noexcept {
        return {row(i), dim};
    }

    std::size_t injected_count() const noexcept;
};

enum class DatasetRole { small_train, large_train, test };

struct DatasetRef {
    DatasetRole role = DatasetRole::large_train;
    std::vector<std::filesystem::path> shard_paths;
    std::string label;
};

// Divides every row by its Euclidean norm and sets the flag. No-op on a set
// already flagged normalized, so the operation is exactly idempotent.
EmbeddingSet normalize(EmbeddingSet set);

// Appends `small` behind `large` with small ids offset into the injected
// range. Rows keep their order; the result records the small rows as
// reference members through their offset ids.
EmbeddingSet inject_subset(const EmbeddingSet& large, const EmbeddingSet& small);

void validate_unique_ids(const EmbeddingSet& set);

} // namespace simgap
