#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <vector>

#include "simgap/embedding_set.hpp"

namespace simgap {

// SGEM shard layout (little-endian):
//   0  magic  'S' 'G' 'E' 'M'
//   4  u16    version (= 1)
//   6  u16    flags   (bit 0: rows are L2-normalized)
//   8  u32    dim
//  12  u64    count
//  20  payload, count*dim IEEE-754 binary32, row-major
// Sidecar `<stem>.ids` holds count little-endian u64 ids; when absent the
// ids are synthesized as 0..count-1.

inline constexpr std::uint16_t kSgemVersion = 1;
inline constexpr std::uint16_t kSgemFlagNormalized = 1u << 0;
inline constexpr std::size_t kSgemHeaderBytes = 20;
inline constexpr std::size_t kDefaultChunkRows = 65536;

struct ShardInfo {
    std::uint16_t version = 0;
    bool normalized = false;
    std::uint32_t dim = 0;
    std::uint64_t count = 0;
};

std::filesystem::path sidecar_ids_path(const std::filesystem::path& shard);

// Header only; validates magic/version and payload size against the file.
ShardInfo peek_shard(const std::filesystem::path& path);

// Full read with validation (finite components, no zero rows, id sidecar
// length). Returns the stored bytes untouched, so write -> ingest round-trips
// bit-exactly.
EmbeddingSet ingest_shard(const std::filesystem::path& path);

void write_shard(const std::filesystem::path& path, const EmbeddingSet& set);

// Ingests every shard of `ref` in order, merges (same dim, unique ids across
// shards, per-shard row order preserved) and normalizes the result.
EmbeddingSet load_dataset(const DatasetRef& ref);

// Sequential chunked scan over a dataset's shards. Each chunk is validated
// and normalized before it is handed out; chunks never span shards, so row
// order is the shard order. Not thread-safe; one scanner per pass.
class DatasetScanner {
public:
    DatasetScanner(DatasetRef ref, std::size_t chunk_rows = kDefaultChunkRows);

    std::uint32_t dim() const noexcept { return dim_; }
    std::uint64_t total_rows() const noexcept { return total_rows_; }

    struct Chunk {
        const float* rows = nullptr;
        const std::uint64_t* ids = nullptr;
        std::size_t size = 0;
    };

    // nullopt at end of the dataset.
    std::optional<Chunk> next();

    void reset();

private:
    void open_shard(std::size_t index);

    DatasetRef ref_;
    std::size_t chunk_rows_;
    std::vector<ShardInfo> infos_;
    std::uint32_t dim_ = 0;
    std::uint64_t total_rows_ = 0;

    std::size_t shard_index_ = 0;
    std::uint64_t rows_left_in_shard_ = 0;
    std::uint64_t next_synth_id_ = 0;
    bool shard_normalized_ = false;
    std::ifstream payload_;
    std::ifstream sidecar_;
    bool have_sidecar_ = false;

    std::vector<float> row_buffer_;
    std::vector<std::uint64_t> id_buffer_;
};

} // namespace simgap
