#include "simgap/sgem.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "simgap/errors.hpp"

namespace simgap {

namespace {

std::uint64_t file_size_of(const std::filesystem::path& path) {
    std::error_code ec;
    const auto size = std::filesystem::file_size(path, ec);
    require(!ec, Errc::io_error, "cannot stat " + path.string());
    return size;
}

template <typename T>
T read_le(std::istream& in) {
    unsigned char buf[sizeof(T)];
    in.read(reinterpret_cast<char*>(buf), sizeof(T));
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
        value |= static_cast<T>(buf[i]) << (8 * i);
    return value;
}

template <typename T>
void write_le(std::ostream& out, T value) {
    unsigned char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i)
        buf[i] = static_cast<unsigned char>((value >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

ShardInfo read_header(std::istream& in, const std::filesystem::path& path) {
    char magic[4] = {};
    in.read(magic, 4);
    require(in.good(), Errc::truncated_payload,
            path.string() + ": file shorter than the header");
    require(std::memcmp(magic, "SGEM", 4) == 0, Errc::bad_magic,
            path.string() + ": bad magic");
    ShardInfo info;
    info.version = read_le<std::uint16_t>(in);
    const std::uint16_t flags = read_le<std::uint16_t>(in);
    info.dim = read_le<std::uint32_t>(in);
    info.count = read_le<std::uint64_t>(in);
    require(in.good(), Errc::truncated_payload,
            path.string() + ": file shorter than the header");
    require(info.version == kSgemVersion, Errc::version_mismatch,
            path.string() + ": unsupported version " + std::to_string(info.version));
    require(info.dim > 0, Errc::bad_argument, path.string() + ": zero dim");
    info.normalized = (flags & kSgemFlagNormalized) != 0;
    return info;
}

void check_payload_size(const ShardInfo& info, const std::filesystem::path& path) {
    const std::uint64_t expected =
        kSgemHeaderBytes + info.count * static_cast<std::uint64_t>(info.dim) * 4;
    const std::uint64_t actual = file_size_of(path);
    require(actual == expected, Errc::truncated_payload,
            path.string() + ": payload is " + std::to_string(actual) +
                " bytes, header implies " + std::to_string(expected));
}

// Validation shared by full ingest and the chunked scanner. A shard that
// claims normalized rows must actually hold unit rows (within 1e-4).
void validate_rows(const float* rows, std::size_t n, std::uint32_t dim,
                   std::uint64_t first_row_index, bool claimed_normalized,
                   const std::string& origin) {
    for (std::size_t i = 0; i < n; ++i) {
        const float* r = rows + i * dim;
        double sq = 0.0;
        for (std::uint32_t j = 0; j < dim; ++j) {
            require(std::isfinite(r[j]), Errc::non_finite_component,
                    origin + ": non-finite component in row " +
                        std::to_string(first_row_index + i));
            sq += static_cast<double>(r[j]) * static_cast<double>(r[j]);
        }
        require(sq > 0.0, Errc::zero_norm_row,
                origin + ": zero row " + std::to_string(first_row_index + i));
        if (claimed_normalized)
            require(std::abs(std::sqrt(sq) - 1.0) <= 1e-4,
                    Errc::value_out_of_range,
                    origin + ": row " + std::to_string(first_row_index + i) +
                        " is not unit norm but the shard is flagged normalized");
    }
}

void normalize_rows(float* rows, std::size_t n, std::uint32_t dim) {
    for (std::size_t i = 0; i < n; ++i) {
        float* r = rows + i * dim;
        double sq = 0.0;
        for (std::uint32_t j = 0; j < dim; ++j)
            sq += static_cast<double>(r[j]) * static_cast<double>(r[j]);
        const double inv = 1.0 / std::sqrt(sq);
        for (std::uint32_t j = 0; j < dim; ++j)
            r[j] = static_cast<float>(static_cast<double>(r[j]) * inv);
    }
}

} // namespace

std::filesystem::path sidecar_ids_path(const std::filesystem::path& shard) {
    std::filesystem::path p = shard;
    p.replace_extension(".ids");
    return p;
}

ShardInfo peek_shard(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.is_open(), Errc::io_error, "cannot open " + path.string());
    ShardInfo info = read_header(in, path);
    check_payload_size(info, path);
    return info;
}

EmbeddingSet ingest_shard(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.is_open(), Errc::io_error, "cannot open " + path.string());
    ShardInfo info = read_header(in, path);
    check_payload_size(info, path);

    EmbeddingSet set;
    set.dim = info.dim;
    set.normalized = info.normalized;
    set.vectors.resize(info.count * static_cast<std::size_t>(info.dim));
    in.read(reinterpret_cast<char*>(set.vectors.data()),
            static_cast<std::streamsize>(set.vectors.size() * 4));
    require(in.good() || info.count == 0, Errc::truncated_payload,
            path.string() + ": payload read failed");

    const auto ids_path = sidecar_ids_path(path);
    if (std::filesystem::exists(ids_path)) {
        const std::uint64_t ids_size = file_size_of(ids_path);
        require(ids_size == info.count * 8, Errc::id_count_mismatch,
                ids_path.string() + ": " + std::to_string(ids_size / 8) +
                    " ids for " + std::to_string(info.count) + " rows");
        std::ifstream ids_in(ids_path, std::ios::binary);
        require(ids_in.is_open(), Errc::io_error, "cannot open " + ids_path.string());
        set.ids.resize(info.count);
        for (std::uint64_t i = 0; i < info.count; ++i)
            set.ids[i] = read_le<std::uint64_t>(ids_in);
        require(ids_in.good() || info.count == 0, Errc::io_error,
                ids_path.string() + ": read failed");
    } else {
        set.ids.resize(info.count);
        for (std::uint64_t i = 0; i < info.count; ++i) set.ids[i] = i;
    }

    validate_rows(set.vectors.data(), set.count(), set.dim, 0, set.normalized,
                  path.string());
    validate_unique_ids(set);
    return set;
}

void write_shard(const std::filesystem::path& path, const EmbeddingSet& set) {
    require(set.dim > 0, Errc::bad_argument, "write_shard: zero dim");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.is_open(), Errc::io_error, "cannot create " + path.string());
    out.write("SGEM", 4);
    write_le<std::uint16_t>(out, kSgemVersion);
    write_le<std::uint16_t>(out, set.normalized ? kSgemFlagNormalized : 0);
    write_le<std::uint32_t>(out, set.dim);
    write_le<std::uint64_t>(out, set.count());
    out.write(reinterpret_cast<const char*>(set.vectors.data()),
              static_cast<std::streamsize>(set.vectors.size() * 4));
    require(out.good(), Errc::io_error, "write failed: " + path.string());

    const auto ids_path = sidecar_ids_path(path);
    std::ofstream ids_out(ids_path, std::ios::binary | std::ios::trunc);
    require(ids_out.is_open(), Errc::io_error, "cannot create " + ids_path.string());
    for (std::uint64_t id : set.ids) write_le<std::uint64_t>(ids_out, id);
    require(ids_out.good(), Errc::io_error, "write failed: " + ids_path.string());
}

EmbeddingSet load_dataset(const DatasetRef& ref) {
    require(!ref.shard_paths.empty(), Errc::empty_input,
            "dataset '" + ref.label + "' has no shards");
    EmbeddingSet merged;
    bool all_normalized = true;
    for (const auto& path : ref.shard_paths) {
        EmbeddingSet shard = ingest_shard(path);
        if (merged.ids.empty() && merged.dim == 0) {
            merged.dim = shard.dim;
        } else {
            require(shard.dim == merged.dim, Errc::dim_mismatch,
                    path.string() + ": dim " + std::to_string(shard.dim) +
                        " differs from " + std::to_string(merged.dim));
        }
        all_normalized = all_normalized && shard.normalized;
        merged.vectors.insert(merged.vectors.end(), shard.vectors.begin(),
                              shard.vectors.end());
        merged.ids.insert(merged.ids.end(), shard.ids.begin(), shard.ids.end());
    }
    merged.normalized = all_normalized;
    validate_unique_ids(merged);
    return normalize(std::move(merged));
}

DatasetScanner::DatasetScanner(DatasetRef ref, std::size_t chunk_rows)
    : ref_(std::move(ref)), chunk_rows_(chunk_rows) {
    require(chunk_rows_ > 0, Errc::bad_argument, "chunk_rows must be positive");
    require(!ref_.shard_paths.empty(), Errc::empty_input,
            "dataset '" + ref_.label + "' has no shards");
    infos_.reserve(ref_.shard_paths.size());
    for (const auto& path : ref_.shard_paths) {
        ShardInfo info = peek_shard(path);
        if (infos_.empty()) {
            dim_ = info.dim;
        } else {
            require(info.dim == dim_, Errc::dim_mismatch,
                    path.string() + ": dim " + std::to_string(info.dim) +
                        " differs from " + std::to_string(dim_));
        }
        total_rows_ += info.count;
        infos_.push_back(info);
    }
    reset();
}

void DatasetScanner::reset() {
    shard_index_ = 0;
    rows_left_in_shard_ = 0;
    payload_.close();
    payload_.clear();
    sidecar_.close();
    sidecar_.clear();
    have_sidecar_ = false;
}

void DatasetScanner::open_shard(std::size_t index) {
    const auto& path = ref_.shard_paths[index];
    payload_.close();
    payload_.clear();
    payload_.open(path, std::ios::binary);
    require(payload_.is_open(), Errc::io_error, "cannot open " + path.string());
    read_header(payload_, path);
    rows_left_in_shard_ = infos_[index].count;
    shard_normalized_ = infos_[index].normalized;
    next_synth_id_ = 0;

    const auto ids_path = sidecar_ids_path(path);
    sidecar_.close();
    sidecar_.clear();
    have_sidecar_ = std::filesystem::exists(ids_path);
    if (have_sidecar_) {
        const std::uint64_t ids_size = file_size_of(ids_path);
        require(ids_size == infos_[index].count * 8, Errc::id_count_mismatch,
                ids_path.string() + ": " + std::to_string(ids_size / 8) +
                    " ids for " + std::to_string(infos_[index].count) + " rows");
        sidecar_.open(ids_path, std::ios::binary);
        require(sidecar_.is_open(), Errc::io_error,
                "cannot open " + ids_path.string());
    }
}

std::optional<DatasetScanner::Chunk> DatasetScanner::next() {
    while (rows_left_in_shard_ == 0) {
        if (shard_index_ >= ref_.shard_paths.size()) return std::nullopt;
        open_shard(shard_index_);
        ++shard_index_;
    }

    const std::size_t n = static_cast<std::size_t>(
        std::min<std::uint64_t>(chunk_rows_, rows_left_in_shard_));
    row_buffer_.resize(n * static_cast<std::size_t>(dim_));
    id_buffer_.resize(n);

    const auto& path = ref_.shard_paths[shard_index_ - 1];
    payload_.read(reinterpret_cast<char*>(row_buffer_.data()),
                  static_cast<std::streamsize>(row_buffer_.size() * 4));
    require(payload_.good(), Errc::truncated_payload,
            path.string() + ": payload read failed");

    const std::uint64_t first_row = infos_[shard_index_ - 1].count - rows_left_in_shard_;
    if (have_sidecar_) {
        for (std::size_t i = 0; i < n; ++i)
            id_buffer_[i] = read_le<std::uint64_t>(sidecar_);
        require(sidecar_.good(), Errc::io_error,
                sidecar_ids_path(path).string() + ": read failed");
    } else {
        for (std::size_t i = 0; i < n; ++i) id_buffer_[i] = next_synth_id_++;
    }

    validate_rows(row_buffer_.data(), n, dim_, first_row, shard_normalized_,
                  path.string());
    if (!shard_normalized_) normalize_rows(row_buffer_.data(), n, dim_);

    rows_left_in_shard_ -= n;
    return Chunk{row_buffer_.data(), id_buffer_.data(), n};
}

} // namespace simgap
