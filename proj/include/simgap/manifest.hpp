#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "simgap/embedding_set.hpp"

namespace simgap {

enum class PruneAction : std::uint8_t { retained, pruned };
enum class PruneReason : std::uint8_t { gap, near, far, rand, dedup, coreset };

std::string_view prune_action_name(PruneAction action);
std::string_view prune_reason_name(PruneReason reason);

struct PruneRecord {
    std::uint64_t id = 0;
    PruneAction action = PruneAction::retained;
    PruneReason reason = PruneReason::gap;
    std::optional<std::uint64_t> test_id;
    std::optional<float> similarity;
};

struct PruneSummary {
    PruneReason reason = PruneReason::gap;
    std::uint64_t pruned = 0;
    std::uint64_t retained = 0;
    std::string config_hash;
    std::optional<std::uint64_t> seed;
    // Extra key/value pairs serialized into the summary object in the given
    // order (attribution counts, slack, epsilon, algorithm id, ...).
    std::vector<std::pair<std::string, std::string>> extra;
};

// One record per input sample, in input row order.
struct PruneManifest {
    std::vector<PruneRecord> records;
    PruneSummary summary;

    // Checks the record/summary tallies and id uniqueness.
    void validate() const;

    std::vector<std::uint64_t> pruned_ids() const;
    std::vector<std::uint64_t> retained_ids() const;
};

// JSON Lines: one record object per sample followed by one summary object.
void write_manifest_jsonl(std::ostream& out, const PruneManifest& manifest);
void write_manifest_jsonl(const std::filesystem::path& path,
                          const PruneManifest& manifest);
std::string manifest_jsonl_string(const PruneManifest& manifest);

PruneManifest read_manifest_jsonl(const std::filesystem::path& path);

// Compact variant: pruned ids only, little-endian u64.
void write_pruned_ids_binary(const std::filesystem::path& path,
                             const PruneManifest& manifest);

// Materializes the retained subset; used to chain pruning stages.
EmbeddingSet filter_retained(const EmbeddingSet& set,
                             const PruneManifest& manifest);

} // namespace simgap
