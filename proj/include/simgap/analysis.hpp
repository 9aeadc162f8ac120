#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "simgap/embedding_set.hpp"
#include "simgap/gap_pruner.hpp"
#include "simgap/profile.hpp"

namespace simgap {

// Half-open bins [edge(j), edge(j+1)); the last bin is closed at hi.
// Values outside [lo, hi] are an error, never clamped.
struct Histogram {
    double lo = -1.0;
    double hi = 1.0;
    double bin_width = 0.05;
    std::vector<std::uint64_t> counts;
    std::uint64_t total = 0;

    std::size_t bins() const noexcept { return counts.size(); }
    double edge(std::size_t j) const noexcept {
        return lo + static_cast<double>(j) * bin_width;
    }
};

Histogram build_histogram(std::span<const float> values,
                          double bin_width = 0.05, double lo = -1.0,
                          double hi = 1.0);

struct BinnedAccuracy {
    double lo = -1.0;
    double hi = 1.0;
    double bin_width = 0.05;
    std::vector<std::uint64_t> counts;
    std::vector<double> accuracy;  // meaningful only where counts[j] > 0
    std::uint64_t total = 0;
    double overall_accuracy = 0.0;

    std::size_t bins() const noexcept { return counts.size(); }
    double edge(std::size_t j) const noexcept {
        return lo + static_cast<double>(j) * bin_width;
    }
};

// Mean of the correctness indicator per similarity bin. The count-weighted
// mean of the bin accuracies equals the overall accuracy.
BinnedAccuracy bin_accuracy(std::span<const float> similarities,
                            std::span<const std::uint8_t> correct,
                            double bin_width = 0.05, double lo = -1.0,
                            double hi = 1.0);

// Percentage of queries whose top-1 similarity in `large` strictly exceeds
// the one in `small`. Profiles must be k=1 over the same query ids.
double provenance_percentage(const NearestNeighborProfile& large,
                             const NearestNeighborProfile& small);

enum class NormalizationMode { pre_prune_large, small_gap };

struct DenominatorSet {
    std::vector<std::uint64_t> test_ids;
    std::vector<float> values;
};

DenominatorSet denominators_from(const GapProfile& gap);
DenominatorSet denominators_from(const NearestNeighborProfile& profile);

struct NormalizedSimilarityRecord {
    std::uint64_t sample_id = 0;
    float raw = 0.0f;           // similarity to the achieving test sample
    std::uint64_t test_id = 0;  // the achieving test sample
    float denominator = 0.0f;
    double normalized = 0.0;    // raw / denominator
};

struct NormalizedSimilarityReport {
    NormalizationMode mode = NormalizationMode::small_gap;
    std::vector<NormalizedSimilarityRecord> records;
    Histogram density;
    std::uint64_t boundary_count = 0;  // normalized > 0.9
};

// pre_prune_large divides each sample's nearest-test similarity by that test
// sample's denominator. small_gap attributes each sample to the test sample
// with the largest similarity-to-denominator ratio, which makes
// `normalized > 1` coincide exactly with the gap pruning rule when the
// denominators come from compute_gap.
NormalizedSimilarityReport normalized_similarity(const EmbeddingSet& train,
                                                 const EmbeddingSet& tests,
                                                 const DenominatorSet& denominators,
                                                 NormalizationMode mode,
                                                 double bin_width = 0.05);

// Spearman's rho with average ranks for ties.
double rank_correlation(std::span<const float> a, std::span<const float> b);

// CSV serialization. Empty bins emit an empty accuracy field.
void write_histogram_csv(std::ostream& out, const Histogram& hist);
void write_histogram_csv(const std::filesystem::path& path,
                         const Histogram& hist);
void write_binned_accuracy_csv(std::ostream& out, const BinnedAccuracy& bins);
void write_binned_accuracy_csv(const std::filesystem::path& path,
                               const BinnedAccuracy& bins);
void write_normsim_records_csv(const std::filesystem::path& path,
                               const NormalizedSimilarityReport& report);

// `test_id,correct` with 0/1 values.
std::vector<std::pair<std::uint64_t, std::uint8_t>> read_correctness_csv(
    const std::filesystem::path& path);

} // namespace simgap
