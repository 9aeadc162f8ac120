#include "simgap/analysis.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include "simgap/errors.hpp"
#include "simgap/kernels.hpp"

namespace simgap {

namespace {

std::size_t bin_count(double lo, double hi, double width) {
    require(width > 0.0 && std::isfinite(width), Errc::bad_argument,
            "bin width must be positive");
    require(std::isfinite(lo) && std::isfinite(hi) && hi > lo,
            Errc::bad_argument, "bad bin range");
    auto bins = static_cast<std::size_t>(std::floor((hi - lo) / width));
    while (lo + static_cast<double>(bins) * width < hi) ++bins;
    while (bins > 1 && lo + static_cast<double>(bins - 1) * width >= hi)
        --bins;
    return bins;
}

// The unique bin under edge-comparison semantics; the division only seeds
// the search so results cannot drift from the edge formula.
std::size_t bin_of(double v, double lo, double hi, double width,
                   std::size_t bins) {
    require(std::isfinite(v), Errc::value_out_of_range,
            "non-finite value in histogram input");
    require(v >= lo && v <= hi, Errc::value_out_of_range,
            "value " + std::to_string(v) + " outside [" + std::to_string(lo) +
                ", " + std::to_string(hi) + "]");
    const double offset = (v - lo) / width;
    std::size_t j = offset <= 0.0
                        ? 0
                        : std::min(static_cast<std::size_t>(offset), bins - 1);
    while (j > 0 && v < lo + static_cast<double>(j) * width) --j;
    while (j + 1 < bins && v >= lo + static_cast<double>(j + 1) * width) ++j;
    return j;
}

} // namespace

Histogram build_histogram(std::span<const float> values, double bin_width,
                          double lo, double hi) {
    Histogram hist;
    hist.lo = lo;
    hist.hi = hi;
    hist.bin_width = bin_width;
    hist.counts.assign(bin_count(lo, hi, bin_width), 0);
    for (float v : values)
        ++hist.counts[bin_of(v, lo, hi, bin_width, hist.counts.size())];
    hist.total = values.size();
    return hist;
}

BinnedAccuracy bin_accuracy(std::span<const float> similarities,
                            std::span<const std::uint8_t> correct,
                            double bin_width, double lo, double hi) {
    require(similarities.size() == correct.size(), Errc::length_mismatch,
            "bin_accuracy: " + std::to_string(similarities.size()) +
                " similarities vs " + std::to_string(correct.size()) +
                " correctness values");
    require(!similarities.empty(), Errc::empty_input, "bin_accuracy: no input");

    BinnedAccuracy out;
    out.lo = lo;
    out.hi = hi;
    out.bin_width = bin_width;
    const std::size_t bins = bin_count(lo, hi, bin_width);
    out.counts.assign(bins, 0);
    out.accuracy.assign(bins, 0.0);
    std::vector<std::uint64_t> hits(bins, 0);
    std::uint64_t total_hits = 0;
    for (std::size_t i = 0; i < similarities.size(); ++i) {
        const std::size_t j = bin_of(similarities[i], lo, hi, bin_width, bins);
        ++out.counts[j];
        if (correct[i]) {
            ++hits[j];
            ++total_hits;
        }
    }
    for (std::size_t j = 0; j < bins; ++j)
        if (out.counts[j] > 0)
            out.accuracy[j] = static_cast<double>(hits[j]) /
                              static_cast<double>(out.counts[j]);
    out.total = similarities.size();
    out.overall_accuracy =
        static_cast<double>(total_hits) / static_cast<double>(out.total);
    return out;
}

double provenance_percentage(const NearestNeighborProfile& large,
                             const NearestNeighborProfile& small) {
    require(large.k == 1 && small.k == 1, Errc::bad_argument,
            "provenance_percentage: profiles must be k=1");
    require(large.query_ids.size() == small.query_ids.size(),
            Errc::length_mismatch,
            "provenance_percentage: query sets differ in size");
    std::unordered_map<std::uint64_t, float> small_sim;
    small_sim.reserve(small.query_ids.size());
    for (std::size_t i = 0; i < small.query_ids.size(); ++i)
        small_sim[small.query_ids[i]] = small.top1(i);

    std::uint64_t closer = 0;
    for (std::size_t i = 0; i < large.query_ids.size(); ++i) {
        auto it = small_sim.find(large.query_ids[i]);
        require(it != small_sim.end(), Errc::bad_argument,
                "provenance_percentage: query id " +
                    std::to_string(large.query_ids[i]) +
                    " missing from the small profile");
        if (large.top1(i) > it->second) ++closer;
    }
    return 100.0 * static_cast<double>(closer) /
           static_cast<double>(large.query_ids.size());
}

DenominatorSet denominators_from(const GapProfile& gap) {
    return {gap.test_ids, gap.thresholds};
}

DenominatorSet denominators_from(const NearestNeighborProfile& profile) {
    require(profile.k >= 1, Errc::bad_argument, "denominators need k >= 1");
    DenominatorSet out;
    out.test_ids = profile.query_ids;
    out.values.reserve(profile.query_ids.size());
    for (std::size_t i = 0; i < profile.query_ids.size(); ++i)
        out.values.push_back(profile.top1(i));
    return out;
}

NormalizedSimilarityReport normalized_similarity(
    const EmbeddingSet& train, const EmbeddingSet& tests,
    const DenominatorSet& denominators, NormalizationMode mode,
    double bin_width) {
    require(!train.empty() && !tests.empty(), Errc::empty_input,
            "normalized_similarity: empty input");
    require(train.normalized && tests.normalized, Errc::bad_argument,
            "normalized_similarity: inputs must be normalized");
    require(train.dim == tests.dim, Errc::dim_mismatch,
            "normalized_similarity: dim mismatch");

    std::unordered_map<std::uint64_t, float> denom_of;
    denom_of.reserve(denominators.test_ids.size());
    for (std::size_t i = 0; i < denominators.test_ids.size(); ++i)
        denom_of[denominators.test_ids[i]] = denominators.values[i];

    // Per-test denominator aligned with the test rows, validated up front.
    std::vector<float> denom(tests.count());
    for (std::size_t i = 0; i < tests.count(); ++i) {
        auto it = denom_of.find(tests.ids[i]);
        require(it != denom_of.end(), Errc::missing_threshold,
                "normalized_similarity: no denominator for test id " +
                    std::to_string(tests.ids[i]));
        require(it->second > 0.0f, Errc::zero_denominator,
                "normalized_similarity: non-positive denominator for test id " +
                    std::to_string(tests.ids[i]));
        denom[i] = it->second;
    }

    NormalizedSimilarityReport report;
    report.mode = mode;
    report.records.resize(train.count());

#pragma omp parallel for schedule(dynamic, 64)
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(train.count());
         ++r) {
        const float* row = train.row(static_cast<std::size_t>(r));
        std::size_t best = 0;
        float best_sim = -2.0f;
        double best_ratio = 0.0;
        bool first = true;
        for (std::size_t i = 0; i < tests.count(); ++i) {
            const float sim = kernels::similarity_from_dot(
                kernels::dot_accumulate(tests.row(i), row, train.dim));
            if (mode == NormalizationMode::small_gap) {
                const double ratio = static_cast<double>(sim) /
                                     static_cast<double>(denom[i]);
                const bool better =
                    first || ratio > best_ratio ||
                    (ratio == best_ratio && tests.ids[i] < tests.ids[best]);
                if (better) {
                    best = i;
                    best_sim = sim;
                    best_ratio = ratio;
                    first = false;
                }
            } else {
                const bool better =
                    first || sim > best_sim ||
                    (sim == best_sim && tests.ids[i] < tests.ids[best]);
                if (better) {
                    best = i;
                    best_sim = sim;
                    first = false;
                }
            }
        }
        NormalizedSimilarityRecord rec;
        rec.sample_id = train.ids[static_cast<std::size_t>(r)];
        rec.raw = best_sim;
        rec.test_id = tests.ids[best];
        rec.denominator = denom[best];
        rec.normalized = mode == NormalizationMode::small_gap
                             ? best_ratio
                             : static_cast<double>(best_sim) /
                                   static_cast<double>(denom[best]);
        report.records[static_cast<std::size_t>(r)] = rec;
    }

    double min_norm = 0.0, max_norm = 0.0;
    bool first = true;
    for (const auto& rec : report.records) {
        if (rec.normalized > 0.9) ++report.boundary_count;
        min_norm = first ? rec.normalized : std::min(min_norm, rec.normalized);
        max_norm = first ? rec.normalized : std::max(max_norm, rec.normalized);
        first = false;
    }

    // Density range snaps outward to bin-width multiples around the data.
    double lo = std::floor(min_norm / bin_width) * bin_width;
    double hi = std::ceil(max_norm / bin_width) * bin_width;
    if (lo > min_norm) lo -= bin_width;
    if (hi < max_norm) hi += bin_width;
    if (hi <= lo) hi = lo + bin_width;
    std::vector<float> values;
    values.reserve(report.records.size());
    for (const auto& rec : report.records)
        values.push_back(static_cast<float>(rec.normalized));
    // f32 rounding must not escape the range
    lo = std::min(lo, static_cast<double>(
                          *std::min_element(values.begin(), values.end())));
    hi = std::max(hi, static_cast<double>(
                          *std::max_element(values.begin(), values.end())));
    report.density = build_histogram(values, bin_width, lo, hi);
    return report;
}

double rank_correlation(std::span<const float> a, std::span<const float> b) {
    require(a.size() == b.size(), Errc::length_mismatch,
            "rank_correlation: " + std::to_string(a.size()) + " vs " +
                std::to_string(b.size()) + " values");
    require(a.size() >= 2, Errc::bad_argument,
            "rank_correlation: need at least 2 pairs");

    auto ranks_of = [](std::span<const float> v) {
        const std::size_t n = v.size();
        std::vector<std::uint32_t> order(n);
        std::iota(order.begin(), order.end(), 0u);
        std::sort(order.begin(), order.end(), [&](std::uint32_t x,
                                                  std::uint32_t y) {
            return v[x] < v[y];
        });
        std::vector<double> ranks(n);
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
            const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
            for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
            i = j + 1;
        }
        return ranks;
    };

    const std::vector<double> ra = ranks_of(a);
    const std::vector<double> rb = ranks_of(b);
    const double n = static_cast<double>(a.size());
    double mean_a = 0.0, mean_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        mean_a += ra[i];
        mean_b += rb[i];
    }
    mean_a /= n;
    mean_b /= n;
    double cov = 0.0, var_a = 0.0, var_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = ra[i] - mean_a;
        const double db = rb[i] - mean_b;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    require(var_a > 0.0 && var_b > 0.0, Errc::constant_input,
            "rank_correlation: constant input");
    return cov / std::sqrt(var_a * var_b);
}

namespace {

void write_histogram_rows(std::ostream& out, double lo, double hi, double width,
                          std::span<const std::uint64_t> counts,
                          const double* accuracy) {
    char buf[160];
    for (std::size_t j = 0; j < counts.size(); ++j) {
        const double bin_lo = lo + static_cast<double>(j) * width;
        const double bin_hi =
            j + 1 == counts.size() ? hi : lo + static_cast<double>(j + 1) * width;
        if (accuracy == nullptr) {
            std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%" PRIu64 "\n", bin_lo,
                          bin_hi, counts[j]);
        } else if (counts[j] > 0) {
            std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%" PRIu64 ",%.9g\n",
                          bin_lo, bin_hi, counts[j], accuracy[j]);
        } else {
            std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%" PRIu64 ",\n", bin_lo,
                          bin_hi, counts[j]);
        }
        out << buf;
    }
}

} // namespace

void write_histogram_csv(std::ostream& out, const Histogram& hist) {
    out << "bin_lo,bin_hi,count\n";
    write_histogram_rows(out, hist.lo, hist.hi, hist.bin_width, hist.counts,
                         nullptr);
}

void write_histogram_csv(const std::filesystem::path& path,
                         const Histogram& hist) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.is_open(), Errc::io_error, "cannot create " + path.string());
    write_histogram_csv(out, hist);
    require(out.good(), Errc::io_error, "write failed: " + path.string());
}

void write_binned_accuracy_csv(std::ostream& out, const BinnedAccuracy& bins) {
    out << "bin_lo,bin_hi,count,accuracy\n";
    write_histogram_rows(out, bins.lo, bins.hi, bins.bin_width, bins.counts,
                         bins.accuracy.data());
}

void write_binned_accuracy_csv(const std::filesystem::path& path,
                               const BinnedAccuracy& bins) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.is_open(), Errc::io_error, "cannot create " + path.string());
    write_binned_accuracy_csv(out, bins);
    require(out.good(), Errc::io_error, "write failed: " + path.string());
}

void write_normsim_records_csv(const std::filesystem::path& path,
                               const NormalizedSimilarityReport& report) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.is_open(), Errc::io_error, "cannot create " + path.string());
    out << "sample_id,raw,test_id,denominator,normalized\n";
    char buf[192];
    for (const auto& rec : report.records) {
        std::snprintf(buf, sizeof(buf),
                      "%" PRIu64 ",%.9g,%" PRIu64 ",%.9g,%.9g\n",
                      rec.sample_id, static_cast<double>(rec.raw), rec.test_id,
                      static_cast<double>(rec.denominator), rec.normalized);
        out << buf;
    }
    require(out.good(), Errc::io_error, "write failed: " + path.string());
}

std::vector<std::pair<std::uint64_t, std::uint8_t>> read_correctness_csv(
    const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.is_open(), Errc::io_error, "cannot open " + path.string());
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), Errc::parse_error,
            path.string() + ": empty file");
    require(line == "test_id,correct", Errc::parse_error,
            path.string() + ": unexpected header '" + line + "'");
    std::vector<std::pair<std::uint64_t, std::uint8_t>> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::uint64_t id = 0;
        unsigned value = 0;
        require(std::sscanf(line.c_str(), "%" SCNu64 ",%u", &id, &value) == 2 &&
                    value <= 1,
                Errc::parse_error, path.string() + ": bad row '" + line + "'");
        out.emplace_back(id, static_cast<std::uint8_t>(value));
    }
    return out;
}

} // namespace simgap
