#include "simgap/dedup.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "simgap/errors.hpp"
#include "simgap/kernels.hpp"
#include "simgap/nn_search.hpp"

namespace simgap {

namespace {

void check_epsilon(const DedupConfig& config) {
    require(config.epsilon > 0.0f && config.epsilon < 2.0f, Errc::bad_argument,
            "dedup: epsilon must be in (0, 2)");
}

DuplicateReport report_from_top1(const NearestNeighborProfile& top1,
                                 float epsilon) {
    DuplicateReport report;
    report.epsilon = epsilon;
    report.test_ids = top1.query_ids;
    report.flagged.resize(top1.query_ids.size(), 0);
    for (std::size_t i = 0; i < top1.query_ids.size(); ++i) {
        const double distance = 1.0 - static_cast<double>(top1.top1(i));
        if (distance < static_cast<double>(epsilon)) {
            report.flagged[i] = 1;
            ++report.flagged_count;
        }
    }
    return report;
}

} // namespace

DuplicateReport count_near_duplicates(const EmbeddingSet& tests,
                                      const DatasetRef& train,
                                      const DedupConfig& config) {
    check_epsilon(config);
    require(config.mode == DedupConfig::Mode::cross_set, Errc::bad_argument,
            "count_near_duplicates: cross_set mode only");
    NNQuery query;
    query.queries = &tests;
    query.reference = train;
    query.k = 1;
    query.chunk_rows = config.chunk_rows;
    return report_from_top1(topk_search(query), config.epsilon);
}

DuplicateReport count_near_duplicates(const EmbeddingSet& tests,
                                      const EmbeddingSet& train,
                                      const DedupConfig& config) {
    check_epsilon(config);
    require(config.mode == DedupConfig::Mode::cross_set, Errc::bad_argument,
            "count_near_duplicates: cross_set mode only");
    return report_from_top1(topk_search(tests, train, 1), config.epsilon);
}

PruneManifest within_set_dedup(const EmbeddingSet& train,
                               const DedupConfig& config) {
    check_epsilon(config);
    require(config.mode == DedupConfig::Mode::within_set, Errc::bad_argument,
            "within_set_dedup: within_set mode only");
    require(train.normalized, Errc::bad_argument,
            "within_set_dedup: training set is not normalized");
    validate_unique_ids(train);

    const std::size_t n = train.count();
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(),
              [&](std::uint32_t a, std::uint32_t b) {
                  return train.ids[a] < train.ids[b];
              });

    // duplicate iff 1 - s < eps, i.e. s > 1 - eps
    const double sim_bound = 1.0 - static_cast<double>(config.epsilon);
    std::vector<std::uint32_t> retained_rows;
    retained_rows.reserve(n);
    std::vector<PruneAction> action(n, PruneAction::retained);

    for (std::uint32_t row : order) {
        const float* v = train.row(row);
        bool duplicate = false;
        const std::ptrdiff_t m =
            static_cast<std::ptrdiff_t>(retained_rows.size());
        if (m >= 2048) {
#pragma omp parallel for schedule(static) reduction(|| : duplicate)
            for (std::ptrdiff_t i = 0; i < m; ++i) {
                const double sim = static_cast<double>(
                    kernels::similarity_from_dot(kernels::dot_accumulate(
                        train.row(retained_rows[static_cast<std::size_t>(i)]),
                        v, train.dim)));
                duplicate = duplicate || sim > sim_bound;
            }
        } else {
            for (std::ptrdiff_t i = 0; i < m && !duplicate; ++i) {
                const double sim = static_cast<double>(
                    kernels::similarity_from_dot(kernels::dot_accumulate(
                        train.row(retained_rows[static_cast<std::size_t>(i)]),
                        v, train.dim)));
                duplicate = sim > sim_bound;
            }
        }
        if (duplicate)
            action[row] = PruneAction::pruned;
        else
            retained_rows.push_back(row);
    }

    PruneManifest manifest;
    manifest.records.reserve(n);
    std::uint64_t pruned = 0;
    for (std::size_t i = 0; i < n; ++i) {
        PruneRecord rec;
        rec.id = train.ids[i];
        rec.reason = PruneReason::dedup;
        rec.action = action[i];
        if (rec.action == PruneAction::pruned) ++pruned;
        manifest.records.push_back(rec);
    }
    manifest.summary.reason = PruneReason::dedup;
    manifest.summary.pruned = pruned;
    manifest.summary.retained = n - pruned;
    manifest.summary.config_hash = config.config_hash;
    {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.9g",
                      static_cast<double>(config.epsilon));
        manifest.summary.extra.emplace_back("epsilon", buf);
        manifest.summary.extra.emplace_back("vicinity",
                                            "\"cosine_distance\"");
    }
    manifest.validate();
    return manifest;
}

} // namespace simgap
