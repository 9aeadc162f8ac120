#include "simgap/gap_pruner.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "simgap/errors.hpp"
#include "simgap/kernels.hpp"
#include "simgap/nn_search.hpp"

namespace simgap {

GapProfile compute_gap(const EmbeddingSet& small, const EmbeddingSet& tests) {
    require(!small.empty(), Errc::empty_input, "compute_gap: empty small set");
    require(!tests.empty(), Errc::empty_input, "compute_gap: empty test set");
    const NearestNeighborProfile top1 = topk_search(tests, small, 1);
    GapProfile gap;
    gap.test_ids = top1.query_ids;
    gap.thresholds.reserve(top1.hits.size());
    for (const NeighborHit& hit : top1.hits)
        gap.thresholds.push_back(hit.similarity);
    return gap;
}

namespace {

struct Violation {
    bool found = false;
    std::uint64_t test_id = 0;
    float similarity = 0.0f;
};

// One profile prepared for scanning: test rows visited in ascending test-id
// order so the first hit is the smallest violating test id. Test rows are
// widened once; the widened kernel matches the float one bit for bit.
struct ProfilePlan {
    const EmbeddingSet* tests = nullptr;
    std::vector<std::uint32_t> row_order;
    std::vector<std::uint64_t> ordered_ids;
    std::vector<float> bounds;           // threshold + slack
    std::vector<double> wide_tests;      // rows in row_order, widened
};

ProfilePlan make_plan(const GapSource& source, float slack,
                      std::uint32_t large_dim) {
    require(source.gap != nullptr && source.tests != nullptr,
            Errc::bad_argument, "gap prune: null source");
    const EmbeddingSet& tests = *source.tests;
    require(!tests.empty(), Errc::empty_input, "gap prune: empty test set");
    require(tests.normalized, Errc::bad_argument,
            "gap prune: test set is not normalized");
    require(tests.dim == large_dim, Errc::dim_mismatch,
            "gap prune: test dim " + std::to_string(tests.dim) +
                " vs train dim " + std::to_string(large_dim));

    std::unordered_map<std::uint64_t, float> threshold_of;
    threshold_of.reserve(source.gap->test_ids.size());
    for (std::size_t i = 0; i < source.gap->test_ids.size(); ++i)
        threshold_of[source.gap->test_ids[i]] = source.gap->thresholds[i];

    ProfilePlan plan;
    plan.tests = &tests;
    plan.row_order.resize(tests.count());
    std::iota(plan.row_order.begin(), plan.row_order.end(), 0u);
    std::sort(plan.row_order.begin(), plan.row_order.end(),
              [&](std::uint32_t a, std::uint32_t b) {
                  return tests.ids[a] < tests.ids[b];
              });
    plan.ordered_ids.reserve(tests.count());
    plan.bounds.reserve(tests.count());
    plan.wide_tests.resize(tests.count() * static_cast<std::size_t>(tests.dim));
    for (std::size_t i = 0; i < plan.row_order.size(); ++i) {
        const std::uint32_t row = plan.row_order[i];
        const std::uint64_t id = tests.ids[row];
        auto it = threshold_of.find(id);
        require(it != threshold_of.end(), Errc::missing_threshold,
                "gap prune: no threshold for test id " + std::to_string(id));
        plan.ordered_ids.push_back(id);
        plan.bounds.push_back(it->second + slack);
        kernels::widen_rows(tests.row(row), tests.dim,
                            plan.wide_tests.data() + i * tests.dim);
    }
    return plan;
}

Violation scan_profile(const ProfilePlan& plan, const double* wide_row,
                       std::uint32_t dim) {
    for (std::size_t i = 0; i < plan.row_order.size(); ++i) {
        const float sim = kernels::similarity_from_dot(
            kernels::dot_accumulate_pre(plan.wide_tests.data() + i * dim,
                                        wide_row, dim));
        if (sim > plan.bounds[i])
            return Violation{true, plan.ordered_ids[i], sim};
    }
    return {};
}

void prune_chunk(const float* rows, const std::uint64_t* ids,
                 std::size_t n_rows, std::uint32_t dim,
                 std::span<const ProfilePlan> plans, PruneManifest& manifest,
                 std::vector<std::uint64_t>& profile_counts) {
    const std::size_t base = manifest.records.size();
    manifest.records.resize(base + n_rows);
    std::vector<std::uint64_t> chunk_counts(plans.size(), 0);
#pragma omp parallel
    {
        std::vector<std::uint64_t> local_counts(plans.size(), 0);
        std::vector<double> wide_row(dim);
#pragma omp for schedule(dynamic, 64) nowait
        for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(n_rows); ++r) {
            kernels::widen_rows(rows + static_cast<std::size_t>(r) * dim, dim,
                                wide_row.data());
            PruneRecord rec;
            rec.id = ids[r];
            rec.reason = PruneReason::gap;
            for (std::size_t p = 0; p < plans.size(); ++p) {
                const Violation v = scan_profile(plans[p], wide_row.data(), dim);
                if (!v.found) continue;
                ++local_counts[p];
                if (rec.action == PruneAction::retained) {
                    rec.action = PruneAction::pruned;
                    rec.test_id = v.test_id;
                    rec.similarity = v.similarity;
                }
            }
            manifest.records[base + static_cast<std::size_t>(r)] = rec;
        }
#pragma omp critical
        for (std::size_t p = 0; p < plans.size(); ++p)
            chunk_counts[p] += local_counts[p];
    }
    for (std::size_t p = 0; p < plans.size(); ++p)
        profile_counts[p] += chunk_counts[p];
}

void finish_manifest(PruneManifest& manifest,
                     const std::vector<std::uint64_t>& profile_counts,
                     const GapPruneOptions& options, bool combined) {
    std::uint64_t pruned = 0;
    for (const PruneRecord& rec : manifest.records)
        if (rec.action == PruneAction::pruned) ++pruned;
    manifest.summary.reason = PruneReason::gap;
    manifest.summary.pruned = pruned;
    manifest.summary.retained = manifest.records.size() - pruned;
    manifest.summary.config_hash = options.config_hash;
    {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.9g",
                      static_cast<double>(options.slack));
        manifest.summary.extra.emplace_back("slack", buf);
    }
    if (combined) {
        std::string counts = "[";
        for (std::size_t p = 0; p < profile_counts.size(); ++p) {
            if (p) counts += ",";
            counts += std::to_string(profile_counts[p]);
        }
        counts += "]";
        manifest.summary.extra.emplace_back("profile_violations", counts);
    }
    manifest.validate();
}

PruneManifest run_prune(const DatasetRef& large,
                        std::span<const GapSource> sources,
                        const GapPruneOptions& options, bool combined) {
    require(!sources.empty(), Errc::empty_input, "gap prune: no profiles");
    require(options.slack >= 0.0f, Errc::bad_argument,
            "gap prune: slack must be non-negative");
    DatasetScanner scanner(large, options.chunk_rows);
    std::vector<ProfilePlan> plans;
    plans.reserve(sources.size());
    for (const GapSource& source : sources)
        plans.push_back(make_plan(source, options.slack, scanner.dim()));

    PruneManifest manifest;
    manifest.records.reserve(scanner.total_rows());
    std::vector<std::uint64_t> profile_counts(sources.size(), 0);
    while (auto chunk = scanner.next())
        prune_chunk(chunk->rows, chunk->ids, chunk->size, scanner.dim(), plans,
                    manifest, profile_counts);
    finish_manifest(manifest, profile_counts, options, combined);
    return manifest;
}

PruneManifest run_prune(const EmbeddingSet& large,
                        std::span<const GapSource> sources,
                        const GapPruneOptions& options, bool combined) {
    require(!sources.empty(), Errc::empty_input, "gap prune: no profiles");
    require(options.slack >= 0.0f, Errc::bad_argument,
            "gap prune: slack must be non-negative");
    require(large.normalized, Errc::bad_argument,
            "gap prune: training set is not normalized");
    std::vector<ProfilePlan> plans;
    plans.reserve(sources.size());
    for (const GapSource& source : sources)
        plans.push_back(make_plan(source, options.slack, large.dim));

    PruneManifest manifest;
    manifest.records.reserve(large.count());
    std::vector<std::uint64_t> profile_counts(sources.size(), 0);
    prune_chunk(large.vectors.data(), large.ids.data(), large.count(),
                large.dim, plans, manifest, profile_counts);
    finish_manifest(manifest, profile_counts, options, combined);
    return manifest;
}

} // namespace

PruneManifest gap_align_prune(const DatasetRef& large, const GapProfile& gap,
                              const EmbeddingSet& tests,
                              const GapPruneOptions& options) {
    const GapSource source{&gap, &tests};
    return run_prune(large, std::span<const GapSource>(&source, 1), options,
                     /*combined=*/false);
}

PruneManifest gap_align_prune(const EmbeddingSet& large, const GapProfile& gap,
                              const EmbeddingSet& tests,
                              const GapPruneOptions& options) {
    const GapSource source{&gap, &tests};
    return run_prune(large, std::span<const GapSource>(&source, 1), options,
                     /*combined=*/false);
}

PruneManifest combined_prune(const DatasetRef& large,
                             std::span<const GapSource> sources,
                             const GapPruneOptions& options) {
    return run_prune(large, sources, options, /*combined=*/true);
}

PruneManifest combined_prune(const EmbeddingSet& large,
                             std::span<const GapSource> sources,
                             const GapPruneOptions& options) {
    return run_prune(large, sources, options, /*combined=*/true);
}

namespace {

// Max over retained rows per test sample. A plain max is order- and
// thread-independent, so per-thread partials can merge freely.
class RetainedGap {
public:
    RetainedGap(const EmbeddingSet& tests,
                std::span<const std::uint64_t> pruned_ids)
        : tests_(tests), maxima_(tests.count(), -2.0f),
          pruned_(pruned_ids.begin(), pruned_ids.end()),
          wide_tests_(tests.count() * static_cast<std::size_t>(tests.dim)) {
        for (std::size_t t = 0; t < tests.count(); ++t)
            kernels::widen_rows(tests.row(t), tests.dim,
                                wide_tests_.data() + t * tests.dim);
    }

    void absorb(const float* rows, const std::uint64_t* ids, std::size_t n_rows,
                std::uint32_t dim) {
#pragma omp parallel
        {
            std::vector<float> local(maxima_.size(), -2.0f);
            std::vector<double> wide_row(dim);
#pragma omp for schedule(dynamic, 64) nowait
            for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(n_rows);
                 ++r) {
                if (pruned_.contains(ids[r])) continue;
                kernels::widen_rows(rows + static_cast<std::size_t>(r) * dim,
                                    dim, wide_row.data());
                for (std::size_t t = 0; t < tests_.count(); ++t) {
                    const float sim = kernels::similarity_from_dot(
                        kernels::dot_accumulate_pre(
                            wide_tests_.data() + t * dim, wide_row.data(),
                            dim));
                    if (sim > local[t]) local[t] = sim;
                }
            }
#pragma omp critical
            for (std::size_t t = 0; t < maxima_.size(); ++t)
                if (local[t] > maxima_[t]) maxima_[t] = local[t];
        }
    }

    GapEqualityCheck compare(const GapProfile& gap) const {
        std::unordered_map<std::uint64_t, float> threshold_of;
        threshold_of.reserve(gap.test_ids.size());
        for (std::size_t i = 0; i < gap.test_ids.size(); ++i)
            threshold_of[gap.test_ids[i]] = gap.thresholds[i];

        GapEqualityCheck check;
        for (std::size_t t = 0; t < tests_.count(); ++t) {
            auto it = threshold_of.find(tests_.ids[t]);
            require(it != threshold_of.end(), Errc::missing_threshold,
                    "verify_gap_equality: no threshold for test id " +
                        std::to_string(tests_.ids[t]));
            require(maxima_[t] > -2.0f, Errc::empty_input,
                    "verify_gap_equality: no retained rows");
            const double diff = static_cast<double>(maxima_[t]) -
                                static_cast<double>(it->second);
            check.max_over = std::max(check.max_over, diff);
            if (std::abs(diff) > check.max_abs_diff) {
                check.max_abs_diff = std::abs(diff);
                check.worst_test_id = tests_.ids[t];
            }
        }
        return check;
    }

private:
    const EmbeddingSet& tests_;
    std::vector<float> maxima_;
    std::unordered_set<std::uint64_t> pruned_;
    std::vector<double> wide_tests_;
};

} // namespace

GapEqualityCheck verify_gap_equality(const DatasetRef& large,
                                     std::span<const std::uint64_t> pruned_ids,
                                     const GapProfile& gap,
                                     const EmbeddingSet& tests,
                                     std::size_t chunk_rows) {
    DatasetScanner scanner(large, chunk_rows);
    RetainedGap state(tests, pruned_ids);
    while (auto chunk = scanner.next())
        state.absorb(chunk->rows, chunk->ids, chunk->size, scanner.dim());
    return state.compare(gap);
}

GapEqualityCheck verify_gap_equality(const EmbeddingSet& large,
                                     std::span<const std::uint64_t> pruned_ids,
                                     const GapProfile& gap,
                                     const EmbeddingSet& tests) {
    RetainedGap state(tests, pruned_ids);
    state.absorb(large.vectors.data(), large.ids.data(), large.count(),
                 large.dim);
    return state.compare(gap);
}

} // namespace simgap
