#include "simgap/order_pruner.hpp"

#include <algorithm>
#include <unordered_set>

#include "simgap/errors.hpp"
#include "simgap/nn_search.hpp"
#include "simgap/rng.hpp"

namespace simgap {

namespace {

struct Candidate {
    float similarity = 0.0f;
    std::uint64_t rand_key = 0;
    std::uint64_t id = 0;
};

// True when `a` is pruned before `b`; a strict total order (id tie-break),
// so any boundary tie resolves to the smaller id.
bool prune_before(OrderPruneMode mode, const Candidate& a, const Candidate& b) {
    switch (mode) {
        case OrderPruneMode::near:
            if (a.similarity != b.similarity) return a.similarity > b.similarity;
            return a.id < b.id;
        case OrderPruneMode::far:
            if (a.similarity != b.similarity) return a.similarity < b.similarity;
            return a.id < b.id;
        case OrderPruneMode::rand:
            if (a.rand_key != b.rand_key) return a.rand_key < b.rand_key;
            return a.id < b.id;
    }
    return false;
}

// Bounded selection of the `count` earliest candidates under prune_before.
class BoundedSelection {
public:
    BoundedSelection(OrderPruneMode mode, std::uint64_t count)
        : mode_(mode), count_(count) {
        heap_.reserve(count);
    }

    void offer(const Candidate& candidate) {
        if (count_ == 0) return;
        auto last_of = [this](const Candidate& a, const Candidate& b) {
            return prune_before(mode_, a, b);
        };
        if (heap_.size() < count_) {
            heap_.push_back(candidate);
            std::push_heap(heap_.begin(), heap_.end(), last_of);
            return;
        }
        if (!prune_before(mode_, candidate, heap_.front())) return;
        std::pop_heap(heap_.begin(), heap_.end(), last_of);
        heap_.back() = candidate;
        std::push_heap(heap_.begin(), heap_.end(), last_of);
    }

    std::unordered_set<std::uint64_t> pruned_ids() const {
        std::unordered_set<std::uint64_t> out;
        out.reserve(heap_.size());
        for (const Candidate& c : heap_) out.insert(c.id);
        return out;
    }

private:
    OrderPruneMode mode_;
    std::uint64_t count_;
    std::vector<Candidate> heap_;
};

PruneReason reason_of(OrderPruneMode mode) {
    switch (mode) {
        case OrderPruneMode::near: return PruneReason::near;
        case OrderPruneMode::far: return PruneReason::far;
        case OrderPruneMode::rand: return PruneReason::rand;
    }
    return PruneReason::rand;
}

// Similarity-ordered selection needs the per-sample hits anyway for manifest
// attribution, so the manifest is assembled from them after one pass.
PruneManifest select_by_similarity(const TrainSideResult& similarities,
                                   const OrderPruneSpec& spec,
                                   PruneReason reason) {
    const std::size_t n = similarities.train_ids.size();
    require(spec.count <= n, Errc::bad_argument,
            "order_prune: count " + std::to_string(spec.count) +
                " exceeds training size " + std::to_string(n));

    BoundedSelection selection(spec.mode, spec.count);
    for (std::size_t i = 0; i < n; ++i)
        selection.offer({similarities.hits[i].similarity, 0,
                         similarities.train_ids[i]});
    const auto pruned = selection.pruned_ids();

    PruneManifest manifest;
    manifest.records.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        PruneRecord rec;
        rec.id = similarities.train_ids[i];
        rec.reason = reason;
        if (pruned.contains(rec.id)) {
            rec.action = PruneAction::pruned;
            rec.test_id = similarities.hits[i].test_id;
            rec.similarity = similarities.hits[i].similarity;
        }
        manifest.records.push_back(rec);
    }
    manifest.summary.reason = reason;
    manifest.summary.pruned = pruned.size();
    manifest.summary.retained = n - pruned.size();
    manifest.summary.config_hash = spec.config_hash;
    manifest.validate();
    return manifest;
}

PruneManifest select_random(std::span<const std::uint64_t> train_ids,
                            const OrderPruneSpec& spec) {
    const std::size_t n = train_ids.size();
    require(spec.count <= n, Errc::bad_argument,
            "order_prune: count " + std::to_string(spec.count) +
                " exceeds training size " + std::to_string(n));

    BoundedSelection selection(OrderPruneMode::rand, spec.count);
    for (std::uint64_t id : train_ids)
        selection.offer({0.0f, random_subset_key(spec.seed, id), id});
    const auto pruned = selection.pruned_ids();

    PruneManifest manifest;
    manifest.records.reserve(n);
    for (std::uint64_t id : train_ids) {
        PruneRecord rec;
        rec.id = id;
        rec.reason = PruneReason::rand;
        if (pruned.contains(id)) rec.action = PruneAction::pruned;
        manifest.records.push_back(rec);
    }
    manifest.summary.reason = PruneReason::rand;
    manifest.summary.pruned = pruned.size();
    manifest.summary.retained = n - pruned.size();
    manifest.summary.config_hash = spec.config_hash;
    manifest.summary.seed = spec.seed;
    manifest.summary.extra.emplace_back(
        "algorithm", std::string("\"") + kRandAlgorithmId + "\"");
    manifest.validate();
    return manifest;
}

void check_tests(OrderPruneMode mode, std::span<const EmbeddingSet> tests) {
    if (mode == OrderPruneMode::rand) return;
    require(!tests.empty(), Errc::empty_input,
            "order_prune: near/far modes need at least one test set");
}

} // namespace

PruneManifest order_prune(const DatasetRef& train, const OrderPruneSpec& spec,
                          std::span<const EmbeddingSet> tests) {
    check_tests(spec.mode, tests);
    if (spec.mode == OrderPruneMode::rand) {
        DatasetScanner scanner(train, spec.chunk_rows);
        std::vector<std::uint64_t> ids;
        ids.reserve(scanner.total_rows());
        while (auto chunk = scanner.next())
            ids.insert(ids.end(), chunk->ids, chunk->ids + chunk->size);
        return select_random(ids, spec);
    }
    const TrainSideResult similarities =
        train_side_similarity(train, tests, spec.chunk_rows);
    return select_by_similarity(similarities, spec, reason_of(spec.mode));
}

PruneManifest order_prune(const EmbeddingSet& train, const OrderPruneSpec& spec,
                          std::span<const EmbeddingSet> tests) {
    check_tests(spec.mode, tests);
    if (spec.mode == OrderPruneMode::rand)
        return select_random(train.ids, spec);
    const TrainSideResult similarities = train_side_similarity(train, tests);
    return select_by_similarity(similarities, spec, reason_of(spec.mode));
}

namespace {

OrderPruneSpec coreset_spec(std::uint64_t total, std::uint64_t target_size,
                            std::size_t chunk_rows,
                            const std::string& config_hash) {
    require(target_size <= total, Errc::bad_argument,
            "extract_coreset: target size " + std::to_string(target_size) +
                " exceeds training size " + std::to_string(total));
    OrderPruneSpec spec;
    spec.mode = OrderPruneMode::far;
    spec.count = total - target_size;
    spec.chunk_rows = chunk_rows;
    spec.config_hash = config_hash;
    return spec;
}

} // namespace

PruneManifest extract_coreset(const DatasetRef& train,
                              std::span<const EmbeddingSet> tests,
                              std::uint64_t target_size,
                              std::size_t chunk_rows,
                              const std::string& config_hash) {
    require(!tests.empty(), Errc::empty_input,
            "extract_coreset: needs at least one test set");
    const TrainSideResult similarities =
        train_side_similarity(train, tests, chunk_rows);
    const OrderPruneSpec spec = coreset_spec(similarities.train_ids.size(),
                                             target_size, chunk_rows,
                                             config_hash);
    return select_by_similarity(similarities, spec, PruneReason::coreset);
}

PruneManifest extract_coreset(const EmbeddingSet& train,
                              std::span<const EmbeddingSet> tests,
                              std::uint64_t target_size,
                              const std::string& config_hash) {
    require(!tests.empty(), Errc::empty_input,
            "extract_coreset: needs at least one test set");
    const TrainSideResult similarities = train_side_similarity(train, tests);
    const OrderPruneSpec spec = coreset_spec(similarities.train_ids.size(),
                                             target_size, kDefaultChunkRows,
                                             config_hash);
    return select_by_similarity(similarities, spec, PruneReason::coreset);
}

} // namespace simgap
