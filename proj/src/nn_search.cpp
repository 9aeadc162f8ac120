#include "simgap/nn_search.hpp"

#include <algorithm>
#include <cstddef>

#include "simgap/errors.hpp"
#include "simgap/kernels.hpp"

namespace simgap {

namespace {

// Queries are processed in blocks so a streamed reference row is reused from
// L1 across the whole block.
constexpr std::size_t kQueryBlock = 32;

// Bounded best-k set under hit_better. With k reached, a candidate replaces
// the current worst only if it beats it, so the final content is the unique
// k-best set no matter the insertion order.
class BoundedTopK {
public:
    explicit BoundedTopK(std::uint32_t k) : k_(k) { heap_.reserve(k); }

    void offer(std::uint64_t id, float similarity) {
        const NeighborHit candidate{id, similarity};
        if (heap_.size() < k_) {
            heap_.push_back(candidate);
            std::push_heap(heap_.begin(), heap_.end(), hit_better);
            return;
        }
        if (!hit_better(candidate, heap_.front())) return;
        std::pop_heap(heap_.begin(), heap_.end(), hit_better);
        heap_.back() = candidate;
        std::push_heap(heap_.begin(), heap_.end(), hit_better);
    }

    std::vector<NeighborHit> finish() {
        std::sort(heap_.begin(), heap_.end(), hit_better);
        return std::move(heap_);
    }

private:
    std::uint32_t k_;
    std::vector<NeighborHit> heap_;
};

void absorb_chunk(const EmbeddingSet& queries, const float* rows,
                  const std::uint64_t* ids, std::size_t n_rows,
                  std::vector<BoundedTopK>& states) {
    const std::size_t n_queries = queries.count();
    const std::uint32_t dim = queries.dim;
    const std::ptrdiff_t n_blocks =
        static_cast<std::ptrdiff_t>((n_queries + kQueryBlock - 1) / kQueryBlock);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t b = 0; b < n_blocks; ++b) {
        const std::size_t q_begin = static_cast<std::size_t>(b) * kQueryBlock;
        const std::size_t q_end = std::min(q_begin + kQueryBlock, n_queries);
        const std::size_t block_size = q_end - q_begin;

        // conversions hoisted out of the scan; the widened kernels produce
        // the same bits as the float entry points
        std::vector<double> wide_queries(block_size * dim);
        for (std::size_t q = 0; q < block_size; ++q)
            kernels::widen_rows(queries.row(q_begin + q), dim,
                                wide_queries.data() + q * dim);
        std::vector<double> wide_row(dim);

        for (std::size_t r = 0; r < n_rows; ++r) {
            kernels::widen_rows(rows + r * dim, dim, wide_row.data());
            const std::uint64_t row_id = ids[r];
            for (std::size_t q = 0; q < block_size; ++q) {
                const double dot = kernels::dot_accumulate_pre(
                    wide_queries.data() + q * dim, wide_row.data(), dim);
                states[q_begin + q].offer(row_id,
                                          kernels::similarity_from_dot(dot));
            }
        }
    }
}

NearestNeighborProfile finish_profile(const EmbeddingSet& queries,
                                      std::uint32_t k,
                                      std::vector<BoundedTopK>& states) {
    NearestNeighborProfile profile;
    profile.k = k;
    profile.query_ids = queries.ids;
    profile.hits.reserve(queries.count() * k);
    for (auto& state : states) {
        auto best = state.finish();
        profile.hits.insert(profile.hits.end(), best.begin(), best.end());
    }
    return profile;
}

void check_topk_preconditions(const EmbeddingSet& queries, std::uint32_t dim,
                              std::uint64_t reference_rows, std::uint32_t k) {
    require(!queries.empty(), Errc::empty_input, "topk_search: empty query set");
    require(queries.normalized, Errc::bad_argument,
            "topk_search: queries are not normalized");
    require(reference_rows > 0, Errc::empty_input,
            "topk_search: empty reference");
    require(queries.dim == dim, Errc::dim_mismatch,
            "topk_search: query dim " + std::to_string(queries.dim) +
                " vs reference dim " + std::to_string(dim));
    require(k >= 1, Errc::bad_argument, "topk_search: k must be positive");
    require(k <= reference_rows, Errc::bad_argument,
            "topk_search: k " + std::to_string(k) + " exceeds reference size " +
                std::to_string(reference_rows));
}

} // namespace

NearestNeighborProfile topk_search(const NNQuery& query) {
    require(query.queries != nullptr, Errc::bad_argument,
            "topk_search: missing query set");
    DatasetScanner scanner(query.reference, query.chunk_rows);
    check_topk_preconditions(*query.queries, scanner.dim(),
                             scanner.total_rows(), query.k);
    std::vector<BoundedTopK> states(query.queries->count(),
                                    BoundedTopK(query.k));
    while (auto chunk = scanner.next())
        absorb_chunk(*query.queries, chunk->rows, chunk->ids, chunk->size,
                     states);
    return finish_profile(*query.queries, query.k, states);
}

NearestNeighborProfile topk_search(const EmbeddingSet& queries,
                                   const EmbeddingSet& reference,
                                   std::uint32_t k) {
    check_topk_preconditions(queries, reference.dim, reference.count(), k);
    require(reference.normalized, Errc::bad_argument,
            "topk_search: reference is not normalized");
    std::vector<BoundedTopK> states(queries.count(), BoundedTopK(k));
    absorb_chunk(queries, reference.vectors.data(), reference.ids.data(),
                 reference.count(), states);
    return finish_profile(queries, k, states);
}

namespace {

void check_train_side_preconditions(std::uint32_t train_dim,
                                    std::span<const EmbeddingSet> tests) {
    require(!tests.empty(), Errc::empty_input,
            "train_side_similarity: no test sets");
    for (const EmbeddingSet& t : tests) {
        require(!t.empty(), Errc::empty_input,
                "train_side_similarity: empty test set");
        require(t.normalized, Errc::bad_argument,
                "train_side_similarity: test set is not normalized");
        require(t.dim == train_dim, Errc::dim_mismatch,
                "train_side_similarity: test dim " + std::to_string(t.dim) +
                    " vs train dim " + std::to_string(train_dim));
    }
}

std::vector<std::vector<double>> widen_test_sets(
    std::span<const EmbeddingSet> tests) {
    std::vector<std::vector<double>> wide(tests.size());
    for (std::size_t s = 0; s < tests.size(); ++s) {
        wide[s].resize(tests[s].count() *
                       static_cast<std::size_t>(tests[s].dim));
        for (std::size_t j = 0; j < tests[s].count(); ++j)
            kernels::widen_rows(tests[s].row(j), tests[s].dim,
                                wide[s].data() + j * tests[s].dim);
    }
    return wide;
}

void train_side_chunk(const float* rows, const std::uint64_t* ids,
                      std::size_t n_rows, std::uint32_t dim,
                      std::span<const EmbeddingSet> tests,
                      std::span<const std::vector<double>> wide_tests,
                      TrainSideResult& out) {
    const std::size_t base = out.hits.size();
    out.hits.resize(base + n_rows);
    out.train_ids.insert(out.train_ids.end(), ids, ids + n_rows);
#pragma omp parallel
    {
        std::vector<double> wide_row(dim);
#pragma omp for schedule(dynamic, 64)
        for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(n_rows);
             ++r) {
            kernels::widen_rows(rows + static_cast<std::size_t>(r) * dim, dim,
                                wide_row.data());
            TrainSideHit best;
            for (std::uint32_t s = 0; s < tests.size(); ++s) {
                const EmbeddingSet& t = tests[s];
                for (std::size_t j = 0; j < t.count(); ++j) {
                    const float sim = kernels::similarity_from_dot(
                        kernels::dot_accumulate_pre(
                            wide_tests[s].data() + j * dim, wide_row.data(),
                            dim));
                    const std::uint64_t tid = t.ids[j];
                    const bool better =
                        sim > best.similarity ||
                        (sim == best.similarity &&
                         (s < best.test_set_index ||
                          (s == best.test_set_index && tid < best.test_id)));
                    if (better) best = {sim, tid, s};
                }
            }
            out.hits[base + static_cast<std::size_t>(r)] = best;
        }
    }
}

} // namespace

TrainSideResult train_side_similarity(const DatasetRef& train,
                                      std::span<const EmbeddingSet> tests,
                                      std::size_t chunk_rows) {
    DatasetScanner scanner(train, chunk_rows);
    require(scanner.total_rows() > 0, Errc::empty_input,
            "train_side_similarity: empty training set");
    check_train_side_preconditions(scanner.dim(), tests);
    const std::vector<std::vector<double>> wide_tests = widen_test_sets(tests);
    TrainSideResult result;
    result.train_ids.reserve(scanner.total_rows());
    result.hits.reserve(scanner.total_rows());
    while (auto chunk = scanner.next())
        train_side_chunk(chunk->rows, chunk->ids, chunk->size, scanner.dim(),
                         tests, wide_tests, result);
    return result;
}

TrainSideResult train_side_similarity(const EmbeddingSet& train,
                                      std::span<const EmbeddingSet> tests) {
    require(!train.empty(), Errc::empty_input,
            "train_side_similarity: empty training set");
    require(train.normalized, Errc::bad_argument,
            "train_side_similarity: train set is not normalized");
    check_train_side_preconditions(train.dim, tests);
    const std::vector<std::vector<double>> wide_tests = widen_test_sets(tests);
    TrainSideResult result;
    train_side_chunk(train.vectors.data(), train.ids.data(), train.count(),
                     train.dim, tests, wide_tests, result);
    return result;
}

} // namespace simgap
