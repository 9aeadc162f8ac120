// Kernel benchmark: the OpenMP-tiled top-1 scan against the serial
// reference scan, with an agreement check on the results.
//
//   bench_scan [rows] [queries] [dim] [repeats]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <omp.h>

#include "simgap/embedding_set.hpp"
#include "simgap/kernels.hpp"
#include "simgap/nn_search.hpp"
#include "simgap/profile.hpp"
#include "simgap/rng.hpp"
#include "simgap/synthgen.hpp"

using namespace simgap;

namespace {

EmbeddingSet random_rows(std::uint64_t seed, std::size_t count,
                         std::uint32_t dim, std::uint64_t first_id) {
    SplitMix64 rng(seed);
    EmbeddingSet set;
    set.dim = dim;
    set.normalized = true;
    set.vectors.resize(count * dim);
    set.ids.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        float* row = set.row(i);
        double sq = 0.0;
        for (std::uint32_t j = 0; j < dim; ++j) {
            row[j] = static_cast<float>(rng.gaussian());
            sq += static_cast<double>(row[j]) * static_cast<double>(row[j]);
        }
        const double inv = 1.0 / std::sqrt(sq);
        for (std::uint32_t j = 0; j < dim; ++j)
            row[j] = static_cast<float>(row[j] * inv);
        set.ids[i] = first_id + i;
    }
    return set;
}

// Serial reference: plain double accumulator, one thread, no tiling.
NearestNeighborProfile serial_top1(const EmbeddingSet& queries,
                                   const EmbeddingSet& reference) {
    NearestNeighborProfile profile;
    profile.k = 1;
    profile.query_ids = queries.ids;
    profile.hits.resize(queries.count());
    for (std::size_t q = 0; q < queries.count(); ++q) {
        NeighborHit best{0, -2.0f};
        for (std::size_t r = 0; r < reference.count(); ++r) {
            const double dot = kernels::dot_reference(
                queries.row(q), reference.row(r), queries.dim);
            const NeighborHit candidate{
                reference.ids[r], kernels::similarity_from_dot(dot)};
            if (hit_better(candidate, best)) best = candidate;
        }
        profile.hits[q] = best;
    }
    return profile;
}

double seconds(const std::chrono::steady_clock::time_point& start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
}

} // namespace

int main(int argc, char** argv) {
    const std::size_t rows = argc > 1 ? std::strtoull(argv[1], nullptr, 10)
                                      : 200000;
    const std::size_t n_queries =
        argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 256;
    const std::uint32_t dim =
        argc > 3 ? static_cast<std::uint32_t>(std::strtoul(argv[3], nullptr, 10))
                 : 256;
    const int repeats = argc > 4 ? std::atoi(argv[4]) : 3;

    std::printf("reference %zu rows, %zu queries, dim %u, %d threads\n", rows,
                n_queries, dim, omp_get_max_threads());

    const EmbeddingSet reference = random_rows(1, rows, dim, 0);
    const EmbeddingSet queries = random_rows(2, n_queries, dim, 1u << 20);
    const double flops =
        2.0 * static_cast<double>(rows) * static_cast<double>(n_queries) *
        static_cast<double>(dim);

    double best_parallel = 1e300;
    NearestNeighborProfile parallel_profile;
    for (int r = 0; r < repeats; ++r) {
        const auto start = std::chrono::steady_clock::now();
        parallel_profile = topk_search(queries, reference, 1);
        best_parallel = std::min(best_parallel, seconds(start));
    }
    std::printf("tiled/openmp : %8.3f s  %7.2f GFLOP/s\n", best_parallel,
                flops / best_parallel / 1e9);

    double best_serial = 1e300;
    NearestNeighborProfile serial_profile;
    for (int r = 0; r < std::max(1, repeats / 3); ++r) {
        const auto start = std::chrono::steady_clock::now();
        serial_profile = serial_top1(queries, reference);
        best_serial = std::min(best_serial, seconds(start));
    }
    std::printf("serial ref   : %8.3f s  %7.2f GFLOP/s  (x%.2f)\n",
                best_serial, flops / best_serial / 1e9,
                best_serial / best_parallel);

    std::size_t mismatches = 0;
    double worst = 0.0;
    for (std::size_t i = 0; i < parallel_profile.hits.size(); ++i) {
        if (parallel_profile.hits[i].neighbor_id !=
            serial_profile.hits[i].neighbor_id)
            ++mismatches;
        worst = std::max(
            worst,
            std::abs(static_cast<double>(parallel_profile.hits[i].similarity) -
                     static_cast<double>(serial_profile.hits[i].similarity)));
    }
    std::printf("agreement    : %zu id mismatches, max |sim diff| %.3g\n",
                mismatches, worst);
    return mismatches == 0 && worst <= 1e-6 ? 0 : 1;
}
