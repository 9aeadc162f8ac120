#include "simgap/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "simgap/errors.hpp"
#include "simgap/rng.hpp"

namespace simgap {

namespace {

constexpr std::uint64_t kOracleScaleGuard = 100'000'000;

std::vector<double> random_unit(SplitMix64& rng, std::uint32_t dim) {
    std::vector<double> v(dim);
    double sq = 0.0;
    do {
        sq = 0.0;
        for (std::uint32_t j = 0; j < dim; ++j) {
            v[j] = rng.gaussian();
            sq += v[j] * v[j];
        }
    } while (sq == 0.0);
    const double inv = 1.0 / std::sqrt(sq);
    for (double& x : v) x *= inv;
    return v;
}

void push_unit_row(EmbeddingSet& set, const std::vector<double>& v,
                   std::uint64_t id) {
    double sq = 0.0;
    for (double x : v) sq += x * x;
    const double inv = 1.0 / std::sqrt(sq);
    for (double x : v) set.vectors.push_back(static_cast<float>(x * inv));
    set.ids.push_back(id);
}

} // namespace

void SynthSpec::validate() const {
    require(dim >= 2, Errc::bad_argument, "synth: dim must be at least 2");
    require(dispersion > 0.0f, Errc::bad_argument,
            "synth: dispersion must be positive");
    require(clusters > 0, Errc::bad_argument, "synth: need clusters");
    require(planted_distance > 0.0f && planted_distance < 2.0f,
            Errc::bad_argument, "synth: planted distance must be in (0, 2)");
    require(planted_duplicates == 0 || tests_per_cluster > 0,
            Errc::bad_argument,
            "synth: planted duplicates need test samples to copy");
}

SynthFixture generate(const SynthSpec& spec) {
    spec.validate();
    SplitMix64 rng(spec.seed);

    SynthFixture fx;
    for (EmbeddingSet* set : {&fx.small, &fx.large, &fx.tests}) {
        set->dim = spec.dim;
        set->normalized = true;
    }

    std::vector<std::vector<double>> centers;
    centers.reserve(spec.clusters);
    for (std::uint32_t c = 0; c < spec.clusters; ++c)
        centers.push_back(random_unit(rng, spec.dim));

    auto member_of = [&](const std::vector<double>& center) {
        std::vector<double> v(spec.dim);
        for (std::uint32_t j = 0; j < spec.dim; ++j)
            v[j] = center[j] +
                   static_cast<double>(spec.dispersion) * rng.gaussian();
        return v;
    };

    std::uint64_t next_train_id = 0;
    for (std::uint32_t c = 0; c < spec.clusters; ++c)
        for (std::uint32_t i = 0; i < spec.small_per_cluster; ++i)
            push_unit_row(fx.small, member_of(centers[c]), next_train_id++);

    // Large embeds the small rows verbatim, then adds its own members.
    fx.large.vectors = fx.small.vectors;
    fx.large.ids = fx.small.ids;
    for (std::uint32_t c = 0; c < spec.clusters; ++c)
        for (std::uint32_t i = 0; i < spec.large_extra_per_cluster; ++i)
            push_unit_row(fx.large, member_of(centers[c]), next_train_id++);

    std::uint64_t next_test_id = 0;
    for (std::uint32_t c = 0; c < spec.clusters; ++c)
        for (std::uint32_t i = 0; i < spec.tests_per_cluster; ++i)
            push_unit_row(fx.tests, member_of(centers[c]), next_test_id++);

    // Each planted duplicate sits at cos(theta) = 1 - planted_distance from a
    // round-robin test sample, along a direction orthogonalized against it.
    for (std::uint32_t p = 0; p < spec.planted_duplicates; ++p) {
        const std::size_t t = p % fx.tests.count();
        std::vector<double> base(spec.dim);
        for (std::uint32_t j = 0; j < spec.dim; ++j)
            base[j] = static_cast<double>(fx.tests.row(t)[j]);

        std::vector<double> ortho(spec.dim);
        double dot = 0.0, sq = 0.0;
        do {
            const std::vector<double> w = random_unit(rng, spec.dim);
            dot = 0.0;
            for (std::uint32_t j = 0; j < spec.dim; ++j)
                dot += w[j] * base[j];
            sq = 0.0;
            for (std::uint32_t j = 0; j < spec.dim; ++j) {
                ortho[j] = w[j] - dot * base[j];
                sq += ortho[j] * ortho[j];
            }
        } while (sq < 1e-12);
        const double inv = 1.0 / std::sqrt(sq);
        const double cos_theta = 1.0 - static_cast<double>(spec.planted_distance);
        const double sin_theta = std::sqrt(std::max(0.0, 1.0 - cos_theta * cos_theta));
        std::vector<double> dup(spec.dim);
        for (std::uint32_t j = 0; j < spec.dim; ++j)
            dup[j] = cos_theta * base[j] + sin_theta * ortho[j] * inv;
        push_unit_row(fx.large, dup, next_train_id++);
    }

    return fx;
}

namespace {

struct OracleHit {
    std::uint64_t id;
    float similarity;
};

float oracle_similarity(const float* a, const float* b, std::uint32_t dim) {
    double sum = 0.0;
    for (std::uint32_t j = 0; j < dim; ++j)
        sum += static_cast<double>(a[j]) * static_cast<double>(b[j]);
    if (sum > 1.0) sum = 1.0;
    if (sum < -1.0) sum = -1.0;
    return static_cast<float>(sum);
}

void check_oracle_scale(std::size_t queries, std::size_t reference) {
    require(static_cast<std::uint64_t>(queries) * reference <=
                kOracleScaleGuard,
            Errc::scale_guard, "oracle: instance exceeds the desk-scale guard");
}

} // namespace

NearestNeighborProfile oracle_topk(const EmbeddingSet& queries,
                                   const EmbeddingSet& reference,
                                   std::uint32_t k) {
    require(!queries.empty() && !reference.empty(), Errc::empty_input,
            "oracle_topk: empty input");
    require(queries.dim == reference.dim, Errc::dim_mismatch,
            "oracle_topk: dim mismatch");
    require(k >= 1 && k <= reference.count(), Errc::bad_argument,
            "oracle_topk: bad k");
    check_oracle_scale(queries.count(), reference.count());

    NearestNeighborProfile profile;
    profile.k = k;
    profile.query_ids = queries.ids;
    profile.hits.reserve(queries.count() * k);

    std::vector<OracleHit> all(reference.count());
    for (std::size_t q = 0; q < queries.count(); ++q) {
        for (std::size_t r = 0; r < reference.count(); ++r)
            all[r] = {reference.ids[r],
                      oracle_similarity(queries.row(q), reference.row(r),
                                        queries.dim)};
        std::sort(all.begin(), all.end(),
                  [](const OracleHit& x, const OracleHit& y) {
                      if (x.similarity != y.similarity)
                          return x.similarity > y.similarity;
                      return x.id < y.id;
                  });
        for (std::uint32_t i = 0; i < k; ++i)
            profile.hits.push_back({all[i].id, all[i].similarity});
    }
    return profile;
}

std::vector<std::uint64_t> oracle_gap_prune(const EmbeddingSet& large,
                                            const EmbeddingSet& small,
                                            const EmbeddingSet& tests) {
    require(!large.empty() && !small.empty() && !tests.empty(),
            Errc::empty_input, "oracle_gap_prune: empty input");
    require(large.dim == small.dim && large.dim == tests.dim,
            Errc::dim_mismatch, "oracle_gap_prune: dim mismatch");
    check_oracle_scale(tests.count(), large.count() + small.count());

    std::vector<std::uint64_t> pruned;
    std::vector<bool> is_pruned(large.count(), false);
    for (std::size_t t = 0; t < tests.count(); ++t) {
        float threshold = -2.0f;
        for (std::size_t s = 0; s < small.count(); ++s)
            threshold = std::max(
                threshold,
                oracle_similarity(tests.row(t), small.row(s), tests.dim));
        for (std::size_t x = 0; x < large.count(); ++x) {
            if (is_pruned[x]) continue;
            if (oracle_similarity(tests.row(t), large.row(x), tests.dim) >
                threshold)
                is_pruned[x] = true;
        }
    }
    for (std::size_t x = 0; x < large.count(); ++x)
        if (is_pruned[x]) pruned.push_back(large.ids[x]);
    std::sort(pruned.begin(), pruned.end());
    return pruned;
}

} // namespace simgap
