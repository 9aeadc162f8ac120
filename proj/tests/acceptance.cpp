// Acceptance suite: one line per criterion, nonzero exit if any fails.
// Fixtures are regenerated on every run; the CLI binary is taken from
// SIMGAP_CLI (set by ctest) with build-tree fallbacks.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numeric>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <omp.h>

#include "simgap/analysis.hpp"
#include "simgap/dedup.hpp"
#include "simgap/gap_pruner.hpp"
#include "simgap/manifest.hpp"
#include "simgap/nn_search.hpp"
#include "simgap/order_pruner.hpp"
#include "simgap/profile.hpp"
#include "simgap/rng.hpp"
#include "simgap/sgem.hpp"
#include "simgap/synthgen.hpp"

#include "test_util.hpp"

using namespace simgap;
using simgap::test::TempDir;
using simgap::test::read_file;
using simgap::test::run_cli;

namespace {

int g_failures = 0;

void report(int index, const std::string& name, bool passed,
            const std::string& detail) {
    std::printf("%s  %d %-24s %s\n", passed ? "PASS" : "FAIL", index,
                name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!passed) ++g_failures;
}

double seconds_since(
    const std::chrono::steady_clock::time_point& start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
}

SynthFixture acceptance_fixture(std::uint64_t seed) {
    SynthSpec spec;
    spec.seed = seed;
    spec.dim = 64;
    spec.clusters = 20;
    spec.small_per_cluster = 100;      // |D_S| = 2,000
    spec.large_extra_per_cluster = 900;  // |D_L| = 20,000
    spec.tests_per_cluster = 25;       // |T| = 500
    spec.dispersion = 0.35f;
    return generate(spec);
}

// ------------------------------------------------------------------
// 1 + 2: gap equality within 1e-6 and exact agreement with the oracle

void criteria_gap_equality_and_maximality() {
    double worst_diff = 0.0;
    double elapsed = 0.0;
    bool oracle_match = true;
    bool violations_hold = true;

    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const SynthFixture fx = acceptance_fixture(seed);

        const auto start = std::chrono::steady_clock::now();
        const GapProfile gap = compute_gap(fx.small, fx.tests);
        const PruneManifest manifest = gap_align_prune(fx.large, gap, fx.tests);
        const GapEqualityCheck check = verify_gap_equality(
            fx.large, manifest.pruned_ids(), gap, fx.tests);
        elapsed += seconds_since(start);
        worst_diff = std::max(worst_diff, check.max_abs_diff);

        std::vector<std::uint64_t> got = manifest.pruned_ids();
        std::sort(got.begin(), got.end());
        const std::vector<std::uint64_t> want =
            oracle_gap_prune(fx.large, fx.small, fx.tests);
        oracle_match = oracle_match && got == want;

        // recorded violations against independently recomputed thresholds
        std::unordered_map<std::uint64_t, double> oracle_threshold;
        for (std::size_t t = 0; t < fx.tests.count(); ++t) {
            double best = -2.0;
            for (std::size_t s = 0; s < fx.small.count(); ++s) {
                double dot = 0.0;
                for (std::uint32_t j = 0; j < fx.tests.dim; ++j)
                    dot += static_cast<double>(fx.tests.row(t)[j]) *
                           static_cast<double>(fx.small.row(s)[j]);
                best = std::max(best, std::min(1.0, std::max(-1.0, dot)));
            }
            oracle_threshold[fx.tests.ids[t]] = best;
        }
        for (const PruneRecord& rec : manifest.records) {
            if (rec.action != PruneAction::pruned) continue;
            const double threshold = oracle_threshold.at(*rec.test_id);
            if (!(static_cast<double>(*rec.similarity) > threshold - 1e-6))
                violations_hold = false;
        }
    }

    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "max |s_i(pruned) - s_i(small)| = %.3g over 10 seeds, "
                  "compute %.2f s (limit 10 s, %d threads)",
                  worst_diff, elapsed, omp_get_max_threads());
    report(1, "gap-equality", worst_diff <= 1e-6 && elapsed < 10.0, detail);

    std::snprintf(detail, sizeof(detail),
                  "pruned ids %s oracle; recorded violations %s",
                  oracle_match ? "equal" : "DIFFER FROM",
                  violations_hold ? "exceed their thresholds" : "FAIL");
    report(2, "maximality", oracle_match && violations_hold, detail);
}

// ------------------------------------------------------------------
// 3: exact top-1/top-5 against the oracle, byte-identical across threads

void criterion_nn_exactness() {
    const EmbeddingSet reference = simgap::test::random_unit_set(42, 5000, 128);
    const EmbeddingSet queries =
        simgap::test::random_unit_set(43, 100, 128, 1000000);

    bool ids_exact = true;
    double worst = 0.0;
    bool bytes_stable = true;

    for (std::uint32_t k : {1u, 5u}) {
        const NearestNeighborProfile want = oracle_topk(queries, reference, k);
        std::string first_csv;
        for (int threads : {1, 2, 8}) {
            omp_set_num_threads(threads);
            const NearestNeighborProfile got =
                topk_search(queries, reference, k);
            const std::string csv = profile_csv_string(got);
            if (first_csv.empty())
                first_csv = csv;
            else
                bytes_stable = bytes_stable && csv == first_csv;
            for (std::size_t i = 0; i < got.hits.size(); ++i) {
                ids_exact = ids_exact &&
                            got.hits[i].neighbor_id == want.hits[i].neighbor_id;
                worst = std::max(
                    worst,
                    std::abs(static_cast<double>(got.hits[i].similarity) -
                             static_cast<double>(want.hits[i].similarity)));
            }
        }
    }
    omp_set_num_threads(omp_get_num_procs());

    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "ids %s, max |sim diff| = %.3g, threads {1,2,8} %s",
                  ids_exact ? "exact" : "MISMATCH", worst,
                  bytes_stable ? "byte-identical" : "UNSTABLE");
    report(3, "nn-exactness", ids_exact && worst <= 1e-6 && bytes_stable,
           detail);
}

// ------------------------------------------------------------------
// 4: monotonicity of nearest-neighbor similarity under set inclusion

void criterion_monotonicity() {
    SplitMix64 seeds(4242);
    double worst_violation = -1.0;
    for (int pair = 0; pair < 100; ++pair) {
        const std::uint64_t seed = seeds.next();
        const EmbeddingSet large =
            simgap::test::random_unit_set(seed, 400, 32);
        EmbeddingSet small = large;
        small.vectors.resize(150 * 32);
        small.ids.resize(150);
        const EmbeddingSet tests =
            simgap::test::random_unit_set(seed ^ 0x5a5a, 40, 32, 70000);

        const NearestNeighborProfile ps = topk_search(tests, small, 1);
        const NearestNeighborProfile pl = topk_search(tests, large, 1);
        for (std::size_t i = 0; i < tests.count(); ++i)
            worst_violation = std::max(
                worst_violation, static_cast<double>(ps.top1(i)) -
                                     static_cast<double>(pl.top1(i)));
    }
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "max (s_small - s_large) = %.3g over 100 nested pairs",
                  worst_violation);
    report(4, "monotonicity", worst_violation <= 1e-9, detail);
}

// ------------------------------------------------------------------
// 5: order pruning vs full-sort oracles; rand reproducibility

void criterion_order_pruning() {
    const EmbeddingSet train = simgap::test::random_unit_set(7, 1000, 32);
    const EmbeddingSet tests =
        simgap::test::random_unit_set(8, 50, 32, 80000);
    const TrainSideResult sims =
        train_side_similarity(train, std::span(&tests, 1));

    auto oracle = [&](OrderPruneMode mode, std::size_t count) {
        std::vector<std::size_t> order(train.count());
        std::iota(order.begin(), order.end(), 0u);
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) {
                      const float sa = sims.hits[a].similarity;
                      const float sb = sims.hits[b].similarity;
                      if (sa != sb)
                          return mode == OrderPruneMode::near ? sa > sb
                                                              : sa < sb;
                      return sims.train_ids[a] < sims.train_ids[b];
                  });
        std::vector<std::uint64_t> ids;
        for (std::size_t i = 0; i < count; ++i)
            ids.push_back(sims.train_ids[order[i]]);
        std::sort(ids.begin(), ids.end());
        return ids;
    };
    auto pruned_sorted = [](const PruneManifest& manifest) {
        std::vector<std::uint64_t> ids = manifest.pruned_ids();
        std::sort(ids.begin(), ids.end());
        return ids;
    };

    bool near_ok, far_ok;
    {
        OrderPruneSpec spec;
        spec.mode = OrderPruneMode::near;
        spec.count = 250;
        near_ok = pruned_sorted(order_prune(train, spec,
                                            std::span(&tests, 1))) ==
                  oracle(OrderPruneMode::near, 250);
        spec.mode = OrderPruneMode::far;
        far_ok = pruned_sorted(order_prune(train, spec,
                                           std::span(&tests, 1))) ==
                 oracle(OrderPruneMode::far, 250);
    }

    OrderPruneSpec rand_spec;
    rand_spec.mode = OrderPruneMode::rand;
    rand_spec.count = 250;
    rand_spec.seed = 20240917;
    const std::string once =
        manifest_jsonl_string(order_prune(train, rand_spec, {}));
    const std::string twice =
        manifest_jsonl_string(order_prune(train, rand_spec, {}));
    const bool rand_ok = once == twice;

    char detail[200];
    std::snprintf(detail, sizeof(detail),
                  "near %s, far %s, rand(seed) byte-identical %s "
                  "(integer-keyed selection, platform-independent)",
                  near_ok ? "== oracle" : "MISMATCH",
                  far_ok ? "== oracle" : "MISMATCH", rand_ok ? "yes" : "NO");
    report(5, "order-pruning", near_ok && far_ok && rand_ok, detail);
}

// ------------------------------------------------------------------
// 6: duplicate threshold boundary and greedy-oracle agreement

void criterion_dedup() {
    SynthSpec spec;
    spec.seed = 11;
    spec.dim = 32;
    spec.clusters = 5;
    spec.small_per_cluster = 5;
    spec.large_extra_per_cluster = 60;
    spec.tests_per_cluster = 8;
    spec.dispersion = 0.4f;
    spec.planted_duplicates = 10;

    DedupConfig cross;
    cross.epsilon = 0.05f;
    cross.mode = DedupConfig::Mode::cross_set;

    spec.planted_distance = 0.049f;
    const SynthFixture close = generate(spec);
    const std::uint64_t close_flags =
        count_near_duplicates(close.tests, close.large, cross).flagged_count;

    spec.planted_distance = 0.051f;
    const SynthFixture far = generate(spec);
    const std::uint64_t far_flags =
        count_near_duplicates(far.tests, far.large, cross).flagged_count;

    // 5,000-sample within-set fixture with genuine near-duplicate structure
    SynthSpec within_spec;
    within_spec.seed = 12;
    within_spec.dim = 32;
    within_spec.clusters = 50;
    within_spec.small_per_cluster = 0;
    within_spec.large_extra_per_cluster = 100;
    within_spec.tests_per_cluster = 1;
    within_spec.dispersion = 0.015f;
    const SynthFixture within_fx = generate(within_spec);

    DedupConfig within;
    within.epsilon = 0.05f;
    within.mode = DedupConfig::Mode::within_set;
    const PruneManifest manifest = within_set_dedup(within_fx.large, within);

    // quadratic greedy oracle, plain loops
    std::vector<std::size_t> order(within_fx.large.count());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return within_fx.large.ids[a] < within_fx.large.ids[b];
    });
    std::vector<std::size_t> retained;
    std::vector<std::uint64_t> oracle_pruned;
    for (std::size_t row : order) {
        bool duplicate = false;
        for (std::size_t keeper : retained) {
            double dot = 0.0;
            for (std::uint32_t j = 0; j < within_fx.large.dim; ++j)
                dot += static_cast<double>(within_fx.large.row(row)[j]) *
                       static_cast<double>(within_fx.large.row(keeper)[j]);
            dot = std::min(1.0, std::max(-1.0, dot));
            if (1.0 - static_cast<double>(static_cast<float>(dot)) < 0.05) {
                duplicate = true;
                break;
            }
        }
        if (duplicate)
            oracle_pruned.push_back(within_fx.large.ids[row]);
        else
            retained.push_back(row);
    }
    std::sort(oracle_pruned.begin(), oracle_pruned.end());
    std::vector<std::uint64_t> got = manifest.pruned_ids();
    std::sort(got.begin(), got.end());
    const bool within_ok = got == oracle_pruned && !oracle_pruned.empty();

    char detail[200];
    std::snprintf(detail, sizeof(detail),
                  "distance 0.049: %llu/10 flagged, 0.051: %llu/10; "
                  "within-set on %zu rows %s greedy oracle (%zu pruned)",
                  static_cast<unsigned long long>(close_flags),
                  static_cast<unsigned long long>(far_flags),
                  within_fx.large.count(),
                  within_ok ? "==" : "!=", oracle_pruned.size());
    report(6, "dedup-boundary",
           close_flags == 10 && far_flags == 0 && within_ok, detail);
}

// ------------------------------------------------------------------
// 7: analysis identities

void criterion_analysis() {
    SplitMix64 rng(77);
    bool ok = true;
    std::string note;

    std::vector<float> values(20000);
    for (float& v : values)
        v = static_cast<float>(2.0 * rng.uniform() - 1.0);
    const Histogram hist = build_histogram(values);
    const std::uint64_t counted =
        std::accumulate(hist.counts.begin(), hist.counts.end(),
                        std::uint64_t{0});
    if (hist.total != values.size() || counted != values.size()) {
        ok = false;
        note += "histogram totals; ";
    }

    std::vector<std::uint8_t> correct(values.size());
    for (auto& c : correct) c = rng.uniform() < 0.42 ? 1 : 0;
    const BinnedAccuracy bins = bin_accuracy(values, correct);
    double weighted = 0.0;
    for (std::size_t j = 0; j < bins.bins(); ++j)
        weighted += static_cast<double>(bins.counts[j]) * bins.accuracy[j];
    weighted /= static_cast<double>(bins.total);
    if (std::abs(weighted - bins.overall_accuracy) > 1e-6) {
        ok = false;
        note += "weighted-mean identity; ";
    }

    const EmbeddingSet reference = simgap::test::random_unit_set(78, 600, 24);
    const EmbeddingSet queries =
        simgap::test::random_unit_set(79, 90, 24, 50000);
    const NearestNeighborProfile profile = topk_search(queries, reference, 1);
    if (provenance_percentage(profile, profile) != 0.0) {
        ok = false;
        note += "provenance(p,p) != 0; ";
    }

    // Spearman vs naive quadratic ranking
    std::vector<float> a(1000), b(1000);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = static_cast<float>(rng.gaussian());
        b[i] = static_cast<float>(
            std::round((0.8 * a[i] + rng.gaussian()) * 8.0) / 8.0);
    }
    auto naive_ranks = [](const std::vector<float>& v) {
        std::vector<double> ranks(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            std::size_t less = 0, equal = 0;
            for (std::size_t j = 0; j < v.size(); ++j) {
                less += v[j] < v[i];
                equal += v[j] == v[i];
            }
            ranks[i] = static_cast<double>(less) +
                       (static_cast<double>(equal) + 1.0) / 2.0;
        }
        return ranks;
    };
    const std::vector<double> ra = naive_ranks(a), rb = naive_ranks(b);
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= static_cast<double>(ra.size());
    mb /= static_cast<double>(rb.size());
    double cov = 0, va = 0, vb = 0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        cov += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma) * (ra[i] - ma);
        vb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (std::abs(rank_correlation(a, b) - cov / std::sqrt(va * vb)) > 1e-9) {
        ok = false;
        note += "spearman oracle; ";
    }

    // boundary classification on a gap fixture
    SynthSpec spec;
    spec.seed = 80;
    spec.dim = 32;
    spec.clusters = 10;
    spec.small_per_cluster = 30;
    spec.large_extra_per_cluster = 120;
    spec.tests_per_cluster = 6;
    spec.dispersion = 0.3f;
    const SynthFixture fx = generate(spec);
    const GapProfile gap = compute_gap(fx.small, fx.tests);
    const PruneManifest manifest = gap_align_prune(fx.large, gap, fx.tests);
    std::unordered_set<std::uint64_t> pruned;
    for (std::uint64_t id : manifest.pruned_ids()) pruned.insert(id);
    const NormalizedSimilarityReport normsim = normalized_similarity(
        fx.large, fx.tests, denominators_from(gap),
        NormalizationMode::small_gap);
    for (const auto& rec : normsim.records) {
        const bool above = rec.normalized > 1.0;
        if (above != pruned.contains(rec.sample_id)) {
            ok = false;
            note += "normalized boundary; ";
            break;
        }
    }

    report(7, "analysis-identities", ok,
           ok ? "histogram totals, weighted mean, provenance(p,p)=0, "
                "spearman oracle, normalized>1 <=> pruned"
              : note);
}

// ------------------------------------------------------------------
// 8: streamed throughput, 1M x 256 reference vs 1,000 queries, top-1

void criterion_throughput() {
    TempDir dir("acceptance_throughput");
    const std::uint32_t dim = 256;
    const std::size_t total_rows = 1000000;
    const std::size_t rows_per_shard = 65536;

    SplitMix64 rng(2026);
    std::size_t written = 0;
    int shard_index = 0;
    DatasetRef reference;
    reference.label = "throughput";
    while (written < total_rows) {
        const std::size_t n = std::min(rows_per_shard, total_rows - written);
        EmbeddingSet shard;
        shard.dim = dim;
        shard.normalized = true;
        shard.vectors.resize(n * dim);
        shard.ids.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            double sq = 0.0;
            float* row = shard.row(i);
            for (std::uint32_t j = 0; j < dim; ++j) {
                row[j] = static_cast<float>(rng.gaussian());
                sq += static_cast<double>(row[j]) *
                      static_cast<double>(row[j]);
            }
            const double inv = 1.0 / std::sqrt(sq);
            for (std::uint32_t j = 0; j < dim; ++j)
                row[j] = static_cast<float>(row[j] * inv);
            shard.ids[i] = written + i;
        }
        char name[32];
        std::snprintf(name, sizeof(name), "ref_%03d.sgem", shard_index++);
        write_shard(dir / name, shard);
        reference.shard_paths.push_back(dir / name);
        written += n;
    }

    const EmbeddingSet queries =
        simgap::test::random_unit_set(2027, 1000, dim, 5000000);

    NNQuery query;
    query.queries = &queries;
    query.reference = reference;
    query.k = 1;
    query.chunk_rows = 65536;

    const auto start = std::chrono::steady_clock::now();
    const NearestNeighborProfile profile = topk_search(query);
    const double elapsed = seconds_since(start);

    const bool shape_ok =
        profile.query_ids.size() == 1000 && profile.hits.size() == 1000;
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "1,000,000 x 1,000 at dim 256: %.1f s streamed "
                  "(limit 120 s, %d threads)",
                  elapsed, omp_get_max_threads());
    report(8, "throughput", shape_ok && elapsed < 120.0, detail);
}

// ------------------------------------------------------------------
// 9: bit-exact round trip and byte-identical CLI reruns

void criterion_reproducibility() {
    TempDir dir("acceptance_repro");
    bool round_trip = true;

    const EmbeddingSet set = simgap::test::random_unit_set(90, 333, 48, 7000);
    write_shard(dir / "rt.sgem", set);
    const EmbeddingSet back = ingest_shard(dir / "rt.sgem");
    round_trip = back.dim == set.dim && back.ids == set.ids &&
                 back.normalized == set.normalized &&
                 back.vectors.size() == set.vectors.size() &&
                 std::memcmp(back.vectors.data(), set.vectors.data(),
                             set.vectors.size() * sizeof(float)) == 0;

    bool cli_ok = !simgap::test::cli_path().empty();
    if (cli_ok) {
        std::ofstream(dir / "spec.txt")
            << "seed = 5\ndim = 24\nclusters = 4\nsmall_per_cluster = 10\n"
               "large_extra_per_cluster = 40\ntests_per_cluster = 5\n"
               "dispersion = 0.3\n";
        cli_ok = run_cli("synth --spec \"" + (dir / "spec.txt").string() +
                             "\" --out-dir \"" + dir.path().string() + "\"",
                         dir.path())
                     .exit_code == 0;

        const std::string inputs =
            " --large \"" + (dir / "large_000.sgem").string() + "\" --small \"" +
            (dir / "small.sgem").string() + "\" --test \"" +
            (dir / "tests.sgem").string() + "\"";
        cli_ok = cli_ok &&
                 run_cli("gap-prune" + inputs + " --inject-small --out \"" +
                             (dir / "a.jsonl").string() + "\"",
                         dir.path())
                         .exit_code == 0 &&
                 run_cli("gap-prune" + inputs + " --inject-small --out \"" +
                             (dir / "b.jsonl").string() + "\"",
                         dir.path())
                         .exit_code == 0 &&
                 read_file(dir / "a.jsonl") == read_file(dir / "b.jsonl") &&
                 !read_file(dir / "a.jsonl").empty();

        const std::string nn_inputs = " --train \"" +
                                      (dir / "large_000.sgem").string() +
                                      "\" --test \"" +
                                      (dir / "tests.sgem").string() + "\" --k 3";
        cli_ok = cli_ok &&
                 run_cli("nn" + nn_inputs + " --out \"" +
                             (dir / "p1.csv").string() + "\"",
                         dir.path())
                         .exit_code == 0 &&
                 run_cli("nn" + nn_inputs + " --out \"" +
                             (dir / "p2.csv").string() + "\"",
                         dir.path())
                         .exit_code == 0 &&
                 read_file(dir / "p1.csv") == read_file(dir / "p2.csv") &&
                 !read_file(dir / "p1.csv").empty();
    }

    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "sgem round trip %s; CLI reruns %s",
                  round_trip ? "bit-exact" : "CHANGED BYTES",
                  cli_ok ? "byte-identical" : "FAILED");
    report(9, "reproducibility", round_trip && cli_ok, detail);
}

} // namespace

int main() {
    std::printf("acceptance suite (%d hardware threads)\n",
                omp_get_num_procs());
    criteria_gap_equality_and_maximality();
    criterion_nn_exactness();
    criterion_monotonicity();
    criterion_order_pruning();
    criterion_dedup();
    criterion_analysis();
    criterion_throughput();
    criterion_reproducibility();
    if (g_failures > 0) {
        std::printf("%d criteria FAILED\n", g_failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
