#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>

#include "simgap/embedding_set.hpp"
#include "simgap/errors.hpp"
#include "simgap/sgem.hpp"

#include "test_util.hpp"

using namespace simgap;
using simgap::test::TempDir;
using simgap::test::make_set;
using simgap::test::random_unit_set;

namespace {

void corrupt_bytes(const std::filesystem::path& path, std::streamoff offset,
                   const char* bytes, std::size_t n) {
    std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(offset);
    f.write(bytes, static_cast<std::streamsize>(n));
}

Errc code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const SimgapError& e) {
        return e.code();
    }
    FAIL("expected a SimgapError");
    return Errc::internal;
}

} // namespace

TEST_CASE("sgem round trip is bit exact") {
    TempDir dir("sgem_roundtrip");
    EmbeddingSet set = random_unit_set(7, 37, 12, /*first_id=*/100);
    write_shard(dir / "a.sgem", set);

    const EmbeddingSet back = ingest_shard(dir / "a.sgem");
    CHECK(back.dim == set.dim);
    CHECK(back.count() == set.count());
    CHECK(back.normalized == set.normalized);
    CHECK(back.ids == set.ids);
    REQUIRE(back.vectors.size() == set.vectors.size());
    CHECK(std::memcmp(back.vectors.data(), set.vectors.data(),
                      set.vectors.size() * sizeof(float)) == 0);
}

TEST_CASE("ingest reads header shape") {
    TempDir dir("sgem_shape");
    const EmbeddingSet set = make_set(
        4, {{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 0.6f, 0.8f}}, {0, 1, 2});
    write_shard(dir / "a.sgem", set);
    const EmbeddingSet back = ingest_shard(dir / "a.sgem");
    CHECK(back.count() == 3);
    CHECK(back.dim == 4);
    CHECK_FALSE(back.normalized);
}

TEST_CASE("ingest rejects malformed shards") {
    TempDir dir("sgem_errors");
    const EmbeddingSet set = make_set(
        4, {{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 0.6f, 0.8f}}, {0, 1, 2});

    SUBCASE("truncated payload") {
        write_shard(dir / "a.sgem", set);
        std::filesystem::resize_file(dir / "a.sgem",
                                     std::filesystem::file_size(dir / "a.sgem") - 4);
        CHECK(code_of([&] { ingest_shard(dir / "a.sgem"); }) ==
              Errc::truncated_payload);
    }
    SUBCASE("bad magic") {
        write_shard(dir / "a.sgem", set);
        corrupt_bytes(dir / "a.sgem", 0, "XGEM", 4);
        CHECK(code_of([&] { ingest_shard(dir / "a.sgem"); }) == Errc::bad_magic);
    }
    SUBCASE("version mismatch") {
        write_shard(dir / "a.sgem", set);
        const char version2[2] = {2, 0};
        corrupt_bytes(dir / "a.sgem", 4, version2, 2);
        CHECK(code_of([&] { ingest_shard(dir / "a.sgem"); }) ==
              Errc::version_mismatch);
    }
    SUBCASE("id count mismatch") {
        write_shard(dir / "a.sgem", set);
        std::ofstream ids(sidecar_ids_path(dir / "a.sgem"),
                          std::ios::binary | std::ios::trunc);
        const char eight_bytes[8] = {};
        ids.write(eight_bytes, 8);  // one id for three rows
        ids.close();
        CHECK(code_of([&] { ingest_shard(dir / "a.sgem"); }) ==
              Errc::id_count_mismatch);
    }
    SUBCASE("zero row") {
        EmbeddingSet with_zero = set;
        for (std::uint32_t j = 0; j < 4; ++j) with_zero.row(1)[j] = 0.0f;
        write_shard(dir / "a.sgem", with_zero);
        CHECK(code_of([&] { ingest_shard(dir / "a.sgem"); }) ==
              Errc::zero_norm_row);
    }
    SUBCASE("non-finite component") {
        EmbeddingSet with_nan = set;
        with_nan.row(2)[1] = std::nanf("");
        write_shard(dir / "a.sgem", with_nan);
        CHECK(code_of([&] { ingest_shard(dir / "a.sgem"); }) ==
              Errc::non_finite_component);
    }
    SUBCASE("missing file") {
        CHECK(code_of([&] { ingest_shard(dir / "nope.sgem"); }) ==
              Errc::io_error);
    }
    SUBCASE("normalized flag on non-unit rows") {
        EmbeddingSet lying = set;
        lying.normalized = true;  // rows like (3,4) are far from unit
        EmbeddingSet scaled = lying;
        scaled.row(0)[0] = 3.0f;
        write_shard(dir / "a.sgem", scaled);
        CHECK(code_of([&] { ingest_shard(dir / "a.sgem"); }) ==
              Errc::value_out_of_range);
    }
}

TEST_CASE("missing sidecar synthesizes 0..count-1") {
    TempDir dir("sgem_noids");
    const EmbeddingSet set =
        make_set(2, {{1, 0}, {0, 1}, {0.6f, 0.8f}}, {7, 8, 9});
    write_shard(dir / "a.sgem", set);
    std::filesystem::remove(sidecar_ids_path(dir / "a.sgem"));
    const EmbeddingSet back = ingest_shard(dir / "a.sgem");
    CHECK(back.ids == std::vector<std::uint64_t>{0, 1, 2});
}

TEST_CASE("normalize scales rows to unit norm") {
    EmbeddingSet set = make_set(2, {{3, 4}}, {0});
    set = normalize(std::move(set));
    CHECK(set.normalized);
    CHECK(set.row(0)[0] == doctest::Approx(0.6f).epsilon(1e-7));
    CHECK(set.row(0)[1] == doctest::Approx(0.8f).epsilon(1e-7));
}

TEST_CASE("normalize is idempotent") {
    EmbeddingSet once = random_unit_set(11, 64, 8);
    const EmbeddingSet twice = normalize(once);
    CHECK(std::memcmp(twice.vectors.data(), once.vectors.data(),
                      once.vectors.size() * sizeof(float)) == 0);

    // Force the arithmetic path on already-unit rows.
    EmbeddingSet cleared = once;
    cleared.normalized = false;
    const EmbeddingSet renormalized = normalize(std::move(cleared));
    for (std::size_t i = 0; i < once.vectors.size(); ++i)
        CHECK(renormalized.vectors[i] ==
              doctest::Approx(once.vectors[i]).epsilon(1e-7));
}

TEST_CASE("normalize rejects zero rows") {
    EmbeddingSet set = make_set(2, {{1, 0}, {0, 0}}, {0, 1});
    CHECK(code_of([&] { normalize(std::move(set)); }) == Errc::zero_norm_row);
}

TEST_CASE("normalized norms match a direct recomputation") {
    const EmbeddingSet set = random_unit_set(13, 1000, 24);
    for (std::size_t i = 0; i < set.count(); ++i) {
        double sq = 0.0;
        for (std::uint32_t j = 0; j < set.dim; ++j)
            sq += static_cast<double>(set.row(i)[j]) *
                  static_cast<double>(set.row(i)[j]);
        const double norm = std::sqrt(sq);
        CHECK(norm >= 1.0 - 1e-6);
        CHECK(norm <= 1.0 + 1e-6);
    }
}

TEST_CASE("normalize preserves the cosine argmax against a fixed query") {
    SplitMix64 rng(17);
    EmbeddingSet raw;
    raw.dim = 16;
    for (std::size_t i = 0; i < 200; ++i) {
        const double scale = 0.05 + 10.0 * rng.uniform();
        for (std::uint32_t j = 0; j < raw.dim; ++j)
            raw.vectors.push_back(static_cast<float>(scale * rng.gaussian()));
        raw.ids.push_back(i);
    }
    std::vector<float> query(raw.dim);
    for (auto& q : query) q = static_cast<float>(rng.gaussian());

    auto dot_of = [&](const float* v) {
        double d = 0.0;
        for (std::uint32_t j = 0; j < raw.dim; ++j)
            d += static_cast<double>(query[j]) * static_cast<double>(v[j]);
        return d;
    };

    std::size_t cosine_argmax = 0;
    double best = -1e300;
    for (std::size_t i = 0; i < raw.count(); ++i) {
        double sq = 0.0;
        for (std::uint32_t j = 0; j < raw.dim; ++j)
            sq += static_cast<double>(raw.row(i)[j]) *
                  static_cast<double>(raw.row(i)[j]);
        const double cosine = dot_of(raw.row(i)) / std::sqrt(sq);
        if (cosine > best) {
            best = cosine;
            cosine_argmax = i;
        }
    }

    const EmbeddingSet unit = normalize(raw);
    std::size_t dot_argmax = 0;
    best = -1e300;
    for (std::size_t i = 0; i < unit.count(); ++i) {
        const double d = dot_of(unit.row(i));
        if (d > best) {
            best = d;
            dot_argmax = i;
        }
    }
    CHECK(dot_argmax == cosine_argmax);
}

TEST_CASE("inject_subset concatenates and flags reference members") {
    const EmbeddingSet large = random_unit_set(19, 5, 6);
    const EmbeddingSet small = random_unit_set(23, 2, 6, /*first_id=*/50);
    const EmbeddingSet merged = inject_subset(large, small);
    REQUIRE(merged.count() == 7);
    CHECK(merged.injected_count() == 2);
    CHECK(merged.ids[5] == 50 + kInjectedIdOffset);
    CHECK(merged.ids[6] == 51 + kInjectedIdOffset);
    CHECK(is_injected_id(merged.ids[6]));
    CHECK_FALSE(is_injected_id(merged.ids[0]));
    CHECK(std::memcmp(merged.row(5), small.row(0), 6 * sizeof(float)) == 0);
}

TEST_CASE("inject_subset with empty small returns large unchanged") {
    const EmbeddingSet large = random_unit_set(19, 5, 6);
    EmbeddingSet empty;
    empty.dim = 6;
    const EmbeddingSet merged = inject_subset(large, empty);
    CHECK(merged.ids == large.ids);
    CHECK(merged.vectors == large.vectors);
}

TEST_CASE("inject_subset rejects bad inputs") {
    const EmbeddingSet large = random_unit_set(19, 5, 6);
    SUBCASE("dim mismatch") {
        const EmbeddingSet other = random_unit_set(23, 2, 8);
        CHECK(code_of([&] { inject_subset(large, other); }) ==
              Errc::dim_mismatch);
    }
    SUBCASE("small id outside the low range") {
        EmbeddingSet small = random_unit_set(23, 2, 6);
        small.ids[1] = kInjectedIdOffset + 3;
        CHECK(code_of([&] { inject_subset(large, small); }) ==
              Errc::id_collision);
    }
    SUBCASE("large already carries injected ids") {
        EmbeddingSet tainted = large;
        tainted.ids[0] = kInjectedIdOffset + 9;
        const EmbeddingSet small = random_unit_set(23, 2, 6);
        CHECK(code_of([&] { inject_subset(tainted, small); }) ==
              Errc::id_collision);
    }
}

TEST_CASE("load_dataset merges shards in order and checks id uniqueness") {
    TempDir dir("sgem_merge");
    const EmbeddingSet a = random_unit_set(29, 4, 5, /*first_id=*/0);
    const EmbeddingSet b = random_unit_set(31, 3, 5, /*first_id=*/100);
    write_shard(dir / "a.sgem", a);
    write_shard(dir / "b.sgem", b);

    DatasetRef ref;
    ref.shard_paths = {dir / "a.sgem", dir / "b.sgem"};
    ref.label = "merged";
    const EmbeddingSet merged = load_dataset(ref);
    REQUIRE(merged.count() == 7);
    CHECK(std::vector<std::uint64_t>(merged.ids.begin(), merged.ids.begin() + 4) ==
          a.ids);
    CHECK(std::vector<std::uint64_t>(merged.ids.begin() + 4, merged.ids.end()) ==
          b.ids);
    CHECK(merged.normalized);

    SUBCASE("duplicate ids across shards fail") {
        write_shard(dir / "dup.sgem", a);
        ref.shard_paths = {dir / "a.sgem", dir / "dup.sgem"};
        CHECK(code_of([&] { load_dataset(ref); }) == Errc::duplicate_id);
    }
    SUBCASE("dim mismatch across shards fails") {
        write_shard(dir / "wide.sgem", random_unit_set(3, 2, 9, 500));
        ref.shard_paths = {dir / "a.sgem", dir / "wide.sgem"};
        CHECK(code_of([&] { load_dataset(ref); }) == Errc::dim_mismatch);
    }
}

TEST_CASE("scanner streams chunks across shards in order") {
    TempDir dir("sgem_scan");
    const EmbeddingSet a = random_unit_set(37, 10, 4, 0);
    const EmbeddingSet b = random_unit_set(41, 6, 4, 100);
    write_shard(dir / "a.sgem", a);
    write_shard(dir / "b.sgem", b);

    DatasetRef ref;
    ref.shard_paths = {dir / "a.sgem", dir / "b.sgem"};
    DatasetScanner scanner(ref, /*chunk_rows=*/4);
    CHECK(scanner.total_rows() == 16);
    CHECK(scanner.dim() == 4);

    std::vector<std::uint64_t> seen;
    std::size_t chunks = 0;
    while (auto chunk = scanner.next()) {
        ++chunks;
        CHECK(chunk->size <= 4);
        seen.insert(seen.end(), chunk->ids, chunk->ids + chunk->size);
    }
    CHECK(chunks == 5);  // 4+4+2 then 4+2
    std::vector<std::uint64_t> expected = a.ids;
    expected.insert(expected.end(), b.ids.begin(), b.ids.end());
    CHECK(seen == expected);
}
