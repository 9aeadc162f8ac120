// simgap: train/test similarity auditing and pruning over SGEM embedding
// shards. One subcommand per pipeline stage; data goes to files or stdout,
// logs go to stderr as `level event key=value ...` lines.

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <omp.h>

#include "simgap/analysis.hpp"
#include "simgap/config.hpp"
#include "simgap/dedup.hpp"
#include "simgap/embedding_set.hpp"
#include "simgap/errors.hpp"
#include "simgap/gap_pruner.hpp"
#include "simgap/log.hpp"
#include "simgap/manifest.hpp"
#include "simgap/nn_search.hpp"
#include "simgap/order_pruner.hpp"
#include "simgap/profile.hpp"
#include "simgap/sgem.hpp"
#include "simgap/synthgen.hpp"

namespace {

using namespace simgap;

constexpr double kGapEqualityTolerance = 1e-6;

struct CommonOpts {
    int threads = 0;
    std::size_t chunk_rows = kDefaultChunkRows;
    std::string config_path;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--threads", opts.threads,
                    "Worker thread cap (default: SIMGAP_THREADS or OpenMP)");
    cmd->add_option("--chunk-rows", opts.chunk_rows,
                    "Rows per streamed shard chunk")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--config", opts.config_path,
                    "Flat key=value file; keys are long option names without "
                    "dashes, command-line flags win");
}

// Fills options the command line left untouched from the flat config file.
class ConfigOverlay {
public:
    ConfigOverlay(const CLI::App& cmd, CommonOpts& common)
        : cmd_(cmd) {
        if (!common.config_path.empty())
            entries_ = parse_config_file(common.config_path);
        apply("threads", common.threads);
        apply("chunk-rows", common.chunk_rows);
    }

    template <typename T>
    void apply(const std::string& key, T& target) {
        known_.push_back(key);
        if (entries_.empty()) return;
        if (cmd_.count("--" + key) > 0) return;  // flag wins
        for (const auto& [k, v] : entries_) {
            if (k != key) continue;
            try {
                assign(v, target);
            } catch (const std::exception&) {
                fail(Errc::parse_error,
                     "config: bad value for '" + key + "': " + v);
            }
            return;
        }
    }

    // Unknown keys are typos, not extras.
    void finish() const {
        for (const auto& [k, v] : entries_) {
            (void)v;
            if (std::find(known_.begin(), known_.end(), k) == known_.end())
                fail(Errc::parse_error, "config: unknown key '" + k + "'");
        }
    }

private:
    static void assign(const std::string& v, std::string& t) { t = v; }
    static void assign(const std::string& v, std::vector<std::string>& t) {
        t = {v};
    }
    static void assign(const std::string& v, bool& t) {
        t = v == "1" || v == "true" || v == "on";
    }
    static void assign(const std::string& v, float& t) { t = std::stof(v); }
    static void assign(const std::string& v, double& t) { t = std::stod(v); }
    static void assign(const std::string& v, int& t) { t = std::stoi(v); }
    static void assign(const std::string& v, std::uint32_t& t) {
        t = static_cast<std::uint32_t>(std::stoul(v));
    }
    static void assign(const std::string& v, std::uint64_t& t) {
        t = std::stoull(v);
    }

    const CLI::App& cmd_;
    ConfigEntries entries_;
    std::vector<std::string> known_;
};

void apply_threads(const CommonOpts& opts) {
    int threads = opts.threads;
    if (threads <= 0) {
        if (const char* env = std::getenv("SIMGAP_THREADS"))
            threads = std::atoi(env);
    }
    if (threads > 0) omp_set_num_threads(threads);
}

// Shard lists accept repeated flags and comma-separated paths.
std::vector<std::filesystem::path> split_shards(
    const std::vector<std::string>& args) {
    std::vector<std::filesystem::path> paths;
    for (const std::string& arg : args) {
        std::size_t begin = 0;
        while (begin <= arg.size()) {
            const std::size_t comma = arg.find(',', begin);
            const std::string piece =
                arg.substr(begin, comma == std::string::npos ? std::string::npos
                                                             : comma - begin);
            if (!piece.empty()) paths.emplace_back(piece);
            if (comma == std::string::npos) break;
            begin = comma + 1;
        }
    }
    return paths;
}

DatasetRef make_ref(DatasetRole role, const std::vector<std::string>& args,
                    const std::string& label) {
    DatasetRef ref;
    ref.role = role;
    ref.shard_paths = split_shards(args);
    ref.label = label;
    require(!ref.shard_paths.empty(), Errc::bad_argument,
            "dataset '" + label + "' has no shard paths");
    for (const auto& path : ref.shard_paths)
        require(std::filesystem::exists(path), Errc::io_error,
                label + ": no such shard " + path.string());
    return ref;
}

std::string join_args(const std::vector<std::string>& args) {
    std::string out;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (i) out += ',';
        out += args[i];
    }
    return out;
}

std::string fmt_f32(float value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(value));
    return buf;
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.is_open(), Errc::io_error, "cannot create " + path.string());
    out << content;
    require(out.good(), Errc::io_error, "write failed: " + path.string());
}

// ---------------------------------------------------------------- nn

struct NnArgs {
    std::vector<std::string> train, test;
    std::uint32_t k = 1;
    std::string out;
    CommonOpts common;
};

void run_nn(NnArgs& args, const CLI::App& cmd) {
    ConfigOverlay overlay(cmd, args.common);
    overlay.apply("train", args.train);
    overlay.apply("test", args.test);
    overlay.apply("k", args.k);
    overlay.apply("out", args.out);
    overlay.finish();
    require(!args.out.empty(), Errc::bad_argument, "nn: --out is required");
    apply_threads(args.common);
    const std::string hash = config_hash({
        {"command", "nn"},
        {"train", join_args(args.train)},
        {"test", join_args(args.test)},
        {"k", std::to_string(args.k)},
        {"chunk_rows", std::to_string(args.common.chunk_rows)},
    });
    const EmbeddingSet queries = load_dataset(
        make_ref(DatasetRole::test, args.test, "test"));
    NNQuery query;
    query.queries = &queries;
    query.reference = make_ref(DatasetRole::large_train, args.train, "train");
    query.k = args.k;
    query.chunk_rows = args.common.chunk_rows;
    const NearestNeighborProfile profile = topk_search(query);
    write_profile_csv(std::filesystem::path(args.out), profile);
    log_info("nn", {{"queries", std::to_string(profile.query_ids.size())},
                    {"k", std::to_string(profile.k)},
                    {"out", args.out},
                    {"config_hash", hash}});
}

// ---------------------------------------------------------- gap-prune

struct GapPruneArgs {
    std::vector<std::string> large, small, test;
    bool inject_small = false;
    float slack = 0.0f;
    std::string out;
    std::string out_compact;
    CommonOpts common;
};

struct TempShard {
    std::filesystem::path shard;
    std::filesystem::path ids;
    ~TempShard() {
        std::error_code ec;
        if (!shard.empty()) std::filesystem::remove(shard, ec);
        if (!ids.empty()) std::filesystem::remove(ids, ec);
    }
};

void run_gap_prune(GapPruneArgs& args, const CLI::App& cmd) {
    ConfigOverlay overlay(cmd, args.common);
    overlay.apply("large", args.large);
    overlay.apply("small", args.small);
    overlay.apply("test", args.test);
    overlay.apply("inject-small", args.inject_small);
    overlay.apply("slack", args.slack);
    overlay.apply("out", args.out);
    overlay.apply("out-compact", args.out_compact);
    overlay.finish();
    require(!args.out.empty(), Errc::bad_argument,
            "gap-prune: --out is required");
    apply_threads(args.common);
    ConfigEntries entries = {
        {"command", "gap-prune"},
        {"large", join_args(args.large)},
        {"small", join_args(args.small)},
        {"inject_small", args.inject_small ? "1" : "0"},
        {"slack", fmt_f32(args.slack)},
        {"chunk_rows", std::to_string(args.common.chunk_rows)},
    };
    for (std::size_t i = 0; i < args.test.size(); ++i)
        entries.emplace_back("test." + std::to_string(i), args.test[i]);
    const std::string hash = config_hash(entries);

    const EmbeddingSet small = load_dataset(
        make_ref(DatasetRole::small_train, args.small, "small"));
    std::vector<EmbeddingSet> tests;
    std::vector<GapProfile> gaps;
    tests.reserve(args.test.size());
    for (std::size_t i = 0; i < args.test.size(); ++i) {
        const std::string label = "test" + std::to_string(i);
        tests.push_back(load_dataset(
            make_ref(DatasetRole::test, {args.test[i]}, label)));
        GapProfile gap = compute_gap(small, tests.back());
        gap.small_label = "small";
        gap.test_label = label;
        gaps.push_back(std::move(gap));
    }

    DatasetRef large = make_ref(DatasetRole::large_train, args.large, "large");
    TempShard temp;
    if (args.inject_small) {
        EmbeddingSet offset = small;
        for (std::uint64_t& id : offset.ids) {
            require(id < kInjectedIdOffset, Errc::id_collision,
                    "inject: small id " + std::to_string(id) +
                        " does not fit below the injected range");
            id += kInjectedIdOffset;
        }
        temp.shard = std::filesystem::path(args.out).concat(".injected.sgem");
        temp.ids = sidecar_ids_path(temp.shard);
        write_shard(temp.shard, offset);
        large.shard_paths.push_back(temp.shard);
    }

    GapPruneOptions options;
    options.slack = args.slack;
    options.config_hash = hash;
    options.chunk_rows = args.common.chunk_rows;

    std::vector<GapSource> sources;
    sources.reserve(gaps.size());
    for (std::size_t i = 0; i < gaps.size(); ++i)
        sources.push_back({&gaps[i], &tests[i]});

    const PruneManifest manifest =
        sources.size() == 1
            ? gap_align_prune(large, gaps[0], tests[0], options)
            : combined_prune(large, sources, options);

    // Equality of the aligned gap only follows when the small set rows are
    // contained in the large set; otherwise the pruned gap may fall below.
    bool subset = args.inject_small;
    if (!subset) {
        std::unordered_set<std::uint64_t> large_ids;
        large_ids.reserve(manifest.records.size());
        for (const PruneRecord& rec : manifest.records)
            large_ids.insert(rec.id);
        subset = true;
        for (std::uint64_t id : small.ids)
            if (!large_ids.contains(id)) {
                subset = false;
                break;
            }
        if (!subset)
            log_warn("gap_prune",
                     {{"reason", "small_not_subset_of_large"},
                      {"detail", "gap equality not asserted"}});
    }

    if (subset) {
        const std::vector<std::uint64_t> pruned = manifest.pruned_ids();
        for (std::size_t i = 0; i < gaps.size(); ++i) {
            const GapEqualityCheck check = verify_gap_equality(
                large, pruned, gaps[i], tests[i], args.common.chunk_rows);
            if (check.max_abs_diff > kGapEqualityTolerance)
                fail(Errc::invariant_violation,
                     "gap equality violated for test id " +
                         std::to_string(check.worst_test_id) + " of " +
                         gaps[i].test_label + " (|diff| = " +
                         std::to_string(check.max_abs_diff) + ")");
        }
    }

    write_manifest_jsonl(std::filesystem::path(args.out), manifest);
    if (!args.out_compact.empty())
        write_pruned_ids_binary(std::filesystem::path(args.out_compact),
                                manifest);
    log_info("gap_prune",
             {{"pruned", std::to_string(manifest.summary.pruned)},
              {"retained", std::to_string(manifest.summary.retained)},
              {"out", args.out},
              {"config_hash", hash}});
}

// --------------------------------------------------------- order-prune

struct OrderPruneArgs {
    std::vector<std::string> train, test;
    std::string mode = "rand";
    std::uint64_t count = 0;
    std::uint64_t seed = 0;
    std::string out;
    std::string out_compact;
    CommonOpts common;
};

std::vector<EmbeddingSet> load_test_sets(const std::vector<std::string>& args) {
    std::vector<EmbeddingSet> tests;
    tests.reserve(args.size());
    for (std::size_t i = 0; i < args.size(); ++i)
        tests.push_back(load_dataset(make_ref(DatasetRole::test, {args[i]},
                                              "test" + std::to_string(i))));
    return tests;
}

void run_order_prune(OrderPruneArgs& args, const CLI::App& cmd) {
    ConfigOverlay overlay(cmd, args.common);
    overlay.apply("train", args.train);
    overlay.apply("test", args.test);
    overlay.apply("mode", args.mode);
    overlay.apply("count", args.count);
    overlay.apply("seed", args.seed);
    overlay.apply("out", args.out);
    overlay.apply("out-compact", args.out_compact);
    overlay.finish();
    require(!args.out.empty(), Errc::bad_argument,
            "order-prune: --out is required");
    apply_threads(args.common);
    OrderPruneSpec spec;
    if (args.mode == "near")
        spec.mode = OrderPruneMode::near;
    else if (args.mode == "far")
        spec.mode = OrderPruneMode::far;
    else if (args.mode == "rand")
        spec.mode = OrderPruneMode::rand;
    else
        fail(Errc::bad_argument, "order-prune: unknown mode '" + args.mode + "'");

    ConfigEntries entries = {
        {"command", "order-prune"},
        {"train", join_args(args.train)},
        {"mode", args.mode},
        {"count", std::to_string(args.count)},
        {"chunk_rows", std::to_string(args.common.chunk_rows)},
    };
    if (spec.mode == OrderPruneMode::rand)
        entries.emplace_back("seed", std::to_string(args.seed));
    for (std::size_t i = 0; i < args.test.size(); ++i)
        entries.emplace_back("test." + std::to_string(i), args.test[i]);

    spec.count = args.count;
    spec.seed = args.seed;
    spec.chunk_rows = args.common.chunk_rows;
    spec.config_hash = config_hash(entries);

    const DatasetRef train =
        make_ref(DatasetRole::large_train, args.train, "train");
    const std::vector<EmbeddingSet> tests = load_test_sets(args.test);
    const PruneManifest manifest = order_prune(train, spec, tests);
    write_manifest_jsonl(std::filesystem::path(args.out), manifest);
    if (!args.out_compact.empty())
        write_pruned_ids_binary(std::filesystem::path(args.out_compact),
                                manifest);
    log_info("order_prune",
             {{"mode", args.mode},
              {"pruned", std::to_string(manifest.summary.pruned)},
              {"out", args.out},
              {"config_hash", spec.config_hash}});
}

// ------------------------------------------------------------- coreset

struct CoresetArgs {
    std::vector<std::string> train, test;
    std::uint64_t target_size = 0;
    std::string out;
    std::string out_compact;
    CommonOpts common;
};

void run_coreset(CoresetArgs& args, const CLI::App& cmd) {
    ConfigOverlay overlay(cmd, args.common);
    overlay.apply("train", args.train);
    overlay.apply("test", args.test);
    overlay.apply("target-size", args.target_size);
    overlay.apply("out", args.out);
    overlay.apply("out-compact", args.out_compact);
    overlay.finish();
    require(!args.out.empty(), Errc::bad_argument,
            "coreset: --out is required");
    apply_threads(args.common);
    ConfigEntries entries = {
        {"command", "coreset"},
        {"train", join_args(args.train)},
        {"target_size", std::to_string(args.target_size)},
        {"chunk_rows", std::to_string(args.common.chunk_rows)},
    };
    for (std::size_t i = 0; i < args.test.size(); ++i)
        entries.emplace_back("test." + std::to_string(i), args.test[i]);
    const std::string hash = config_hash(entries);

    const DatasetRef train =
        make_ref(DatasetRole::large_train, args.train, "train");
    const std::vector<EmbeddingSet> tests = load_test_sets(args.test);
    const PruneManifest manifest = extract_coreset(
        train, tests, args.target_size, args.common.chunk_rows, hash);
    write_manifest_jsonl(std::filesystem::path(args.out), manifest);
    if (!args.out_compact.empty())
        write_pruned_ids_binary(std::filesystem::path(args.out_compact),
                                manifest);
    log_info("coreset", {{"target_size", std::to_string(args.target_size)},
                         {"pruned", std::to_string(manifest.summary.pruned)},
                         {"out", args.out},
                         {"config_hash", hash}});
}

// --------------------------------------------------------------- dedup

struct DedupArgs {
    std::vector<std::string> train, test;
    std::string mode = "cross";
    float eps = 0.05f;
    std::string out;
    std::string out_flags;
    CommonOpts common;
};

void run_dedup(DedupArgs& args, const CLI::App& cmd) {
    ConfigOverlay overlay(cmd, args.common);
    overlay.apply("train", args.train);
    overlay.apply("test", args.test);
    overlay.apply("mode", args.mode);
    overlay.apply("eps", args.eps);
    overlay.apply("out", args.out);
    overlay.apply("out-flags", args.out_flags);
    overlay.finish();
    require(!args.out.empty(), Errc::bad_argument, "dedup: --out is required");
    apply_threads(args.common);
    ConfigEntries entries = {
        {"command", "dedup"},
        {"train", join_args(args.train)},
        {"mode", args.mode},
        {"eps", fmt_f32(args.eps)},
        {"chunk_rows", std::to_string(args.common.chunk_rows)},
    };
    for (std::size_t i = 0; i < args.test.size(); ++i)
        entries.emplace_back("test." + std::to_string(i), args.test[i]);
    const std::string hash = config_hash(entries);

    DedupConfig config;
    config.epsilon = args.eps;
    config.chunk_rows = args.common.chunk_rows;
    config.config_hash = hash;

    if (args.mode == "within") {
        require(args.test.empty(), Errc::bad_argument,
                "dedup --mode within takes no test sets");
        config.mode = DedupConfig::Mode::within_set;
        const EmbeddingSet train = load_dataset(
            make_ref(DatasetRole::large_train, args.train, "train"));
        const PruneManifest manifest = within_set_dedup(train, config);
        write_manifest_jsonl(std::filesystem::path(args.out), manifest);
        log_info("dedup", {{"mode", "within"},
                           {"pruned", std::to_string(manifest.summary.pruned)},
                           {"out", args.out},
                           {"config_hash", hash}});
        return;
    }

    require(args.mode == "cross", Errc::bad_argument,
            "dedup: unknown mode '" + args.mode + "'");
    require(!args.test.empty(), Errc::bad_argument,
            "dedup --mode cross needs at least one --test");
    config.mode = DedupConfig::Mode::cross_set;
    const DatasetRef train =
        make_ref(DatasetRole::large_train, args.train, "train");

    std::string counts_csv = "test_set,flagged,total,epsilon\n";
    std::string flags_csv = "test_set,test_id,flagged\n";
    for (std::size_t i = 0; i < args.test.size(); ++i) {
        const std::string label = "test" + std::to_string(i);
        const EmbeddingSet tests = load_dataset(
            make_ref(DatasetRole::test, {args.test[i]}, label));
        const DuplicateReport report =
            count_near_duplicates(tests, train, config);
        counts_csv += label + "," + std::to_string(report.flagged_count) + "," +
                      std::to_string(report.test_ids.size()) + "," +
                      fmt_f32(report.epsilon) + "\n";
        for (std::size_t t = 0; t < report.test_ids.size(); ++t)
            flags_csv += label + "," + std::to_string(report.test_ids[t]) +
                         "," + (report.flagged[t] ? "1" : "0") + "\n";
    }
    counts_csv += "# config_hash=" + hash + "\n";
    write_text_file(std::filesystem::path(args.out), counts_csv);
    if (!args.out_flags.empty()) {
        flags_csv += "# config_hash=" + hash + "\n";
        write_text_file(std::filesystem::path(args.out_flags), flags_csv);
    }
    log_info("dedup", {{"mode", "cross"},
                       {"out", args.out},
                       {"config_hash", hash}});
}

// -------------------------------------------------------------- report

struct ReportHistArgs {
    std::string profile;
    double bin_width = 0.05;
    double lo = -1.0, hi = 1.0;
    std::string out;
    CommonOpts common;
};

void run_report_hist(ReportHistArgs& args, const CLI::App& cmd) {
    ConfigOverlay overlay(cmd, args.common);
    overlay.apply("profile", args.profile);
    overlay.apply("bin", args.bin_width);
    overlay.apply("lo", args.lo);
    overlay.apply("hi", args.hi);
    overlay.apply("out", args.out);
    overlay.finish();
    require(!args.profile.empty() && !args.out.empty(), Errc::bad_argument,
            "report hist: --profile and --out are required");
    const std::string hash = config_hash({
        {"command", "report-hist"},
        {"profile", args.profile},
        {"bin", fmt_f32(static_cast<float>(args.bin_width))},
        {"lo", fmt_f32(static_cast<float>(args.lo))},
        {"hi", fmt_f32(static_cast<float>(args.hi))},
    });
    const NearestNeighborProfile profile =
        read_profile_csv(std::filesystem::path(args.profile));
    std::vector<float> values;
    values.reserve(profile.query_ids.size());
    for (std::size_t i = 0; i < profile.query_ids.size(); ++i)
        values.push_back(profile.top1(i));
    const Histogram hist =
        build_histogram(values, args.bin_width, args.lo, args.hi);
    std::ostringstream out;
    write_histogram_csv(out, hist);
    out << "# config_hash=" << hash << "\n";
    write_text_file(std::filesystem::path(args.out), out.str());
    log_info("report_hist", {{"total", std::to_string(hist.total)},
                             {"out", args.out},
                             {"config_hash", hash}});
}

struct ReportBinsArgs {
    std::string profile;
    std::string correct;
    double bin_width = 0.05;
    double lo = -1.0, hi = 1.0;
    std::string out;
    CommonOpts common;
};

void run_report_bins(ReportBinsArgs& args, const CLI::App& cmd) {
    ConfigOverlay overlay(cmd, args.common);
    overlay.apply("profile", args.profile);
    overlay.apply("correct", args.correct);
    overlay.apply("bin", args.bin_width);
    overlay.apply("lo", args.lo);
    overlay.apply("hi", args.hi);
    overlay.apply("out", args.out);
    overlay.finish();
    require(!args.profile.empty() && !args.correct.empty() && !args.out.empty(),
            Errc::bad_argument,
            "report bins: --profile, --correct and --out are required");
    const std::string hash = config_hash({
        {"command", "report-bins"},
        {"profile", args.profile},
        {"correct", args.correct},
        {"bin", fmt_f32(static_cast<float>(args.bin_width))},
        {"lo", fmt_f32(static_cast<float>(args.lo))},
        {"hi", fmt_f32(static_cast<float>(args.hi))},
    });
    const NearestNeighborProfile profile =
        read_profile_csv(std::filesystem::path(args.profile));
    const auto correctness =
        read_correctness_csv(std::filesystem::path(args.correct));
    std::unordered_map<std::uint64_t, std::uint8_t> correct_of;
    correct_of.reserve(correctness.size());
    for (const auto& [id, value] : correctness) correct_of[id] = value;

    std::vector<float> sims;
    std::vector<std::uint8_t> correct;
    sims.reserve(profile.query_ids.size());
    correct.reserve(profile.query_ids.size());
    for (std::size_t i = 0; i < profile.query_ids.size(); ++i) {
        auto it = correct_of.find(profile.query_ids[i]);
        require(it != correct_of.end(), Errc::bad_argument,
                "report bins: no correctness value for test id " +
                    std::to_string(profile.query_ids[i]));
        sims.push_back(profile.top1(i));
        correct.push_back(it->second);
    }
    const BinnedAccuracy bins =
        bin_accuracy(sims, correct, args.bin_width, args.lo, args.hi);
    std::ostringstream out;
    write_binned_accuracy_csv(out, bins);
    out << "# config_hash=" << hash << "\n";
    write_text_file(std::filesystem::path(args.out), out.str());
    log_info("report_bins", {{"total", std::to_string(bins.total)},
                             {"out", args.out},
                             {"config_hash", hash}});
}

struct ReportProvenanceArgs {
    std::string profile_large;
    std::string profile_small;
    std::string label = "dataset";
    std::string out;
    CommonOpts common;
};

void run_report_provenance(ReportProvenanceArgs& args, const CLI::App& cmd) {
    ConfigOverlay overlay(cmd, args.common);
    overlay.apply("profile-large", args.profile_large);
    overlay.apply("profile-small", args.profile_small);
    overlay.apply("label", args.label);
    overlay.apply("out", args.out);
    overlay.finish();
    require(!args.profile_large.empty() && !args.profile_small.empty() &&
                !args.out.empty(),
            Errc::bad_argument,
            "report provenance: --profile-large, --profile-small and --out "
            "are required");
    const std::string hash = config_hash({
        {"command", "report-provenance"},
        {"profile_large", args.profile_large},
        {"profile_small", args.profile_small},
        {"label", args.label},
    });
    const double percent = provenance_percentage(
        read_profile_csv(std::filesystem::path(args.profile_large)),
        read_profile_csv(std::filesystem::path(args.profile_small)));
    char row[128];
    std::snprintf(row, sizeof(row), "%s,%.9g\n", args.label.c_str(), percent);
    std::string csv = "dataset,percent_large_closer\n";
    csv += row;
    csv += "# config_hash=" + hash + "\n";
    write_text_file(std::filesystem::path(args.out), csv);
    log_info("report_provenance", {{"percent", std::to_string(percent)},
                                   {"out", args.out},
                                   {"config_hash", hash}});
}

struct ReportNormsimArgs {
    std::vector<std::string> train, test, small;
    std::string denoms_profile;
    std::string mode = "small_gap";
    double bin_width = 0.05;
    std::string out_prefix;
    CommonOpts common;
};

void run_report_normsim(ReportNormsimArgs& args, const CLI::App& cmd) {
    ConfigOverlay overlay(cmd, args.common);
    overlay.apply("train", args.train);
    overlay.apply("test", args.test);
    overlay.apply("small", args.small);
    overlay.apply("denoms-profile", args.denoms_profile);
    overlay.apply("mode", args.mode);
    overlay.apply("bin", args.bin_width);
    overlay.apply("out", args.out_prefix);
    overlay.finish();
    require(!args.out_prefix.empty(), Errc::bad_argument,
            "report normsim: --out is required");
    apply_threads(args.common);
    require(args.small.empty() != args.denoms_profile.empty(),
            Errc::bad_argument,
            "report normsim: give exactly one of --small or --denoms-profile");
    NormalizationMode mode;
    if (args.mode == "small_gap")
        mode = NormalizationMode::small_gap;
    else if (args.mode == "pre_prune_large")
        mode = NormalizationMode::pre_prune_large;
    else
        fail(Errc::bad_argument,
             "report normsim: unknown mode '" + args.mode + "'");

    const std::string hash = config_hash({
        {"command", "report-normsim"},
        {"train", join_args(args.train)},
        {"test", join_args(args.test)},
        {"small", join_args(args.small)},
        {"denoms_profile", args.denoms_profile},
        {"mode", args.mode},
        {"bin", fmt_f32(static_cast<float>(args.bin_width))},
    });

    const EmbeddingSet train = load_dataset(
        make_ref(DatasetRole::large_train, args.train, "train"));
    const EmbeddingSet tests =
        load_dataset(make_ref(DatasetRole::test, args.test, "test"));

    DenominatorSet denominators;
    if (!args.small.empty()) {
        const EmbeddingSet small = load_dataset(
            make_ref(DatasetRole::small_train, args.small, "small"));
        denominators = denominators_from(compute_gap(small, tests));
    } else {
        denominators = denominators_from(
            read_profile_csv(std::filesystem::path(args.denoms_profile)));
    }

    const NormalizedSimilarityReport report = normalized_similarity(
        train, tests, denominators, mode, args.bin_width);

    const std::filesystem::path records_path(args.out_prefix + "_records.csv");
    const std::filesystem::path hist_path(args.out_prefix + "_hist.csv");
    const std::filesystem::path summary_path(args.out_prefix + "_summary.csv");
    write_normsim_records_csv(records_path, report);
    write_histogram_csv(hist_path, report.density);
    std::string summary = "mode,boundary_count,total,config_hash\n";
    summary += args.mode + "," + std::to_string(report.boundary_count) + "," +
               std::to_string(report.records.size()) + "," + hash + "\n";
    write_text_file(summary_path, summary);
    log_info("report_normsim",
             {{"mode", args.mode},
              {"boundary_count", std::to_string(report.boundary_count)},
              {"out", args.out_prefix + "_{records,hist,summary}.csv"},
              {"config_hash", hash}});
}

struct ReportRankcorrArgs {
    std::string profile_a, profile_b;
    std::string label_a = "a", label_b = "b";
    std::string out;
    CommonOpts common;
};

void run_report_rankcorr(ReportRankcorrArgs& args, const CLI::App& cmd) {
    ConfigOverlay overlay(cmd, args.common);
    overlay.apply("profile-a", args.profile_a);
    overlay.apply("profile-b", args.profile_b);
    overlay.apply("label-a", args.label_a);
    overlay.apply("label-b", args.label_b);
    overlay.apply("out", args.out);
    overlay.finish();
    require(!args.profile_a.empty() && !args.profile_b.empty() &&
                !args.out.empty(),
            Errc::bad_argument,
            "report rankcorr: --profile-a, --profile-b and --out are required");
    const std::string hash = config_hash({
        {"command", "report-rankcorr"},
        {"profile_a", args.profile_a},
        {"profile_b", args.profile_b},
        {"label_a", args.label_a},
        {"label_b", args.label_b},
    });
    const NearestNeighborProfile pa =
        read_profile_csv(std::filesystem::path(args.profile_a));
    const NearestNeighborProfile pb =
        read_profile_csv(std::filesystem::path(args.profile_b));
    require(pa.query_ids.size() == pb.query_ids.size(), Errc::length_mismatch,
            "report rankcorr: profiles differ in query count");
    std::unordered_map<std::uint64_t, float> sim_b;
    sim_b.reserve(pb.query_ids.size());
    for (std::size_t i = 0; i < pb.query_ids.size(); ++i)
        sim_b[pb.query_ids[i]] = pb.top1(i);
    std::vector<float> a, b;
    a.reserve(pa.query_ids.size());
    b.reserve(pa.query_ids.size());
    for (std::size_t i = 0; i < pa.query_ids.size(); ++i) {
        auto it = sim_b.find(pa.query_ids[i]);
        require(it != sim_b.end(), Errc::bad_argument,
                "report rankcorr: query id " +
                    std::to_string(pa.query_ids[i]) + " missing from --profile-b");
        a.push_back(pa.top1(i));
        b.push_back(it->second);
    }
    const double rho = rank_correlation(a, b);
    char row[160];
    std::snprintf(row, sizeof(row), "%s,%s,%.9g\n", args.label_a.c_str(),
                  args.label_b.c_str(), rho);
    std::string csv = "label_a,label_b,rho\n";
    csv += row;
    csv += "# config_hash=" + hash + "\n";
    write_text_file(std::filesystem::path(args.out), csv);
    log_info("report_rankcorr", {{"rho", std::to_string(rho)},
                                 {"out", args.out},
                                 {"config_hash", hash}});
}

// --------------------------------------------------------------- synth

struct SynthArgs {
    std::string spec_path;
    std::string out_dir;
    CommonOpts common;
};

void run_synth(SynthArgs& args, const CLI::App& cmd) {
    ConfigOverlay overlay(cmd, args.common);
    overlay.apply("spec", args.spec_path);
    overlay.apply("out-dir", args.out_dir);
    overlay.finish();
    require(!args.spec_path.empty() && !args.out_dir.empty(),
            Errc::bad_argument, "synth: --spec and --out-dir are required");
    SynthSpec spec;
    std::uint32_t shards = 1;
    for (const auto& [key, value] :
         parse_config_file(std::filesystem::path(args.spec_path))) {
        try {
            if (key == "seed")
                spec.seed = std::stoull(value);
            else if (key == "dim")
                spec.dim = static_cast<std::uint32_t>(std::stoul(value));
            else if (key == "clusters")
                spec.clusters = static_cast<std::uint32_t>(std::stoul(value));
            else if (key == "small_per_cluster")
                spec.small_per_cluster =
                    static_cast<std::uint32_t>(std::stoul(value));
            else if (key == "large_extra_per_cluster")
                spec.large_extra_per_cluster =
                    static_cast<std::uint32_t>(std::stoul(value));
            else if (key == "tests_per_cluster")
                spec.tests_per_cluster =
                    static_cast<std::uint32_t>(std::stoul(value));
            else if (key == "dispersion")
                spec.dispersion = std::stof(value);
            else if (key == "planted_duplicates")
                spec.planted_duplicates =
                    static_cast<std::uint32_t>(std::stoul(value));
            else if (key == "planted_distance")
                spec.planted_distance = std::stof(value);
            else if (key == "shards")
                shards = static_cast<std::uint32_t>(std::stoul(value));
            else
                fail(Errc::parse_error,
                     "synth spec: unknown key '" + key + "'");
        } catch (const std::invalid_argument&) {
            fail(Errc::parse_error,
                 "synth spec: bad value for '" + key + "': " + value);
        } catch (const std::out_of_range&) {
            fail(Errc::parse_error,
                 "synth spec: value out of range for '" + key + "'");
        }
    }
    require(shards >= 1, Errc::bad_argument, "synth: shards must be >= 1");
    const std::string hash = config_hash({
        {"command", "synth"},
        {"seed", std::to_string(spec.seed)},
        {"dim", std::to_string(spec.dim)},
        {"clusters", std::to_string(spec.clusters)},
        {"small_per_cluster", std::to_string(spec.small_per_cluster)},
        {"large_extra_per_cluster", std::to_string(spec.large_extra_per_cluster)},
        {"tests_per_cluster", std::to_string(spec.tests_per_cluster)},
        {"dispersion", fmt_f32(spec.dispersion)},
        {"planted_duplicates", std::to_string(spec.planted_duplicates)},
        {"planted_distance", fmt_f32(spec.planted_distance)},
        {"shards", std::to_string(shards)},
    });

    const SynthFixture fixture = generate(spec);
    const std::filesystem::path dir(args.out_dir);
    std::filesystem::create_directories(dir);

    write_shard(dir / "small.sgem", fixture.small);
    write_shard(dir / "tests.sgem", fixture.tests);

    std::vector<std::string> large_names;
    const std::size_t total = fixture.large.count();
    const std::size_t per_shard = (total + shards - 1) / shards;
    for (std::uint32_t s = 0; s < shards; ++s) {
        const std::size_t begin = std::min<std::size_t>(s * per_shard, total);
        const std::size_t end =
            std::min<std::size_t>(begin + per_shard, total);
        EmbeddingSet part;
        part.dim = fixture.large.dim;
        part.normalized = fixture.large.normalized;
        part.vectors.assign(fixture.large.vectors.begin() + begin * spec.dim,
                            fixture.large.vectors.begin() + end * spec.dim);
        part.ids.assign(fixture.large.ids.begin() + begin,
                        fixture.large.ids.begin() + end);
        char name[32];
        std::snprintf(name, sizeof(name), "large_%03u.sgem", s);
        write_shard(dir / name, part);
        large_names.push_back(name);
    }

    nlohmann::json meta;
    meta["config_hash"] = hash;
    meta["dim"] = spec.dim;
    meta["seed"] = spec.seed;
    meta["counts"] = {{"small", fixture.small.count()},
                      {"large", fixture.large.count()},
                      {"tests", fixture.tests.count()}};
    meta["files"] = {{"small", "small.sgem"},
                     {"tests", "tests.sgem"},
                     {"large", large_names}};
    write_text_file(dir / "fixture.json", meta.dump(2) + "\n");
    log_info("synth", {{"out_dir", args.out_dir},
                       {"small", std::to_string(fixture.small.count())},
                       {"large", std::to_string(fixture.large.count())},
                       {"tests", std::to_string(fixture.tests.count())},
                       {"config_hash", hash}});
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"similarity-gap auditing and pruning for embedding datasets"};
    app.require_subcommand(1);

    NnArgs nn;
    CLI::App* nn_cmd = app.add_subcommand(
        "nn", "Nearest-neighbor profile of a query set against a training set");
    nn_cmd->add_option("--train", nn.train, "Training (reference) shards");
    nn_cmd->add_option("--test", nn.test, "Test (query) shards");
    nn_cmd->add_option("--k", nn.k, "Neighbors per query")
        ->check(CLI::PositiveNumber);
    nn_cmd->add_option("--out", nn.out, "Profile CSV path");
    add_common(nn_cmd, nn.common);
    nn_cmd->callback([&, nn_cmd] { run_nn(nn, *nn_cmd); });

    GapPruneArgs gap;
    CLI::App* gap_cmd = app.add_subcommand(
        "gap-prune",
        "Prune a large training set to the small set's similarity gap");
    gap_cmd->add_option("--large", gap.large, "Large training shards");
    gap_cmd->add_option("--small", gap.small, "Small reference shards");
    gap_cmd
        ->add_option("--test", gap.test,
                     "Test set (repeat for combined pruning; commas join "
                     "shards of one set)");
    gap_cmd->add_flag("--inject-small", gap.inject_small,
                      "Include the small set in the large one before pruning");
    gap_cmd->add_option("--slack", gap.slack, "Threshold slack (>= 0)");
    gap_cmd->add_option("--out", gap.out, "Manifest JSONL path");
    gap_cmd->add_option("--out-compact", gap.out_compact,
                        "Also write pruned ids as binary u64");
    add_common(gap_cmd, gap.common);
    gap_cmd->callback([&, gap_cmd] { run_gap_prune(gap, *gap_cmd); });

    OrderPruneArgs order;
    CLI::App* order_cmd = app.add_subcommand(
        "order-prune", "Prune by similarity order (near/far) or at random");
    order_cmd->add_option("--train", order.train, "Training shards");
    order_cmd->add_option("--mode", order.mode, "near | far | rand");
    order_cmd->add_option("--count", order.count, "Samples to prune");
    order_cmd->add_option("--seed", order.seed, "Seed for rand mode");
    order_cmd->add_option("--test", order.test,
                          "Test set (repeatable; required for near/far)");
    order_cmd->add_option("--out", order.out, "Manifest JSONL path");
    order_cmd->add_option("--out-compact", order.out_compact,
                          "Also write pruned ids as binary u64");
    add_common(order_cmd, order.common);
    order_cmd->callback([&, order_cmd] { run_order_prune(order, *order_cmd); });

    CoresetArgs coreset;
    CLI::App* coreset_cmd = app.add_subcommand(
        "coreset", "Far-prune against several test sets to a target size");
    coreset_cmd->add_option("--train", coreset.train, "Training shards");
    coreset_cmd
        ->add_option("--target-size", coreset.target_size, "Retained size");
    coreset_cmd->add_option("--test,--tests", coreset.test,
                            "Test set (repeatable)");
    coreset_cmd->add_option("--out", coreset.out, "Manifest JSONL path");
    coreset_cmd->add_option("--out-compact", coreset.out_compact,
                            "Also write pruned ids as binary u64");
    add_common(coreset_cmd, coreset.common);
    coreset_cmd->callback([&, coreset_cmd] { run_coreset(coreset, *coreset_cmd); });

    DedupArgs dedup;
    CLI::App* dedup_cmd = app.add_subcommand(
        "dedup", "Near-duplicate counting (cross) or greedy dedup (within)");
    dedup_cmd->add_option("--train", dedup.train, "Training shards");
    dedup_cmd->add_option("--test", dedup.test,
                          "Test set (repeatable; cross mode only)");
    dedup_cmd->add_option("--mode", dedup.mode, "cross | within");
    dedup_cmd->add_option("--eps", dedup.eps,
                          "Cosine-distance duplicate threshold");
    dedup_cmd->add_option("--out", dedup.out,
                          "Counts CSV (cross) or manifest JSONL (within)");
    dedup_cmd->add_option("--out-flags", dedup.out_flags,
                          "Per-test flag CSV (cross mode)");
    add_common(dedup_cmd, dedup.common);
    dedup_cmd->callback([&, dedup_cmd] { run_dedup(dedup, *dedup_cmd); });

    CLI::App* report_cmd =
        app.add_subcommand("report", "Descriptive statistics over results");
    report_cmd->require_subcommand(1);

    ReportHistArgs hist;
    CLI::App* hist_cmd = report_cmd->add_subcommand(
        "hist", "Similarity histogram from a profile CSV");
    hist_cmd->add_option("--profile", hist.profile, "Profile CSV");
    hist_cmd->add_option("--bin", hist.bin_width, "Bin width");
    hist_cmd->add_option("--lo", hist.lo, "Range low edge");
    hist_cmd->add_option("--hi", hist.hi, "Range high edge");
    hist_cmd->add_option("--out", hist.out, "Histogram CSV path");
    add_common(hist_cmd, hist.common);
    hist_cmd->callback([&, hist_cmd] { run_report_hist(hist, *hist_cmd); });

    ReportBinsArgs bins;
    CLI::App* bins_cmd = report_cmd->add_subcommand(
        "bins", "Accuracy binned by nearest-neighbor similarity");
    bins_cmd->add_option("--profile", bins.profile, "Profile CSV");
    bins_cmd->add_option("--correct", bins.correct,
                         "Correctness CSV (test_id,correct)");
    bins_cmd->add_option("--bin", bins.bin_width, "Bin width");
    bins_cmd->add_option("--lo", bins.lo, "Range low edge");
    bins_cmd->add_option("--hi", bins.hi, "Range high edge");
    bins_cmd->add_option("--out", bins.out, "Binned accuracy CSV path");
    add_common(bins_cmd, bins.common);
    bins_cmd->callback([&, bins_cmd] { run_report_bins(bins, *bins_cmd); });

    ReportProvenanceArgs prov;
    CLI::App* prov_cmd = report_cmd->add_subcommand(
        "provenance",
        "Share of queries whose nearest neighbor sits in the larger set");
    prov_cmd->add_option("--profile-large", prov.profile_large,
                         "Profile CSV against the large set");
    prov_cmd->add_option("--profile-small", prov.profile_small,
                         "Profile CSV against the small set");
    prov_cmd->add_option("--label", prov.label, "Dataset label");
    prov_cmd->add_option("--out", prov.out, "Output CSV path");
    add_common(prov_cmd, prov.common);
    prov_cmd->callback([&, prov_cmd] { run_report_provenance(prov, *prov_cmd); });

    ReportNormsimArgs normsim;
    CLI::App* normsim_cmd = report_cmd->add_subcommand(
        "normsim", "Normalized train-side similarity and boundary census");
    normsim_cmd->add_option("--train", normsim.train, "Training shards");
    normsim_cmd->add_option("--test", normsim.test, "Test shards");
    normsim_cmd->add_option("--small", normsim.small,
                            "Small reference shards (small_gap denominators)");
    normsim_cmd->add_option("--denoms-profile", normsim.denoms_profile,
                            "Profile CSV with denominator similarities");
    normsim_cmd->add_option("--mode", normsim.mode,
                            "small_gap | pre_prune_large");
    normsim_cmd->add_option("--bin", normsim.bin_width, "Bin width");
    normsim_cmd->add_option("--out", normsim.out_prefix,
                            "Output prefix for _records/_hist/_summary CSVs");
    add_common(normsim_cmd, normsim.common);
    normsim_cmd->callback([&, normsim_cmd] { run_report_normsim(normsim, *normsim_cmd); });

    ReportRankcorrArgs rankcorr;
    CLI::App* rankcorr_cmd = report_cmd->add_subcommand(
        "rankcorr", "Spearman correlation of two similarity profiles");
    rankcorr_cmd->add_option("--profile-a", rankcorr.profile_a, "Profile CSV");
    rankcorr_cmd->add_option("--profile-b", rankcorr.profile_b, "Profile CSV");
    rankcorr_cmd->add_option("--label-a", rankcorr.label_a, "Label");
    rankcorr_cmd->add_option("--label-b", rankcorr.label_b, "Label");
    rankcorr_cmd->add_option("--out", rankcorr.out, "Output CSV path");
    add_common(rankcorr_cmd, rankcorr.common);
    rankcorr_cmd->callback([&, rankcorr_cmd] { run_report_rankcorr(rankcorr, *rankcorr_cmd); });

    SynthArgs synth;
    CLI::App* synth_cmd = app.add_subcommand(
        "synth", "Deterministic clustered fixture generator");
    synth_cmd->add_option("--spec", synth.spec_path, "Spec file (key = value)");
    synth_cmd->add_option("--out-dir", synth.out_dir, "Output directory");
    add_common(synth_cmd, synth.common);
    synth_cmd->callback([&, synth_cmd] { run_synth(synth, *synth_cmd); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error code=usage msg=\"" << e.what() << "\"\n";
        std::cerr << "run with --help for usage\n";
        return 2;
    } catch (const simgap::SimgapError& e) {
        std::cerr << "error code=" << simgap::errc_name(e.code()) << " msg=\""
                  << e.what() << "\"\n";
        const int code = simgap::errc_exit_code(e.code());
        if (code == 2) std::cerr << "run with --help for usage\n";
        return code;
    } catch (const std::exception& e) {
        std::cerr << "error code=internal msg=\"" << e.what() << "\"\n";
        return 5;
    }
    return 0;
}
