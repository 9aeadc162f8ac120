#include "simgap/manifest.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "simgap/errors.hpp"

namespace simgap {

std::string_view prune_action_name(PruneAction action) {
    return action == PruneAction::pruned ? "pruned" : "retained";
}

std::string_view prune_reason_name(PruneReason reason) {
    switch (reason) {
        case PruneReason::gap: return "gap";
        case PruneReason::near: return "near";
        case PruneReason::far: return "far";
        case PruneReason::rand: return "rand";
        case PruneReason::dedup: return "dedup";
        case PruneReason::coreset: return "coreset";
    }
    return "unknown";
}

namespace {

PruneReason reason_from_name(const std::string& name) {
    if (name == "gap") return PruneReason::gap;
    if (name == "near") return PruneReason::near;
    if (name == "far") return PruneReason::far;
    if (name == "rand") return PruneReason::rand;
    if (name == "dedup") return PruneReason::dedup;
    if (name == "coreset") return PruneReason::coreset;
    fail(Errc::parse_error, "unknown prune reason '" + name + "'");
}

} // namespace

void PruneManifest::validate() const {
    std::uint64_t pruned = 0, retained = 0;
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(records.size());
    for (const PruneRecord& rec : records) {
        require(seen.insert(rec.id).second, Errc::duplicate_id,
                "manifest: id " + std::to_string(rec.id) + " appears twice");
        if (rec.action == PruneAction::pruned)
            ++pruned;
        else
            ++retained;
    }
    require(pruned == summary.pruned && retained == summary.retained,
            Errc::invariant_violation,
            "manifest: summary counts do not match records");
}

std::vector<std::uint64_t> PruneManifest::pruned_ids() const {
    std::vector<std::uint64_t> out;
    out.reserve(summary.pruned);
    for (const PruneRecord& rec : records)
        if (rec.action == PruneAction::pruned) out.push_back(rec.id);
    return out;
}

std::vector<std::uint64_t> PruneManifest::retained_ids() const {
    std::vector<std::uint64_t> out;
    out.reserve(summary.retained);
    for (const PruneRecord& rec : records)
        if (rec.action == PruneAction::retained) out.push_back(rec.id);
    return out;
}

void write_manifest_jsonl(std::ostream& out, const PruneManifest& manifest) {
    char buf[256];
    for (const PruneRecord& rec : manifest.records) {
        int n = std::snprintf(buf, sizeof(buf),
                              "{\"id\":%" PRIu64 ",\"action\":\"%s\",\"reason\":\"%s\"",
                              rec.id,
                              std::string(prune_action_name(rec.action)).c_str(),
                              std::string(prune_reason_name(rec.reason)).c_str());
        out.write(buf, n);
        if (rec.test_id.has_value())
            n = std::snprintf(buf, sizeof(buf), ",\"test_id\":%" PRIu64,
                              *rec.test_id);
        else
            n = std::snprintf(buf, sizeof(buf), ",\"test_id\":null");
        out.write(buf, n);
        if (rec.similarity.has_value())
            n = std::snprintf(buf, sizeof(buf), ",\"similarity\":%.9g}\n",
                              static_cast<double>(*rec.similarity));
        else
            n = std::snprintf(buf, sizeof(buf), ",\"similarity\":null}\n");
        out.write(buf, n);
    }

    out << "{\"summary\":{\"reason\":\"" << prune_reason_name(manifest.summary.reason)
        << "\",\"pruned\":" << manifest.summary.pruned
        << ",\"retained\":" << manifest.summary.retained;
    if (manifest.summary.seed.has_value())
        out << ",\"seed\":" << *manifest.summary.seed;
    for (const auto& [key, value] : manifest.summary.extra)
        out << ",\"" << key << "\":" << value;
    out << ",\"config_hash\":\"" << manifest.summary.config_hash << "\"}}\n";
}

void write_manifest_jsonl(const std::filesystem::path& path,
                          const PruneManifest& manifest) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.is_open(), Errc::io_error, "cannot create " + path.string());
    write_manifest_jsonl(out, manifest);
    require(out.good(), Errc::io_error, "write failed: " + path.string());
}

std::string manifest_jsonl_string(const PruneManifest& manifest) {
    std::ostringstream out;
    write_manifest_jsonl(out, manifest);
    return out.str();
}

PruneManifest read_manifest_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.is_open(), Errc::io_error, "cannot open " + path.string());
    PruneManifest manifest;
    bool saw_summary = false;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        require(!j.is_discarded(), Errc::parse_error,
                path.string() + ": bad JSON line '" + line + "'");
        if (j.contains("summary")) {
            const auto& s = j["summary"];
            manifest.summary.reason =
                reason_from_name(s.value("reason", std::string("gap")));
            manifest.summary.pruned = s.at("pruned").get<std::uint64_t>();
            manifest.summary.retained = s.at("retained").get<std::uint64_t>();
            manifest.summary.config_hash = s.value("config_hash", std::string());
            if (s.contains("seed") && !s["seed"].is_null())
                manifest.summary.seed = s["seed"].get<std::uint64_t>();
            saw_summary = true;
            continue;
        }
        PruneRecord rec;
        rec.id = j.at("id").get<std::uint64_t>();
        const std::string action = j.at("action").get<std::string>();
        require(action == "pruned" || action == "retained", Errc::parse_error,
                path.string() + ": unknown action '" + action + "'");
        rec.action = action == "pruned" ? PruneAction::pruned
                                        : PruneAction::retained;
        rec.reason = reason_from_name(j.at("reason").get<std::string>());
        if (j.contains("test_id") && !j["test_id"].is_null())
            rec.test_id = j["test_id"].get<std::uint64_t>();
        if (j.contains("similarity") && !j["similarity"].is_null())
            rec.similarity = j["similarity"].get<float>();
        manifest.records.push_back(rec);
    }
    require(saw_summary, Errc::parse_error,
            path.string() + ": missing summary line");
    manifest.validate();
    return manifest;
}

void write_pruned_ids_binary(const std::filesystem::path& path,
                             const PruneManifest& manifest) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.is_open(), Errc::io_error, "cannot create " + path.string());
    for (const PruneRecord& rec : manifest.records) {
        if (rec.action != PruneAction::pruned) continue;
        unsigned char buf[8];
        for (int i = 0; i < 8; ++i)
            buf[i] = static_cast<unsigned char>((rec.id >> (8 * i)) & 0xff);
        out.write(reinterpret_cast<const char*>(buf), 8);
    }
    require(out.good(), Errc::io_error, "write failed: " + path.string());
}

EmbeddingSet filter_retained(const EmbeddingSet& set,
                             const PruneManifest& manifest) {
    std::unordered_map<std::uint64_t, PruneAction> action_of;
    action_of.reserve(manifest.records.size());
    for (const PruneRecord& rec : manifest.records)
        action_of.emplace(rec.id, rec.action);

    EmbeddingSet out;
    out.dim = set.dim;
    out.normalized = set.normalized;
    for (std::size_t i = 0; i < set.count(); ++i) {
        auto it = action_of.find(set.ids[i]);
        require(it != action_of.end(), Errc::bad_argument,
                "filter_retained: id " + std::to_string(set.ids[i]) +
                    " missing from manifest");
        if (it->second != PruneAction::retained) continue;
        out.ids.push_back(set.ids[i]);
        out.vectors.insert(out.vectors.end(), set.row(i), set.row(i) + set.dim);
    }
    return out;
}

} // namespace simgap
