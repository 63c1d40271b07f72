#pragma once

#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cbm/version.hpp"

namespace cbm {

enum class CheckStatus { Pass, Fail, Warn, Skip };

inline const char* to_string(CheckStatus s) {
    switch (s) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    case CheckStatus::Warn: return "warn";
    case CheckStatus::Skip: return "skip";
    }
    return "?";
}

inline CheckStatus status_from_string(const std::string& s) {
    if (s == "pass") return CheckStatus::Pass;
    if (s == "fail") return CheckStatus::Fail;
    if (s == "warn") return CheckStatus::Warn;
    return CheckStatus::Skip;
}

struct CheckEntry {
    std::string id;
    CheckStatus status = CheckStatus::Pass;
    std::string witness; // counterexample / detail, empty when not applicable
    double ms = 0.0;     // wall time; shown in text output only
};

/// Structured outcome of a verification run. Text output is line oriented
/// with stable ordering; JSON output is schema-versioned and contains no
/// timing fields, so two runs with the same config and seed are
/// byte-identical except for the timestamp.
class Report {
public:
    std::string command;                                   // config echo
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> config; // flag echo
    std::vector<CheckEntry> entries;
    std::vector<std::string> notes;
    nlohmann::json payload = nlohmann::json::object(); // structured results

    void add(std::string id, CheckStatus st, std::string witness = "") {
        entries.push_back(CheckEntry{std::move(id), st, std::move(witness), 0.0});
    }
    void note(std::string n) { notes.push_back(std::move(n)); }

    void merge(const Report& other) {
        entries.insert(entries.end(), other.entries.begin(), other.entries.end());
        notes.insert(notes.end(), other.notes.begin(), other.notes.end());
    }

    std::size_t count(CheckStatus st) const {
        std::size_t n = 0;
        for (const auto& e : entries)
            if (e.status == st) ++n;
        return n;
    }
    std::size_t failures() const { return count(CheckStatus::Fail); }
    /// Precondition skips and warnings do not fail a run.
    bool ok() const { return failures() == 0; }

    nlohmann::json to_json(bool with_timestamp = true) const {
        nlohmann::json j;
        j["schema"] = kReportSchema;
        j["tool_version"] = kVersion;
        if (with_timestamp) j["timestamp"] = timestamp;
        j["command"] = command;
        j["seed"] = seed;
        nlohmann::json cfg = nlohmann::json::object();
        for (const auto& [k, v] : config) cfg[k] = v;
        j["config"] = cfg;
        j["notes"] = notes;
        nlohmann::json es = nlohmann::json::array();
        for (const auto& e : entries) {
            nlohmann::json je;
            je["id"] = e.id;
            je["status"] = to_string(e.status);
            je["witness"] = e.witness;
            es.push_back(std::move(je));
        }
        j["checks"] = es;
        if (!payload.empty()) j["results"] = payload;
        j["exit_status"] = ok() ? 0 : 1;
        return j;
    }

    static Report from_json(const nlohmann::json& j) {
        Report r;
        r.command = j.value("command", "");
        r.seed = j.value("seed", std::uint64_t{0});
        if (j.contains("config"))
            for (auto it = j["config"].begin(); it != j["config"].end(); ++it)
                r.config.emplace_back(it.key(), it.value().get<std::string>());
        if (j.contains("notes"))
            for (const auto& n : j["notes"]) r.notes.push_back(n.get<std::string>());
        if (j.contains("timestamp")) r.timestamp = j["timestamp"].get<std::string>();
        if (j.contains("results")) r.payload = j["results"];
        if (j.contains("checks"))
            for (const auto& je : j["checks"]) {
                CheckEntry e;
                e.id = je.value("id", "");
                e.status = status_from_string(je.value("status", "pass"));
                e.witness = je.value("witness", "");
                r.entries.push_back(std::move(e));
            }
        return r;
    }

    void write_text(std::ostream& os) const {
        os << "cbm " << kVersion << "  " << command;
        if (seed) os << "  seed=" << seed;
        os << "\n";
        for (const auto& [k, v] : config) os << "  " << k << " = " << v << "\n";
        for (const auto& n : notes) os << "note: " << n << "\n";
        for (const auto& e : entries) {
            os << to_string(e.status) << "  " << e.id;
            if (!e.witness.empty()) os << "  [" << e.witness << "]";
            if (e.ms > 0) os << "  (" << e.ms << " ms)";
            os << "\n";
        }
        os << (ok() ? "OK" : "FAILED") << "  pass=" << count(CheckStatus::Pass)
           << " fail=" << failures() << " warn=" << count(CheckStatus::Warn)
           << " skip=" << count(CheckStatus::Skip) << "\n";
    }

    std::string timestamp; // set by the CLI; excluded from round-trip checks
};

} // namespace cbm
