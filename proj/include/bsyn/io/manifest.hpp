#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "bsyn/verify.hpp"
#include "json.hpp"

namespace bsyn::io {

inline constexpr const char* code_version = "0.1.0";

struct RunManifest {
    std::string config_snapshot;  // canonical config text
    std::string version = code_version;
    std::uint64_t seed = 0;
    std::string started;  // ISO-8601 UTC
    std::string finished;
    std::vector<std::string> outputs;  // paths relative to the run directory
    std::vector<CheckOutcome> checks;
    nlohmann::json extra = nlohmann::json::object();

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["config"] = config_snapshot;
        j["version"] = version;
        j["seed"] = seed;
        j["started"] = started;
        j["finished"] = finished;
        j["outputs"] = outputs;
        nlohmann::json cs = nlohmann::json::array();
        bool all = true;
        for (const auto& c : checks) {
            cs.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
            all = all && c.passed;
        }
        j["checks"] = cs;
        j["all_checks_passed"] = all;
        j["extra"] = extra;
        return j;
    }
};

inline std::string utc_timestamp() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Writes the content to a temporary sibling and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        f << content;
        f.flush();
        if (!f) throw std::runtime_error("write failed for '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

/// Writes manifest.json into dir after checking that every listed output exists.
inline void write_manifest(const std::filesystem::path& dir, const RunManifest& m) {
    for (const auto& o : m.outputs)
        if (!std::filesystem::exists(dir / o))
            throw std::runtime_error("manifest names missing output '" + o + "'");
    write_file_atomic(dir / "manifest.json", m.to_json().dump(2) + "\n");
}

}  // namespace bsyn::io
