// Grid runner: wires backends, workload scripts, fault schedules, judges,
// and the orchestrator into reproducible runs writing one trace file per
// (mode, threshold, query) cell.
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "slipstream/config.hpp"

namespace slipstream {

struct WorkloadScript {
    std::string name;
    std::string system_preamble;
    std::string task;
    nlohmann::json raw;  // per-purpose queues consumed by ScriptedBackend
    std::optional<nlohmann::json> expect;  // outcome annotations checked after the run
};

WorkloadScript load_workload(const std::filesystem::path& path);

struct ExperimentResult {
    std::vector<std::string> trace_files;
};

// Throws Error with joined diagnostics when the config is invalid, and
// propagates lifecycle invariant violations from the orchestrator.
ExperimentResult run_experiment(const ExperimentConfig& config);
ExperimentResult run_experiment_file(const std::filesystem::path& path);

// '*' and '?' wildcards in the final path component; a plain existing file
// matches itself and a directory matches its *.jsonl children. Results are
// sorted.
std::vector<std::string> glob_files(const std::string& pattern);

bool wildcard_match(std::string_view pattern, std::string_view text);

}  // namespace slipstream
