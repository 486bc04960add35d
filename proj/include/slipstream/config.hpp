// Experiment configuration: one JSON document describing the
// mode x threshold grid, the backend, and the scripted queries.
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "slipstream/events.hpp"

namespace slipstream {

struct QuerySpec {
    std::string name;
    std::filesystem::path script;
    std::optional<std::filesystem::path> faults;
};

struct BackendSpec {
    std::string kind = "script";  // "script" or "http"
    std::string base_url;
    std::string model;
    std::string api_key_env = "SLIPSTREAM_API_KEY";
    nlohmann::json extra_body = nlohmann::json::object();
    double timeout_s = 120.0;
};

struct ExperimentConfig {
    std::filesystem::path trace_dir = "traces";
    // Single-run output override; valid only for a 1x1x1 grid.
    std::optional<std::filesystem::path> trace_out;
    std::vector<Mode> modes{Mode::slipstream};
    std::vector<int> thresholds{4096};
    int accept_threshold = 7;
    int k_max = 8;
    int max_update_attempts = 1;
    int max_steps = 100000;
    std::uint64_t seed = 0;
    bool parallel = false;
    bool oracle_judge = false;
    bool include_observations_in_judge = false;
    bool inject_faults = true;  // set false to ignore configured fault files
    BackendSpec backend;
    std::vector<QuerySpec> queries;
    // Fallback preamble/task for http queries that carry no workload script.
    std::string system_preamble;
    std::string task;
    // Directory relative paths resolve against (the config file's directory).
    std::filesystem::path base_dir = ".";
};

ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);

// Schema and reference checks; one human-readable line per problem.
// Empty result means the config is runnable.
std::vector<std::string> validate_config(const ExperimentConfig& config);

// File-level variant: parse failures become diagnostics, never exceptions.
std::vector<std::string> validate_config_file(const std::filesystem::path& path);

}  // namespace slipstream
