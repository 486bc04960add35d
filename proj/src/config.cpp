#include "slipstream/config.hpp"

#include <fstream>
#include <set>

#include "slipstream/errors.hpp"

namespace slipstream {

using nlohmann::json;

ExperimentConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
    if (!doc.is_object()) throw ParseError("config root must be a JSON object");
    ExperimentConfig config;
    config.base_dir = base_dir;

    try {
        if (doc.contains("trace_dir")) config.trace_dir = doc.at("trace_dir").get<std::string>();
        if (doc.contains("trace_out")) config.trace_out = doc.at("trace_out").get<std::string>();
        if (doc.contains("modes")) {
            config.modes.clear();
            for (const auto& name : doc.at("modes")) {
                config.modes.push_back(mode_from_string(name.get<std::string>()));
            }
        }
        if (doc.contains("thresholds")) {
            config.thresholds = doc.at("thresholds").get<std::vector<int>>();
        }
        config.accept_threshold = doc.value("accept_threshold", config.accept_threshold);
        config.k_max = doc.value("k_max", config.k_max);
        config.max_update_attempts = doc.value("max_update_attempts", config.max_update_attempts);
        config.max_steps = doc.value("max_steps", config.max_steps);
        config.seed = doc.value("seed", config.seed);
        config.parallel = doc.value("parallel", config.parallel);
        config.oracle_judge = doc.value("oracle_judge", config.oracle_judge);
        config.include_observations_in_judge =
            doc.value("include_observations_in_judge", config.include_observations_in_judge);
        config.inject_faults = doc.value("inject_faults", config.inject_faults);
        config.system_preamble = doc.value("system_preamble", std::string{});
        config.task = doc.value("task", std::string{});

        if (doc.contains("backend")) {
            const json& backend = doc.at("backend");
            if (!backend.is_object()) throw ParseError("config.backend must be an object");
            config.backend.kind = backend.value("kind", std::string("script"));
            config.backend.base_url = backend.value("base_url", std::string{});
            config.backend.model = backend.value("model", std::string{});
            config.backend.api_key_env =
                backend.value("api_key_env", std::string("SLIPSTREAM_API_KEY"));
            config.backend.timeout_s = backend.value("timeout_s", 120.0);
            if (backend.contains("extra_body")) config.backend.extra_body = backend.at("extra_body");
        }

        if (doc.contains("queries")) {
            for (const auto& entry : doc.at("queries")) {
                if (!entry.is_object()) throw ParseError("config.queries entries must be objects");
                QuerySpec query;
                query.name = entry.value("name", std::string{});
                if (entry.contains("script")) {
                    query.script = entry.at("script").get<std::string>();
                }
                if (entry.contains("faults")) {
                    query.faults = std::filesystem::path(entry.at("faults").get<std::string>());
                }
                if (query.name.empty() && !query.script.empty()) {
                    query.name = query.script.stem().string();
                }
                config.queries.push_back(std::move(query));
            }
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file: " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError("config file " + path.string() + ": " + e.what());
    }
    auto base = path.parent_path();
    if (base.empty()) base = ".";
    return parse_config(doc, base);
}

namespace {

std::filesystem::path resolved(const ExperimentConfig& config, const std::filesystem::path& path) {
    return path.is_absolute() ? path : config.base_dir / path;
}

}  // namespace

std::vector<std::string> validate_config(const ExperimentConfig& config) {
    std::vector<std::string> diagnostics;

    if (config.modes.empty()) diagnostics.push_back("modes: at least one mode is required");
    if (config.thresholds.empty()) {
        diagnostics.push_back("thresholds: at least one threshold is required");
    }
    for (int threshold : config.thresholds) {
        if (threshold <= 0) {
            diagnostics.push_back("thresholds: must be positive, got " + std::to_string(threshold));
        }
    }
    if (config.accept_threshold < 0 || config.accept_threshold > 10) {
        diagnostics.push_back("accept_threshold: must be within [0,10], got " +
                              std::to_string(config.accept_threshold));
    }
    if (config.k_max < 1) {
        diagnostics.push_back("k_max: must be at least 1, got " + std::to_string(config.k_max));
    }
    if (config.max_update_attempts < 0) {
        diagnostics.push_back("max_update_attempts: must be >= 0, got " +
                              std::to_string(config.max_update_attempts));
    }
    if (config.max_steps < 1) {
        diagnostics.push_back("max_steps: must be at least 1, got " +
                              std::to_string(config.max_steps));
    }

    if (config.backend.kind != "script" && config.backend.kind != "http") {
        diagnostics.push_back("backend.kind: must be \"script\" or \"http\", got \"" +
                              config.backend.kind + "\"");
    }
    if (config.backend.kind == "http" && config.backend.base_url.empty()) {
        diagnostics.push_back("backend.base_url: required for the http backend");
    }

    if (config.queries.empty()) diagnostics.push_back("queries: at least one query is required");
    std::set<std::string> seen_names;
    for (std::size_t i = 0; i < config.queries.size(); ++i) {
        const QuerySpec& query = config.queries[i];
        const std::string where = "queries[" + std::to_string(i) + "]";
        if (query.name.empty()) diagnostics.push_back(where + ".name: must be nonempty");
        if (!seen_names.insert(query.name).second) {
            diagnostics.push_back(where + ".name: duplicate query name \"" + query.name + "\"");
        }
        if (config.backend.kind == "script") {
            if (query.script.empty()) {
                diagnostics.push_back(where + ".script: required for the script backend");
            } else if (!std::filesystem::exists(resolved(config, query.script))) {
                diagnostics.push_back(where + ".script: file not found: " +
                                      resolved(config, query.script).string());
            }
        }
        if (query.faults && !std::filesystem::exists(resolved(config, *query.faults))) {
            diagnostics.push_back(where + ".faults: file not found: " +
                                  resolved(config, *query.faults).string());
        }
    }

    const std::size_t grid =
        config.modes.size() * config.thresholds.size() * config.queries.size();
    if (config.trace_out && grid != 1) {
        diagnostics.push_back("trace_out: only valid for a single-run grid, got " +
                              std::to_string(grid) + " runs");
    }

    // Overlapped modes need a verdict source: a scripted judge queue or the
    // oracle-judge flag.
    const bool judged_mode =
        std::any_of(config.modes.begin(), config.modes.end(),
                    [](Mode mode) { return mode == Mode::slipstream; });
    if (judged_mode && config.backend.kind == "script" && !config.oracle_judge) {
        for (std::size_t i = 0; i < config.queries.size(); ++i) {
            const QuerySpec& query = config.queries[i];
            if (query.script.empty()) continue;
            const auto path = resolved(config, query.script);
            if (!std::filesystem::exists(path)) continue;
            std::ifstream in(path);
            json script;
            try {
                script = json::parse(in);
            } catch (const json::exception&) {
                diagnostics.push_back("queries[" + std::to_string(i) +
                                      "].script: not valid JSON: " + path.string());
                continue;
            }
            if (!script.contains("judge") || !script.at("judge").is_array() ||
                script.at("judge").empty()) {
                diagnostics.push_back("queries[" + std::to_string(i) +
                                      "].script: slipstream mode needs a scripted judge queue or "
                                      "oracle_judge=true");
            }
        }
    }

    return diagnostics;
}

std::vector<std::string> validate_config_file(const std::filesystem::path& path) {
    try {
        return validate_config(load_config(path));
    } catch (const ParseError& e) {
        return {e.what()};
    }
}

}  // namespace slipstream
