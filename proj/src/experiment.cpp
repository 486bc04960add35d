#include "slipstream/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <sstream>

#include "slipstream/errors.hpp"
#include "slipstream/http_backend.hpp"
#include "slipstream/orchestrator.hpp"
#include "slipstream/scripted_backend.hpp"

namespace slipstream {

using nlohmann::json;

WorkloadScript load_workload(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open workload script: " + path.string());
    json raw;
    try {
        raw = json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError("workload script " + path.string() + ": " + e.what());
    }
    if (!raw.is_object()) throw ParseError("workload script root must be a JSON object");

    WorkloadScript workload;
    workload.name = raw.value("name", path.stem().string());
    workload.system_preamble = raw.value("system_preamble", std::string{});
    workload.task = raw.value("task", std::string{});
    if (raw.contains("expect")) workload.expect = raw.at("expect");
    workload.raw = std::move(raw);
    return workload;
}

namespace {

std::filesystem::path resolved(const ExperimentConfig& config, const std::filesystem::path& path) {
    return path.is_absolute() ? path : config.base_dir / path;
}

void check_expectations(const WorkloadScript& workload, const RunResult& result,
                        const std::string& run_name) {
    if (!workload.expect) return;
    const json& expect = *workload.expect;
    if (expect.contains("outcomes")) {
        std::vector<std::string> expected = expect.at("outcomes").get<std::vector<std::string>>();
        std::vector<std::string> actual;
        actual.reserve(result.events.size());
        for (const CompactionEvent& event : result.events) {
            actual.emplace_back(to_string(event.outcome));
        }
        if (expected != actual) {
            std::ostringstream message;
            message << run_name << ": outcome sequence mismatch; expected [";
            for (const auto& o : expected) message << o << ' ';
            message << "] got [";
            for (const auto& o : actual) message << o << ' ';
            message << "]";
            throw Error(message.str());
        }
    }
    if (expect.contains("turns") && expect.at("turns").get<int>() != result.turns) {
        throw Error(run_name + ": expected " + std::to_string(expect.at("turns").get<int>()) +
                    " turns, got " + std::to_string(result.turns));
    }
}

std::string run_one(const ExperimentConfig& config, const QuerySpec& query, Mode mode,
                    int threshold) {
    const std::string cell = query.name + "_" + std::string(to_string(mode)) + "_T" +
                             std::to_string(threshold);

    WorkloadScript workload;
    std::unique_ptr<ScriptedBackend> scripted;
    std::unique_ptr<HttpBackend> http;
    Backend* backend = nullptr;
    ToolRunner* tools = nullptr;

    if (config.backend.kind == "script") {
        workload = load_workload(resolved(config, query.script));
        scripted = ScriptedBackend::from_json(workload.raw);
        backend = scripted.get();
        tools = scripted.get();
    } else {
        workload.name = query.name;
        if (!query.script.empty()) {
            workload = load_workload(resolved(config, query.script));
        } else {
            workload.system_preamble = config.system_preamble;
            workload.task = config.task;
        }
        HttpBackendConfig http_config;
        http_config.base_url = config.backend.base_url;
        http_config.model = config.backend.model;
        http_config.api_key_env = config.backend.api_key_env;
        http_config.extra_body = config.backend.extra_body;
        http_config.timeout_s = config.backend.timeout_s;
        http = std::make_unique<HttpBackend>(std::move(http_config));
        backend = http.get();
    }

    FaultInjector injector;
    if (query.faults && config.inject_faults) {
        injector = FaultInjector::from_file(resolved(config, *query.faults));
    }

    std::unique_ptr<JudgeClient> judge;
    if (config.oracle_judge) {
        judge = std::make_unique<OracleJudge>(injector);
    } else {
        judge = std::make_unique<LlmJudge>(*backend, config.include_observations_in_judge);
    }

    RunConfig run_config;
    run_config.mode = mode;
    run_config.threshold = threshold;
    run_config.accept_threshold = config.accept_threshold;
    run_config.k_max = config.k_max;
    run_config.max_update_attempts = config.max_update_attempts;
    run_config.seed = config.seed;
    run_config.max_steps = config.max_steps;
    run_config.include_observations_in_judge = config.include_observations_in_judge;
    run_config.run_label = cell + "-";
    run_config.query = query.name;
    run_config.backend_kind = config.backend.kind;

    TrajectoryContext initial(workload.system_preamble);
    if (!workload.task.empty()) {
        initial.append(initial.make_step(Role::user, workload.task, 0.0));
    }

    TraceWriter writer;
    Orchestrator orchestrator(*backend, run_config);
    orchestrator.set_judge(judge.get());
    orchestrator.set_tool_runner(tools);
    if (!injector.empty()) orchestrator.set_fault_injector(&injector);
    orchestrator.set_trace_writer(&writer);

    RunResult result = orchestrator.run(std::move(initial));
    check_expectations(workload, result, cell);

    std::filesystem::path out_path;
    if (config.trace_out) {
        out_path = resolved(config, *config.trace_out);
    } else {
        out_path = resolved(config, config.trace_dir) / (cell + ".jsonl");
    }
    if (out_path.has_parent_path()) std::filesystem::create_directories(out_path.parent_path());
    writer.write_file(out_path.string());
    return out_path.string();
}

std::vector<std::string> run_query(const ExperimentConfig& config, const QuerySpec& query) {
    std::vector<std::string> files;
    for (Mode mode : config.modes) {
        for (int threshold : config.thresholds) {
            files.push_back(run_one(config, query, mode, threshold));
        }
    }
    return files;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
    const std::vector<std::string> diagnostics = validate_config(config);
    if (!diagnostics.empty()) {
        std::string joined = "invalid experiment config:";
        for (const std::string& diagnostic : diagnostics) joined += "\n  " + diagnostic;
        throw Error(joined);
    }

    ExperimentResult result;
    if (config.parallel && config.queries.size() > 1) {
        // Queries are independent; each run owns its backend and trace file,
        // so concurrent execution cannot change any file's bytes.
        std::vector<std::future<std::vector<std::string>>> futures;
        futures.reserve(config.queries.size());
        for (const QuerySpec& query : config.queries) {
            futures.push_back(std::async(std::launch::async,
                                         [&config, &query] { return run_query(config, query); }));
        }
        for (auto& future : futures) {
            for (std::string& file : future.get()) result.trace_files.push_back(std::move(file));
        }
    } else {
        for (const QuerySpec& query : config.queries) {
            for (std::string& file : run_query(config, query)) {
                result.trace_files.push_back(std::move(file));
            }
        }
    }
    return result;
}

ExperimentResult run_experiment_file(const std::filesystem::path& path) {
    return run_experiment(load_config(path));
}

bool wildcard_match(std::string_view pattern, std::string_view text) {
    std::size_t p = 0, t = 0;
    std::size_t star = std::string_view::npos, match = 0;
    while (t < text.size()) {
        if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == text[t])) {
            ++p;
            ++t;
        } else if (p < pattern.size() && pattern[p] == '*') {
            star = p++;
            match = t;
        } else if (star != std::string_view::npos) {
            p = star + 1;
            t = ++match;
        } else {
            return false;
        }
    }
    while (p < pattern.size() && pattern[p] == '*') ++p;
    return p == pattern.size();
}

std::vector<std::string> glob_files(const std::string& pattern) {
    namespace fs = std::filesystem;
    std::vector<std::string> files;

    std::error_code ec;
    if (fs::is_regular_file(pattern, ec)) return {pattern};
    if (fs::is_directory(pattern, ec)) {
        for (const auto& entry : fs::directory_iterator(pattern)) {
            if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
                files.push_back(entry.path().string());
            }
        }
        std::sort(files.begin(), files.end());
        return files;
    }

    const fs::path path(pattern);
    fs::path dir = path.parent_path();
    if (dir.empty()) dir = ".";
    const std::string leaf = path.filename().string();
    if (!fs::is_directory(dir, ec)) return files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        if (wildcard_match(leaf, entry.path().filename().string())) {
            files.push_back(entry.path().string());
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

}  // namespace slipstream
