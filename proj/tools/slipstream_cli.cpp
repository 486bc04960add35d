// Command-line harness over the C API. Subcommands:
//   run       execute one run or a config-driven grid, writing JSONL traces
//   report    aggregate traces into latency/rejection/locality reports
//   validate  schema-check a config file and print diagnostics
#include <cstdio>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "slipstream.h"

namespace {

int fail(ss_status status) {
    std::fprintf(stderr, "error: %s\n", ss_last_error());
    return static_cast<int>(status);
}

struct RunArgs {
    std::string config_path;
    std::string mode = "slipstream";
    int threshold = 4096;
    int accept_threshold = 7;
    int k_max = 8;
    int max_update_attempts = 1;
    int max_steps = 100000;
    std::uint64_t seed = 0;
    std::string backend;  // http:<url> or script:<file>
    std::string model;
    std::string task;
    std::string inject_faults;
    std::string trace_out;
    std::string query_name = "query";
    bool oracle_judge = false;
};

// Flag-form runs become a single-cell config document.
std::string single_run_config(const RunArgs& args, std::string& error) {
    nlohmann::json config;
    config["modes"] = {args.mode};
    config["thresholds"] = {args.threshold};
    config["accept_threshold"] = args.accept_threshold;
    config["k_max"] = args.k_max;
    config["max_update_attempts"] = args.max_update_attempts;
    config["max_steps"] = args.max_steps;
    config["seed"] = args.seed;
    config["oracle_judge"] = args.oracle_judge;
    if (!args.trace_out.empty()) config["trace_out"] = args.trace_out;

    nlohmann::json query;
    query["name"] = args.query_name;

    if (args.backend.rfind("script:", 0) == 0) {
        config["backend"] = {{"kind", "script"}};
        query["script"] = args.backend.substr(7);
    } else if (args.backend.rfind("http", 0) == 0) {
        // Accept http:<url> as well as a bare http(s):// URL.
        std::string url = args.backend;
        if (url.rfind("http:http", 0) == 0) url = url.substr(5);
        nlohmann::json backend;
        backend["kind"] = "http";
        backend["base_url"] = url;
        if (!args.model.empty()) backend["model"] = args.model;
        config["backend"] = backend;
        if (!args.task.empty()) config["task"] = args.task;
    } else {
        error = "--backend must be script:<file> or http:<url>";
        return {};
    }
    if (!args.inject_faults.empty()) query["faults"] = args.inject_faults;
    config["queries"] = {query};
    return config.dump();
}

int cmd_run(const RunArgs& args) {
    ss_experiment* experiment = nullptr;
    ss_status status;
    if (!args.config_path.empty()) {
        status = ss_experiment_open(args.config_path.c_str(), &experiment);
    } else {
        std::string error;
        const std::string doc = single_run_config(args, error);
        if (doc.empty()) {
            std::fprintf(stderr, "error: %s\n", error.c_str());
            return 2;
        }
        status = ss_experiment_open_json(doc.c_str(), ".", &experiment);
    }
    if (status != SS_OK) return fail(status);

    char* diagnostics = nullptr;
    status = ss_experiment_validate(experiment, &diagnostics);
    if (status != SS_OK) {
        ss_experiment_close(experiment);
        return fail(status);
    }
    if (diagnostics && diagnostics[0] != '\0') {
        std::fprintf(stderr, "invalid configuration:\n%s\n", diagnostics);
        ss_string_free(diagnostics);
        ss_experiment_close(experiment);
        return 2;
    }
    ss_string_free(diagnostics);

    status = ss_experiment_run(experiment);
    if (status != SS_OK) {
        ss_experiment_close(experiment);
        return fail(status);
    }
    const int count = ss_experiment_trace_count(experiment);
    for (int i = 0; i < count; ++i) {
        std::printf("%s\n", ss_experiment_trace_path(experiment, i));
    }
    ss_experiment_close(experiment);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"long-horizon agent runtime with overlapped, judged context compaction"};
    app.require_subcommand(1);

    RunArgs run_args;
    CLI::App* run = app.add_subcommand("run", "execute a run or an experiment grid");
    run->add_option("--config", run_args.config_path, "experiment config JSON (grid form)");
    run->add_option("--mode", run_args.mode, "sync | async-nojudge | slipstream");
    run->add_option("--threshold", run_args.threshold, "compaction trigger threshold in tokens");
    run->add_option("--accept-threshold", run_args.accept_threshold, "judge accept score (0-10)");
    run->add_option("--k-max", run_args.k_max, "speculative window cap");
    run->add_option("--max-update-attempts", run_args.max_update_attempts,
                    "targeted update attempts before sync fallback");
    run->add_option("--max-steps", run_args.max_steps, "agent turn cap");
    run->add_option("--seed", run_args.seed, "run seed recorded in traces");
    run->add_option("--backend", run_args.backend, "script:<file> or http:<url>");
    run->add_option("--model", run_args.model, "model name for the http backend");
    run->add_option("--task", run_args.task, "initial task message for the http backend");
    run->add_option("--inject-faults", run_args.inject_faults,
                    "corruption schedule JSON applied to compaction candidates");
    run->add_option("--trace-out", run_args.trace_out, "trace file path for a single run");
    run->add_option("--query-name", run_args.query_name, "query label recorded in the trace");
    run->add_flag("--oracle-judge", run_args.oracle_judge,
                  "judge by checking the injected fault spans instead of an LLM");

    std::string traces_glob;
    std::string report_out;
    std::string report_format = "json";
    std::string labels_path;
    CLI::App* report = app.add_subcommand("report", "aggregate trace files");
    report->add_option("--traces", traces_glob, "trace files (glob), directory, or file")
        ->required();
    report->add_option("--out", report_out, "write the rendered report to this path");
    report->add_option("--format", report_format, "json | table");
    report->add_option("--labels", labels_path, "deviation labels JSON for the locality histogram");

    std::string validate_path;
    CLI::App* validate = app.add_subcommand("validate", "schema-check an experiment config");
    validate->add_option("config", validate_path, "config JSON path")->required();

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) {
        if (run_args.config_path.empty() && run_args.backend.empty()) {
            std::fprintf(stderr, "error: run needs --config or --backend\n");
            return 2;
        }
        if (run_args.config_path.empty() && run_args.trace_out.empty()) {
            std::fprintf(stderr, "error: single runs need --trace-out\n");
            return 2;
        }
        return cmd_run(run_args);
    }

    if (report->parsed()) {
        char* rendered = nullptr;
        const ss_status status =
            ss_report_run(traces_glob.c_str(), labels_path.empty() ? nullptr : labels_path.c_str(),
                          report_format.c_str(), report_out.empty() ? nullptr : report_out.c_str(),
                          report_out.empty() ? &rendered : nullptr);
        if (status != SS_OK) return fail(status);
        if (rendered) {
            std::fputs(rendered, stdout);
            ss_string_free(rendered);
        }
        return 0;
    }

    if (validate->parsed()) {
        char* diagnostics = nullptr;
        const ss_status status = ss_config_validate(validate_path.c_str(), &diagnostics);
        if (status != SS_OK) return fail(status);
        if (diagnostics && diagnostics[0] != '\0') {
            std::printf("%s\n", diagnostics);
            ss_string_free(diagnostics);
            return 1;
        }
        ss_string_free(diagnostics);
        std::printf("ok\n");
        return 0;
    }
    return 2;
}
