#include "slipstream.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "slipstream/config.hpp"
#include "slipstream/errors.hpp"
#include "slipstream/experiment.hpp"
#include "slipstream/metrics.hpp"

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& message) { g_last_error = message; }

char* dup_string(const std::string& value) {
    char* out = static_cast<char*>(std::malloc(value.size() + 1));
    if (out) std::memcpy(out, value.c_str(), value.size() + 1);
    return out;
}

ss_status classify(const std::exception& e) {
    if (dynamic_cast<const slipstream::ParseError*>(&e)) return SS_ERR_PARSE;
    if (dynamic_cast<const slipstream::BackendError*>(&e)) return SS_ERR_BACKEND;
    if (dynamic_cast<const slipstream::InvariantError*>(&e)) return SS_ERR_INVARIANT;
    if (dynamic_cast<const std::invalid_argument*>(&e)) return SS_ERR_INVALID_ARG;
    if (dynamic_cast<const slipstream::Error*>(&e)) return SS_ERR_CONFIG;
    return SS_ERR_INTERNAL;
}

std::string join_lines(const std::vector<std::string>& lines) {
    std::string joined;
    for (const std::string& line : lines) {
        if (!joined.empty()) joined += '\n';
        joined += line;
    }
    return joined;
}

}  // namespace

struct ss_experiment {
    slipstream::ExperimentConfig config;
    std::vector<std::string> trace_files;
};

extern "C" {

const char* ss_version(void) { return "0.1.0"; }

const char* ss_last_error(void) { return g_last_error.c_str(); }

void ss_string_free(char* s) { std::free(s); }

ss_status ss_experiment_open(const char* config_path, ss_experiment** out) {
    if (!config_path || !out) {
        set_error("config_path and out must be non-null");
        return SS_ERR_INVALID_ARG;
    }
    *out = nullptr;
    try {
        auto handle = std::make_unique<ss_experiment>();
        handle->config = slipstream::load_config(config_path);
        *out = handle.release();
        return SS_OK;
    } catch (const std::exception& e) {
        set_error(e.what());
        return classify(e);
    }
}

ss_status ss_experiment_open_json(const char* config_json, const char* base_dir,
                                  ss_experiment** out) {
    if (!config_json || !out) {
        set_error("config_json and out must be non-null");
        return SS_ERR_INVALID_ARG;
    }
    *out = nullptr;
    try {
        auto handle = std::make_unique<ss_experiment>();
        nlohmann::json doc = nlohmann::json::parse(config_json);
        handle->config = slipstream::parse_config(doc, base_dir ? base_dir : ".");
        *out = handle.release();
        return SS_OK;
    } catch (const nlohmann::json::exception& e) {
        set_error(std::string("config JSON: ") + e.what());
        return SS_ERR_PARSE;
    } catch (const std::exception& e) {
        set_error(e.what());
        return classify(e);
    }
}

ss_status ss_experiment_validate(ss_experiment* experiment, char** diagnostics_out) {
    if (!experiment || !diagnostics_out) {
        set_error("experiment and diagnostics_out must be non-null");
        return SS_ERR_INVALID_ARG;
    }
    try {
        *diagnostics_out = dup_string(join_lines(slipstream::validate_config(experiment->config)));
        return SS_OK;
    } catch (const std::exception& e) {
        set_error(e.what());
        return classify(e);
    }
}

ss_status ss_experiment_run(ss_experiment* experiment) {
    if (!experiment) {
        set_error("experiment must be non-null");
        return SS_ERR_INVALID_ARG;
    }
    try {
        slipstream::ExperimentResult result = slipstream::run_experiment(experiment->config);
        experiment->trace_files = std::move(result.trace_files);
        return SS_OK;
    } catch (const std::exception& e) {
        set_error(e.what());
        return classify(e);
    }
}

int ss_experiment_trace_count(const ss_experiment* experiment) {
    return experiment ? static_cast<int>(experiment->trace_files.size()) : 0;
}

const char* ss_experiment_trace_path(const ss_experiment* experiment, int index) {
    if (!experiment || index < 0 ||
        index >= static_cast<int>(experiment->trace_files.size())) {
        return nullptr;
    }
    return experiment->trace_files[static_cast<std::size_t>(index)].c_str();
}

void ss_experiment_close(ss_experiment* experiment) { delete experiment; }

ss_status ss_config_validate(const char* config_path, char** diagnostics_out) {
    if (!config_path || !diagnostics_out) {
        set_error("config_path and diagnostics_out must be non-null");
        return SS_ERR_INVALID_ARG;
    }
    try {
        *diagnostics_out = dup_string(join_lines(slipstream::validate_config_file(config_path)));
        return SS_OK;
    } catch (const std::exception& e) {
        set_error(e.what());
        return classify(e);
    }
}

ss_status ss_report_run(const char* traces_glob, const char* labels_path, const char* format,
                        const char* out_path, char** report_out) {
    if (!traces_glob) {
        set_error("traces_glob must be non-null");
        return SS_ERR_INVALID_ARG;
    }
    const std::string fmt = format ? format : "json";
    if (fmt != "json" && fmt != "table") {
        set_error("format must be \"json\" or \"table\", got \"" + fmt + "\"");
        return SS_ERR_INVALID_ARG;
    }
    try {
        const std::vector<std::string> files = slipstream::glob_files(traces_glob);
        if (files.empty()) {
            set_error(std::string("no trace files match: ") + traces_glob);
            return SS_ERR_IO;
        }
        std::vector<std::pair<std::string, slipstream::ParsedTrace>> traces;
        traces.reserve(files.size());
        for (const std::string& file : files) {
            traces.emplace_back(file, slipstream::parse_trace_file(file));
        }
        std::optional<std::vector<slipstream::DeviationLabel>> labels;
        if (labels_path) labels = slipstream::load_labels(labels_path);

        const slipstream::Report report = slipstream::build_report(traces, labels);
        const std::string rendered =
            fmt == "json" ? slipstream::report_to_json(report) : slipstream::report_to_table(report);

        if (out_path) {
            std::ofstream out(out_path, std::ios::binary);
            if (!out) {
                set_error(std::string("cannot write report file: ") + out_path);
                return SS_ERR_IO;
            }
            out << rendered;
        }
        if (report_out) *report_out = dup_string(rendered);
        return SS_OK;
    } catch (const std::exception& e) {
        set_error(e.what());
        return classify(e);
    }
}

}  // extern "C"
