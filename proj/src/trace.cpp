#include "slipstream/trace.hpp"

#include <fstream>

#include <json.hpp>

#include "slipstream/errors.hpp"

namespace slipstream {

using nlohmann::json;

std::string_view to_string(Mode mode) {
    switch (mode) {
        case Mode::sync: return "sync";
        case Mode::async_nojudge: return "async_nojudge";
        case Mode::slipstream: return "slipstream";
    }
    throw std::invalid_argument("unknown mode value");
}

Mode mode_from_string(std::string_view name) {
    if (name == "sync") return Mode::sync;
    if (name == "async_nojudge" || name == "async-nojudge") return Mode::async_nojudge;
    if (name == "slipstream") return Mode::slipstream;
    throw ParseError("unknown mode: " + std::string(name));
}

std::string_view to_string(Outcome outcome) {
    switch (outcome) {
        case Outcome::adopted: return "adopted";
        case Outcome::adopted_after_update: return "adopted_after_update";
        case Outcome::sync_fallback: return "sync_fallback";
        case Outcome::discarded: return "discarded";
    }
    throw std::invalid_argument("unknown outcome value");
}

Outcome outcome_from_string(std::string_view name) {
    if (name == "adopted") return Outcome::adopted;
    if (name == "adopted_after_update") return Outcome::adopted_after_update;
    if (name == "sync_fallback") return Outcome::sync_fallback;
    if (name == "discarded") return Outcome::discarded;
    throw ParseError("unknown outcome: " + std::string(name));
}

namespace {

void put_optional(json& obj, const char* key, const std::optional<double>& value) {
    if (value) obj[key] = *value;
}

std::optional<double> get_optional(const json& obj, const char* key) {
    if (!obj.contains(key)) return std::nullopt;
    return obj.at(key).get<double>();
}

json verdict_to_json(const JudgeVerdict& verdict) {
    json obj;
    obj["plan_alignment"] = verdict.plan_alignment;
    obj["information_preservation"] = verdict.information_preservation;
    obj["score"] = verdict.score;
    obj["reasoning"] = verdict.reasoning;
    obj["formula_corrected"] = verdict.formula_corrected;
    return obj;
}

JudgeVerdict verdict_from_json(const json& obj) {
    JudgeVerdict verdict;
    verdict.plan_alignment = obj.at("plan_alignment").get<int>();
    verdict.information_preservation = obj.at("information_preservation").get<int>();
    verdict.score = obj.at("score").get<int>();
    verdict.reasoning = obj.at("reasoning").get<std::string>();
    verdict.formula_corrected = obj.value("formula_corrected", false);
    return verdict;
}

}  // namespace

void TraceWriter::header(const TraceHeader& header) {
    json obj;
    obj["type"] = "header";
    obj["format_version"] = header.format_version;
    obj["mode"] = to_string(header.mode);
    obj["threshold"] = header.threshold;
    obj["accept_threshold"] = header.accept_threshold;
    obj["k_max"] = header.k_max;
    obj["max_update_attempts"] = header.max_update_attempts;
    obj["seed"] = header.seed;
    obj["query"] = header.query;
    obj["backend_kind"] = header.backend_kind;
    obj["preamble_tokens"] = header.preamble_tokens;
    buffer_ += obj.dump();
    buffer_ += '\n';
}

void TraceWriter::step(const TraceStep& step) {
    json obj;
    obj["type"] = "step";
    obj["index"] = step.index;
    obj["role"] = to_string(step.role);
    obj["content"] = step.content;
    obj["token_count"] = step.token_count;
    obj["wall_time"] = step.wall_time;
    obj["start"] = step.start;
    obj["end"] = step.end;
    buffer_ += obj.dump();
    buffer_ += '\n';
}

void TraceWriter::compaction(const CompactionEvent& event) {
    json obj;
    obj["type"] = "compaction";
    obj["snapshot_id"] = event.snapshot_id;
    obj["mode"] = to_string(event.mode);
    obj["ordinal"] = event.ordinal;
    obj["trigger_time"] = event.trigger_time;
    obj["compactor_start"] = event.compactor_start;
    put_optional(obj, "compactor_end", event.compactor_end);
    put_optional(obj, "judge_start", event.judge_start);
    put_optional(obj, "judge_end", event.judge_end);
    put_optional(obj, "update_start", event.update_start);
    put_optional(obj, "update_end", event.update_end);
    put_optional(obj, "fallback_start", event.fallback_start);
    put_optional(obj, "fallback_end", event.fallback_end);
    put_optional(obj, "adopt_time", event.adopt_time);
    if (event.k) obj["k"] = *event.k;
    if (event.verdict) obj["verdict"] = verdict_to_json(*event.verdict);
    if (!event.decision.empty()) obj["decision"] = event.decision;
    obj["outcome"] = to_string(event.outcome);
    obj["stalled"] = event.stalled;
    if (!event.error.empty()) obj["error"] = event.error;
    obj["summary"] = event.summary;
    obj["summary_tokens"] = event.summary_tokens;
    buffer_ += obj.dump();
    buffer_ += '\n';
}

void TraceWriter::end(const TraceEnd& end) {
    json obj;
    obj["type"] = "end";
    obj["total_time"] = end.total_time;
    obj["steps"] = end.steps;
    obj["final_active_tokens"] = end.final_active_tokens;
    obj["outcome_counts"] = end.outcome_counts;
    buffer_ += obj.dump();
    buffer_ += '\n';
}

void TraceWriter::write_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write trace file: " + path);
    out << buffer_;
}

ParsedTrace parse_trace(const std::string& text, const std::string& name) {
    ParsedTrace trace;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    bool saw_header = false;
    bool saw_end = false;

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = name + " line " + std::to_string(line_no);
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(where + ": " + e.what());
        }
        try {
            const std::string type = obj.at("type").get<std::string>();
            if (type == "header") {
                trace.header.format_version = obj.at("format_version").get<int>();
                trace.header.mode = mode_from_string(obj.at("mode").get<std::string>());
                trace.header.threshold = obj.at("threshold").get<int>();
                trace.header.accept_threshold = obj.at("accept_threshold").get<int>();
                trace.header.k_max = obj.at("k_max").get<int>();
                trace.header.max_update_attempts = obj.at("max_update_attempts").get<int>();
                trace.header.seed = obj.at("seed").get<std::uint64_t>();
                trace.header.query = obj.at("query").get<std::string>();
                trace.header.backend_kind = obj.at("backend_kind").get<std::string>();
                trace.header.preamble_tokens = obj.at("preamble_tokens").get<int>();
                saw_header = true;
            } else if (type == "step") {
                TraceStep step;
                step.index = obj.at("index").get<int>();
                step.role = role_from_string(obj.at("role").get<std::string>());
                step.content = obj.at("content").get<std::string>();
                step.token_count = obj.at("token_count").get<int>();
                step.wall_time = obj.at("wall_time").get<double>();
                step.start = obj.at("start").get<double>();
                step.end = obj.at("end").get<double>();
                trace.steps.push_back(std::move(step));
            } else if (type == "compaction") {
                CompactionEvent event;
                event.snapshot_id = obj.at("snapshot_id").get<std::string>();
                event.mode = mode_from_string(obj.at("mode").get<std::string>());
                event.ordinal = obj.at("ordinal").get<int>();
                event.trigger_time = obj.at("trigger_time").get<double>();
                event.compactor_start = obj.at("compactor_start").get<double>();
                event.compactor_end = get_optional(obj, "compactor_end");
                event.judge_start = get_optional(obj, "judge_start");
                event.judge_end = get_optional(obj, "judge_end");
                event.update_start = get_optional(obj, "update_start");
                event.update_end = get_optional(obj, "update_end");
                event.fallback_start = get_optional(obj, "fallback_start");
                event.fallback_end = get_optional(obj, "fallback_end");
                event.adopt_time = get_optional(obj, "adopt_time");
                if (obj.contains("k")) event.k = obj.at("k").get<int>();
                if (obj.contains("verdict")) event.verdict = verdict_from_json(obj.at("verdict"));
                event.decision = obj.value("decision", std::string{});
                event.outcome = outcome_from_string(obj.at("outcome").get<std::string>());
                event.stalled = obj.value("stalled", false);
                event.error = obj.value("error", std::string{});
                event.summary = obj.value("summary", std::string{});
                event.summary_tokens = obj.value("summary_tokens", 0);
                trace.events.push_back(std::move(event));
            } else if (type == "end") {
                trace.end.total_time = obj.at("total_time").get<double>();
                trace.end.steps = obj.at("steps").get<int>();
                trace.end.final_active_tokens = obj.at("final_active_tokens").get<int>();
                if (obj.contains("outcome_counts")) {
                    trace.end.outcome_counts =
                        obj.at("outcome_counts").get<std::map<std::string, int>>();
                }
                saw_end = true;
            } else {
                throw ParseError(where + ": unknown record type \"" + type + "\"");
            }
        } catch (const json::exception& e) {
            throw ParseError(where + ": " + e.what());
        }
    }
    if (!saw_header) throw ParseError(name + ": missing header record");
    if (!saw_end) throw ParseError(name + ": missing end record");
    return trace;
}

ParsedTrace parse_trace_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open trace file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_trace(buffer.str(), path);
}

}  // namespace slipstream
