#include "slipstream/compactor.hpp"

#include <fstream>

#include <json.hpp>

#include "slipstream/errors.hpp"

namespace slipstream {

using nlohmann::json;

const std::string& compaction_instruction() {
    static const std::string text =
        "Rewrite the trajectory above into a compact handover summary that you "
        "will resume the task from directly. Preserve:\n"
        "- the task goal and every hard constraint,\n"
        "- facts, entities, and results verified so far,\n"
        "- open or pending items, each marked [PENDING] or [OPEN],\n"
        "- the current plan and the immediate next action.\n"
        "Do not add information the trajectory does not support. "
        "Output only the summary text.";
    return text;
}

std::string wire_role(Role role) {
    switch (role) {
        case Role::agent_reasoning:
        case Role::tool_call:
            return "assistant";
        case Role::tool_observation:
        case Role::user:
        case Role::summary:
            return "user";
    }
    return "user";
}

GenerationRequest build_compaction_request(const ContextSnapshot& snap) {
    if (snap.steps().empty()) {
        throw std::invalid_argument("cannot build a compaction request from an empty snapshot");
    }
    GenerationRequest request;
    request.purpose = Purpose::compaction;
    request.max_output_tokens = default_max_output_tokens(Purpose::compaction);
    request.messages.push_back({"system", snap.system_preamble()});
    for (const Step& step : snap.steps()) {
        request.messages.push_back({wire_role(step.role), step.content});
    }
    request.messages.push_back({"user", compaction_instruction()});
    return request;
}

CompactOutcome finish_compaction(const ContextSnapshot& snap, GenerationResponse response,
                                 double produced_at, const TokenCounter& counter) {
    CompactOutcome outcome;
    // A candidate must compress; equality or growth signals a misconfigured
    // threshold and is handled as a failure so the fallback path stays visible.
    if (counter.count(response.content) >= snap.active_tokens()) {
        outcome.error = "candidate does not compress its source (" +
                        std::to_string(counter.count(response.content)) + " tokens vs " +
                        std::to_string(snap.active_tokens()) + ")";
        return outcome;
    }

    CompactionCandidate candidate;
    candidate.summary = std::move(response.content);
    candidate.source_snapshot_id = snap.id();
    candidate.compaction_latency = response.latency_s;
    candidate.produced_at = produced_at;
    outcome.candidate = std::move(candidate);
    return outcome;
}

CompactOutcome compact(const ContextSnapshot& snap, Backend& backend, const TokenCounter& counter) {
    CompactOutcome outcome;
    GenerationRequest request;
    try {
        request = build_compaction_request(snap);
    } catch (const std::invalid_argument& e) {
        outcome.error = e.what();
        return outcome;
    }

    GenerationResponse response;
    try {
        response = backend.generate(request);
    } catch (const BackendError& e) {
        outcome.error = e.what();
        return outcome;
    }
    return finish_compaction(snap, std::move(response), backend.now(), counter);
}

std::string_view to_string(CorruptionMode mode) {
    switch (mode) {
        case CorruptionMode::omission: return "omission";
        case CorruptionMode::commission: return "commission";
        case CorruptionMode::entity_replacement: return "entity_replacement";
    }
    throw std::invalid_argument("unknown corruption mode");
}

CorruptionMode corruption_mode_from_string(std::string_view name) {
    if (name == "omission") return CorruptionMode::omission;
    if (name == "commission") return CorruptionMode::commission;
    if (name == "entity_replacement") return CorruptionMode::entity_replacement;
    throw ParseError("unknown corruption mode: " + std::string(name));
}

CompactionCandidate corrupt(const CompactionCandidate& candidate, const CorruptionSpec& spec) {
    if (spec.target.empty()) throw std::invalid_argument("corruption target must be nonempty");
    if (spec.mode != CorruptionMode::omission && spec.replacement.empty()) {
        throw std::invalid_argument("commission/entity_replacement require a replacement");
    }
    const std::size_t pos = candidate.summary.find(spec.target);
    if (pos == std::string::npos) {
        throw InjectionError("corruption target not found in summary: " + spec.target);
    }
    CompactionCandidate corrupted = candidate;
    switch (spec.mode) {
        case CorruptionMode::omission:
            corrupted.summary.erase(pos, spec.target.size());
            break;
        case CorruptionMode::commission:
        case CorruptionMode::entity_replacement:
            corrupted.summary.replace(pos, spec.target.size(), spec.replacement);
            break;
    }
    return corrupted;
}

FaultInjector::FaultInjector(std::vector<CorruptionSpec> specs) {
    int position = 0;
    for (CorruptionSpec& spec : specs) {
        const int ordinal = spec.at.value_or(position);
        by_ordinal_[ordinal].push_back(std::move(spec));
        ++position;
    }
}

FaultInjector FaultInjector::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open fault file: " + path.string());
    json root;
    try {
        root = json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError("fault file " + path.string() + ": " + e.what());
    }
    if (!root.is_array()) throw ParseError("fault file must contain a JSON array");

    std::vector<CorruptionSpec> specs;
    for (std::size_t i = 0; i < root.size(); ++i) {
        const json& obj = root[i];
        const std::string where = "fault[" + std::to_string(i) + "]";
        if (!obj.is_object()) throw ParseError(where + " must be an object");
        CorruptionSpec spec;
        try {
            spec.mode = corruption_mode_from_string(obj.at("mode").get<std::string>());
            spec.target = obj.at("target").get<std::string>();
        } catch (const json::exception& e) {
            throw ParseError(where + ": " + e.what());
        }
        spec.replacement = obj.value("replacement", std::string{});
        if (obj.contains("at")) spec.at = obj.at("at").get<int>();
        if (spec.mode != CorruptionMode::omission && spec.replacement.empty()) {
            throw ParseError(where + ": replacement required for mode " +
                             std::string(to_string(spec.mode)));
        }
        specs.push_back(std::move(spec));
    }
    return FaultInjector(std::move(specs));
}

CompactionCandidate FaultInjector::apply(int ordinal, CompactionCandidate candidate) {
    auto it = by_ordinal_.find(ordinal);
    if (it == by_ordinal_.end()) return candidate;
    for (const CorruptionSpec& spec : it->second) {
        candidate = corrupt(candidate, spec);
        applied_[candidate.source_snapshot_id].push_back(spec);
    }
    return candidate;
}

const std::vector<CorruptionSpec>* FaultInjector::applied_for(const std::string& snapshot_id) const {
    auto it = applied_.find(snapshot_id);
    return it == applied_.end() ? nullptr : &it->second;
}

std::size_t FaultInjector::scheduled_count() const noexcept {
    std::size_t total = 0;
    for (const auto& [ordinal, specs] : by_ordinal_) total += specs.size();
    return total;
}

}  // namespace slipstream
