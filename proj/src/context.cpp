#include "slipstream/context.hpp"

#include <atomic>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "slipstream/errors.hpp"

namespace slipstream {

using nlohmann::json;

std::string_view to_string(Role role) {
    switch (role) {
        case Role::agent_reasoning: return "agent_reasoning";
        case Role::tool_call: return "tool_call";
        case Role::tool_observation: return "tool_observation";
        case Role::user: return "user";
        case Role::summary: return "summary";
    }
    throw std::invalid_argument("unknown role value");
}

Role role_from_string(std::string_view name) {
    if (name == "agent_reasoning") return Role::agent_reasoning;
    if (name == "tool_call") return Role::tool_call;
    if (name == "tool_observation") return Role::tool_observation;
    if (name == "user") return Role::user;
    if (name == "summary") return Role::summary;
    throw ParseError("unknown step role: " + std::string(name));
}

TrajectoryContext::TrajectoryContext(std::string system_preamble,
                                     std::shared_ptr<const TokenCounter> counter)
    : system_preamble_(std::move(system_preamble)),
      counter_(std::move(counter)) {
    if (!counter_) throw std::invalid_argument("token counter must not be null");
    preamble_tokens_ = counter_->count(system_preamble_);
    active_tokens_ = preamble_tokens_;
}

Step TrajectoryContext::make_step(Role role, std::string content, double wall_time) const {
    Step step;
    step.index = static_cast<int>(steps_.size());
    step.role = role;
    step.token_count = counter_->count(content);
    step.content = std::move(content);
    step.wall_time = wall_time;
    return step;
}

void TrajectoryContext::append(Step step) {
    if (step.index != static_cast<int>(steps_.size())) {
        throw SequenceError("append_step: expected index " + std::to_string(steps_.size()) +
                            ", got " + std::to_string(step.index));
    }
    active_tokens_ += step.token_count;
    steps_.push_back(std::move(step));
}

bool should_compact(const TrajectoryContext& ctx, int threshold_tokens) {
    if (threshold_tokens <= 0) throw std::invalid_argument("threshold must be positive");
    return ctx.active_tokens() >= threshold_tokens;
}

ContextSnapshot::ContextSnapshot(std::string snapshot_id, const TrajectoryContext& ctx)
    : id_(std::move(snapshot_id)),
      system_preamble_(ctx.system_preamble()),
      steps_(ctx.steps()),
      active_tokens_(ctx.active_tokens()) {}

std::string ContextSnapshot::to_jsonl() const {
    std::ostringstream out;
    json header;
    header["snapshot_id"] = id_;
    header["system_preamble"] = system_preamble_;
    header["active_tokens"] = active_tokens_;
    out << header.dump() << '\n';
    for (const Step& step : steps_) {
        json line;
        line["index"] = step.index;
        line["role"] = to_string(step.role);
        line["content"] = step.content;
        line["token_count"] = step.token_count;
        line["wall_time"] = step.wall_time;
        out << line.dump() << '\n';
    }
    return out.str();
}

ContextSnapshot ContextSnapshot::from_jsonl(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line)) throw ParseError("snapshot stream is empty");

    ContextSnapshot snap;
    try {
        json header = json::parse(line);
        snap.id_ = header.at("snapshot_id").get<std::string>();
        snap.system_preamble_ = header.at("system_preamble").get<std::string>();
        snap.active_tokens_ = header.at("active_tokens").get<int>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("snapshot header: ") + e.what());
    }

    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            json obj = json::parse(line);
            Step step;
            step.index = obj.at("index").get<int>();
            step.role = role_from_string(obj.at("role").get<std::string>());
            step.content = obj.at("content").get<std::string>();
            step.token_count = obj.at("token_count").get<int>();
            step.wall_time = obj.at("wall_time").get<double>();
            snap.steps_.push_back(std::move(step));
        } catch (const json::exception& e) {
            throw ParseError("snapshot line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return snap;
}

ContextSnapshot snapshot(const TrajectoryContext& ctx) {
    static std::atomic<std::uint64_t> next_id{0};
    return ContextSnapshot("s" + std::to_string(++next_id), ctx);
}

ContextSnapshot snapshot(const TrajectoryContext& ctx, std::string snapshot_id) {
    return ContextSnapshot(std::move(snapshot_id), ctx);
}

}  // namespace slipstream
