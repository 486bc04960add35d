#include "slipstream/scripted_backend.hpp"

#include <algorithm>
#include <fstream>

#include "slipstream/errors.hpp"
#include "slipstream/tokens.hpp"

namespace slipstream {

using nlohmann::json;

namespace {

ScriptEntry parse_entry(const json& obj, const std::string& where) {
    if (!obj.is_object()) throw ParseError(where + ": script entries must be objects");
    ScriptEntry entry;
    entry.content = obj.value("content", std::string{});
    entry.latency_s = obj.value("latency_s", 0.0);
    entry.fail = obj.value("fail", std::string{});
    if (entry.latency_s < 0.0) throw ParseError(where + ": latency_s must be >= 0");
    if (!entry.fail.empty() && entry.fail != "timeout" && entry.fail != "transport") {
        throw ParseError(where + ": fail must be \"timeout\" or \"transport\"");
    }
    if (obj.contains("tool_call")) {
        entry.tool_calls.push_back(obj.at("tool_call").get<std::string>());
    }
    if (obj.contains("tool_calls")) {
        for (const auto& call : obj.at("tool_calls")) {
            entry.tool_calls.push_back(call.get<std::string>());
        }
    }
    return entry;
}

}  // namespace

void ScriptedBackend::load(const json& script) {
    if (!script.is_object()) throw ParseError("script root must be a JSON object");
    for (Purpose purpose : {Purpose::agent_step, Purpose::compaction, Purpose::judge,
                            Purpose::targeted_update}) {
        const std::string key{to_string(purpose)};
        if (!script.contains(key)) continue;
        const json& arr = script.at(key);
        if (!arr.is_array()) throw ParseError("script." + key + " must be an array");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            push(purpose, parse_entry(arr[i], "script." + key + "[" + std::to_string(i) + "]"));
        }
    }
    if (script.contains("tool")) {
        const json& arr = script.at("tool");
        if (!arr.is_array()) throw ParseError("script.tool must be an array");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            ScriptEntry entry = parse_entry(arr[i], "script.tool[" + std::to_string(i) + "]");
            push_tool(std::move(entry.content), entry.latency_s);
        }
    }
}

std::unique_ptr<ScriptedBackend> ScriptedBackend::from_json(const json& script) {
    auto backend = std::make_unique<ScriptedBackend>();
    backend->load(script);
    return backend;
}

std::unique_ptr<ScriptedBackend> ScriptedBackend::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open script file: " + path.string());
    json script;
    try {
        script = json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError("script file " + path.string() + ": " + e.what());
    }
    return from_json(script);
}

void ScriptedBackend::push(Purpose purpose, ScriptEntry entry) {
    std::lock_guard lock(mutex_);
    queues_[purpose].push_back(std::move(entry));
}

void ScriptedBackend::push_tool(std::string content, double latency_s) {
    std::lock_guard lock(mutex_);
    tool_queue_.emplace_back(std::move(content), latency_s);
}

Backend::Ticket ScriptedBackend::begin(const GenerationRequest& request) {
    if (request.messages.empty()) throw std::invalid_argument("generation request has no messages");
    std::lock_guard lock(mutex_);
    auto& queue = queues_[request.purpose];
    if (queue.empty()) {
        throw BackendError("scripted backend exhausted for purpose " +
                           std::string(to_string(request.purpose)));
    }
    ScriptEntry entry = std::move(queue.front());
    queue.pop_front();

    Pending pending;
    pending.completes_at = now_ + entry.latency_s;
    pending.fail = entry.fail;
    pending.response.content = std::move(entry.content);
    pending.response.latency_s = entry.latency_s;
    pending.response.output_tokens = default_token_counter()->count(pending.response.content);
    pending.response.tool_calls = std::move(entry.tool_calls);

    Ticket ticket = next_ticket_++;
    pending_.emplace(ticket, std::move(pending));
    return ticket;
}

bool ScriptedBackend::ready(Ticket ticket) {
    std::lock_guard lock(mutex_);
    auto it = pending_.find(ticket);
    if (it == pending_.end()) throw std::invalid_argument("unknown or collected ticket");
    return it->second.completes_at <= now_;
}

GenerationResponse ScriptedBackend::wait(Ticket ticket) {
    std::lock_guard lock(mutex_);
    auto it = pending_.find(ticket);
    if (it == pending_.end()) throw std::invalid_argument("unknown or collected ticket");
    // The simulated clock jumps to the completion event, never backwards.
    now_ = std::max(now_, it->second.completes_at);
    Pending pending = std::move(it->second);
    pending_.erase(it);
    if (pending.fail == "timeout") throw BackendError("scripted timeout", false);
    if (pending.fail == "transport") throw BackendError("scripted transport failure", true);
    return std::move(pending.response);
}

double ScriptedBackend::now() {
    std::lock_guard lock(mutex_);
    return now_;
}

bool ScriptedBackend::exhausted(Purpose purpose) const {
    std::lock_guard lock(mutex_);
    auto it = queues_.find(purpose);
    return it == queues_.end() || it->second.empty();
}

std::pair<std::string, double> ScriptedBackend::run_tool(const std::string& call) {
    std::lock_guard lock(mutex_);
    if (tool_queue_.empty()) {
        throw BackendError("scripted tool queue exhausted (call: " + call + ")");
    }
    auto [content, latency] = std::move(tool_queue_.front());
    tool_queue_.pop_front();
    now_ += latency;
    return {std::move(content), latency};
}

std::size_t ScriptedBackend::remaining(Purpose purpose) const {
    std::lock_guard lock(mutex_);
    auto it = queues_.find(purpose);
    return it == queues_.end() ? 0 : it->second.size();
}

std::size_t ScriptedBackend::remaining_tools() const {
    std::lock_guard lock(mutex_);
    return tool_queue_.size();
}

}  // namespace slipstream
