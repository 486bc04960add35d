// Deterministic scripted backend with a discrete-event simulated clock.
// Replaying a script yields byte-identical responses and timestamps, which
// is what makes the latency-hiding assertions exact.
#pragma once

#include <cstddef>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include <json.hpp>

#include "slipstream/backend.hpp"

namespace slipstream {

struct ScriptEntry {
    std::string content;
    double latency_s = 0.0;
    // "" = succeed; "timeout" and "transport" surface as BackendError.
    std::string fail;
    std::vector<std::string> tool_calls;
};

// Script files are JSON objects with per-purpose arrays of
// {content, latency_s, fail?, tool_call?|tool_calls?} plus an optional
// "tool" array of {content, latency_s} consumed by run_tool. Unknown keys
// (workload metadata) are ignored here.
class ScriptedBackend final : public Backend, public ToolRunner {
public:
    ScriptedBackend() = default;

    // Appends the script's per-purpose queues and tool entries to this backend.
    void load(const nlohmann::json& script);

    static std::unique_ptr<ScriptedBackend> from_json(const nlohmann::json& script);
    static std::unique_ptr<ScriptedBackend> from_file(const std::filesystem::path& path);

    void push(Purpose purpose, ScriptEntry entry);
    void push_tool(std::string content, double latency_s);

    Ticket begin(const GenerationRequest& request) override;
    bool ready(Ticket ticket) override;
    GenerationResponse wait(Ticket ticket) override;
    double now() override;
    bool exhausted(Purpose purpose) const override;

    // Pops the next scripted observation and advances the clock by its latency.
    std::pair<std::string, double> run_tool(const std::string& call) override;

    std::size_t remaining(Purpose purpose) const;
    std::size_t remaining_tools() const;

private:
    struct Pending {
        double completes_at = 0.0;
        GenerationResponse response;
        std::string fail;
        bool collected = false;
    };

    mutable std::mutex mutex_;
    double now_ = 0.0;
    Ticket next_ticket_ = 1;
    std::map<Purpose, std::deque<ScriptEntry>> queues_;
    std::deque<std::pair<std::string, double>> tool_queue_;
    std::map<Ticket, Pending> pending_;
};

}  // namespace slipstream
