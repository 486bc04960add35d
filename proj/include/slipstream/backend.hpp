// Text-generation abstraction. Requests are issued as tickets so one task
// can overlap an in-flight compaction with continued agent stepping; the
// clock (simulated or wall) advances only through waits.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace slipstream {

enum class Purpose {
    agent_step,
    compaction,
    judge,
    targeted_update,
};

std::string_view to_string(Purpose purpose);
Purpose purpose_from_string(std::string_view name);

// agent_step 2048, compaction 4096, judge 512, targeted_update 4096.
int default_max_output_tokens(Purpose purpose);

struct ChatMessage {
    std::string role;
    std::string content;
};

struct GenerationRequest {
    std::vector<ChatMessage> messages;  // nonempty
    int max_output_tokens = 0;          // 0 means the purpose default
    Purpose purpose = Purpose::agent_step;
};

struct GenerationResponse {
    std::string content;
    int output_tokens = 0;
    double latency_s = 0.0;
    // Scripted agent steps may issue tool calls; empty otherwise.
    std::vector<std::string> tool_calls;
};

class Backend {
public:
    using Ticket = std::uint64_t;

    virtual ~Backend() = default;

    // Starts a generation; does not advance the clock.
    virtual Ticket begin(const GenerationRequest& request) = 0;

    // True once the ticket's result can be collected without waiting.
    virtual bool ready(Ticket ticket) = 0;

    // Blocks until the ticket completes, advancing the clock to the later of
    // its completion time and now. Throws BackendError on failure.
    virtual GenerationResponse wait(Ticket ticket) = 0;

    // Monotone nondecreasing time in seconds.
    virtual double now() = 0;

    // True when a scripted queue for this purpose has run dry; live backends
    // never exhaust.
    virtual bool exhausted(Purpose /*purpose*/) const { return false; }

    GenerationResponse generate(const GenerationRequest& request) { return wait(begin(request)); }
};

// Executes one tool call and returns (observation content, latency seconds).
// Scripted runs pop a queue sharing the simulated clock; live runs have none.
class ToolRunner {
public:
    virtual ~ToolRunner() = default;
    virtual std::pair<std::string, double> run_tool(const std::string& call) = 0;
};

}  // namespace slipstream
