// The execution state machine: runs the reason-then-act loop, triggers
// compaction at the token threshold, and in overlapped modes keeps stepping
// on the uncompacted context while the compactor runs, then judges, adopts,
// targeted-updates, or falls back synchronously.
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "slipstream/backend.hpp"
#include "slipstream/compactor.hpp"
#include "slipstream/context.hpp"
#include "slipstream/events.hpp"
#include "slipstream/judge.hpp"
#include "slipstream/trace.hpp"

namespace slipstream {

struct RunConfig {
    Mode mode = Mode::slipstream;
    int threshold = 4096;          // tokens; > 0
    int accept_threshold = 7;      // 0..10
    int k_max = 8;                 // stepping pauses once the window reaches this
    int max_update_attempts = 1;
    std::uint64_t seed = 0;
    int max_steps = 100000;        // turn cap; scripted runs also stop when the script ends
    bool include_observations_in_judge = false;
    std::string run_label = "run";   // snapshot id prefix
    std::string query;               // trace header metadata
    std::string backend_kind = "script";
};

struct RunHooks {
    // Called after every adoption with the fresh context and its event.
    std::function<void(const TrajectoryContext&, const CompactionEvent&)> on_adopt;
};

struct RunResult {
    TrajectoryContext final_context;
    double total_time = 0.0;
    int turns = 0;
    std::vector<CompactionEvent> events;
};

// Repair instruction for rejected candidates.
const std::string& update_instruction();

// Request carrying the candidate, the judge's diagnosis, and the window
// evidence. Throws std::invalid_argument on an empty diagnosis.
GenerationRequest build_update_request(const CompactionCandidate& candidate,
                                       const std::string& diagnosis,
                                       const SpeculativeWindow& window);

struct UpdateOutcome {
    std::optional<CompactionCandidate> candidate;
    std::string error;

    bool ok() const noexcept { return candidate.has_value(); }
};

// One repair pass: minimal edit, no re-summarization. The compression
// invariant is re-checked against the original snapshot size; failure
// reports an outcome the orchestrator turns into the sync fallback.
UpdateOutcome targeted_update(const CompactionCandidate& candidate, const std::string& diagnosis,
                              const SpeculativeWindow& window, Backend& backend,
                              const TokenCounter& counter, int source_active_tokens);

// Chat request for the next agent step: preamble plus the whole context.
GenerationRequest build_agent_request(const TrajectoryContext& ctx);

class Orchestrator {
public:
    Orchestrator(Backend& backend, RunConfig config);

    void set_judge(JudgeClient* judge) { judge_ = judge; }
    void set_tool_runner(ToolRunner* tools) { tools_ = tools; }
    void set_fault_injector(FaultInjector* injector) { injector_ = injector; }
    void set_trace_writer(TraceWriter* writer) { trace_ = writer; }
    void set_hooks(RunHooks hooks) { hooks_ = std::move(hooks); }

    // Consumes the initial context and drives it to completion.
    RunResult run(TrajectoryContext initial);

private:
    struct InFlight {
        ContextSnapshot snap;
        Backend::Ticket ticket = 0;
        CompactionEvent event;
        std::vector<Step> window_steps;
    };

    std::string next_snapshot_id();
    void start_async_compaction();
    void resolve_compaction();
    void run_sync_cycle();
    void adopt(const CompactionCandidate& candidate, const SpeculativeWindow& window,
               CompactionEvent& event, Outcome outcome);
    bool adopt_summary_only(const CompactionCandidate& candidate, CompactionEvent& event,
                            Outcome outcome);
    void finish_event(CompactionEvent event);
    void run_turn();
    void trace_step(const Step& step, double start, double end);

    Backend* backend_;
    RunConfig config_;
    JudgeClient* judge_ = nullptr;
    ToolRunner* tools_ = nullptr;
    FaultInjector* injector_ = nullptr;
    TraceWriter* trace_ = nullptr;
    RunHooks hooks_;

    TrajectoryContext ctx_;
    std::optional<InFlight> inflight_;
    std::vector<CompactionEvent> events_;
    int turns_ = 0;
    int snapshot_seq_ = 0;
    int compaction_ordinal_ = 0;
    // After a failed lifecycle the next trigger waits for one completed turn,
    // so a broken compactor cannot spin without agent progress.
    bool defer_trigger_ = false;
};

}  // namespace slipstream
