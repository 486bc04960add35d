#include "slipstream/orchestrator.hpp"

#include <sstream>

#include "slipstream/errors.hpp"

namespace slipstream {

const std::string& update_instruction() {
    static const std::string text =
        "Apply the smallest edit that fixes the diagnosis: restore the omitted "
        "facts or correct the mutated instructions and entities. Keep everything "
        "else unchanged. Do not re-summarize. Output only the corrected summary "
        "text.";
    return text;
}

GenerationRequest build_update_request(const CompactionCandidate& candidate,
                                       const std::string& diagnosis,
                                       const SpeculativeWindow& window) {
    if (diagnosis.empty()) {
        throw std::invalid_argument("targeted update requires a nonempty diagnosis");
    }
    std::ostringstream body;
    body << "A reviewer rejected the summary below against the agent's continued steps.\n\n"
         << "DIAGNOSIS:\n"
         << diagnosis << "\n\n"
         << "EVIDENCE (steps taken while the summary was drafted):\n"
         << serialize_window(window, /*include_observations=*/true) << "\n\n"
         << "CANDIDATE SUMMARY:\n"
         << candidate.summary << "\n\n"
         << update_instruction();

    GenerationRequest request;
    request.purpose = Purpose::targeted_update;
    request.max_output_tokens = default_max_output_tokens(Purpose::targeted_update);
    request.messages.push_back({"user", body.str()});
    return request;
}

UpdateOutcome targeted_update(const CompactionCandidate& candidate, const std::string& diagnosis,
                              const SpeculativeWindow& window, Backend& backend,
                              const TokenCounter& counter, int source_active_tokens) {
    UpdateOutcome outcome;
    const GenerationRequest request = build_update_request(candidate, diagnosis, window);

    GenerationResponse response;
    try {
        response = backend.generate(request);
    } catch (const BackendError& e) {
        outcome.error = e.what();
        return outcome;
    }

    if (counter.count(response.content) >= source_active_tokens) {
        outcome.error = "updated summary does not compress its source (" +
                        std::to_string(counter.count(response.content)) + " tokens vs " +
                        std::to_string(source_active_tokens) + ")";
        return outcome;
    }

    CompactionCandidate updated = candidate;
    updated.summary = std::move(response.content);
    updated.produced_at = backend.now();
    outcome.candidate = std::move(updated);
    return outcome;
}

GenerationRequest build_agent_request(const TrajectoryContext& ctx) {
    GenerationRequest request;
    request.purpose = Purpose::agent_step;
    request.max_output_tokens = default_max_output_tokens(Purpose::agent_step);
    request.messages.push_back({"system", ctx.system_preamble()});
    for (const Step& step : ctx.steps()) {
        request.messages.push_back({wire_role(step.role), step.content});
    }
    return request;
}

Orchestrator::Orchestrator(Backend& backend, RunConfig config)
    : backend_(&backend), config_(std::move(config)) {
    if (config_.threshold <= 0) throw std::invalid_argument("threshold must be positive");
    if (config_.accept_threshold < 0 || config_.accept_threshold > 10) {
        throw std::invalid_argument("accept_threshold must be within [0,10]");
    }
    if (config_.k_max < 1) throw std::invalid_argument("k_max must be at least 1");
    if (config_.max_update_attempts < 0) {
        throw std::invalid_argument("max_update_attempts must be >= 0");
    }
}

std::string Orchestrator::next_snapshot_id() {
    return config_.run_label + "s" + std::to_string(++snapshot_seq_);
}

void Orchestrator::trace_step(const Step& step, double start, double end) {
    if (!trace_) return;
    TraceStep record;
    record.index = step.index;
    record.role = step.role;
    record.content = step.content;
    record.token_count = step.token_count;
    record.wall_time = step.wall_time;
    record.start = start;
    record.end = end;
    trace_->step(record);
}

void Orchestrator::finish_event(CompactionEvent event) {
    if (trace_) trace_->compaction(event);
    events_.push_back(std::move(event));
}

RunResult Orchestrator::run(TrajectoryContext initial) {
    ctx_ = std::move(initial);
    events_.clear();
    turns_ = 0;
    inflight_.reset();
    defer_trigger_ = false;

    if (trace_) {
        TraceHeader header;
        header.mode = config_.mode;
        header.threshold = config_.threshold;
        header.accept_threshold = config_.accept_threshold;
        header.k_max = config_.k_max;
        header.max_update_attempts = config_.max_update_attempts;
        header.seed = config_.seed;
        header.query = config_.query;
        header.backend_kind = config_.backend_kind;
        header.preamble_tokens = ctx_.preamble_tokens();
        trace_->header(header);
        const double t0 = backend_->now();
        for (const Step& step : ctx_.steps()) trace_step(step, t0, t0);
    }

    while (true) {
        // A finished compaction is observed at step boundaries only, keeping
        // the adoption point clean.
        if (inflight_ && backend_->ready(inflight_->ticket)) {
            resolve_compaction();
            continue;
        }

        if (turns_ >= config_.max_steps || backend_->exhausted(Purpose::agent_step)) break;

        // Retrigger suppression: the predicate is not re-evaluated while a
        // compaction is in flight. A step-less context has nothing to compact.
        if (!inflight_ && !defer_trigger_ && !ctx_.steps().empty() &&
            should_compact(ctx_, config_.threshold)) {
            if (config_.mode == Mode::sync) {
                run_sync_cycle();
                continue;
            }
            start_async_compaction();
            if (backend_->ready(inflight_->ticket)) {
                // Zero-latency compactor: resolves before the first window step.
                resolve_compaction();
                continue;
            }
        }

        if (inflight_ && static_cast<int>(inflight_->window_steps.size()) >= config_.k_max) {
            // Window is full; stepping pauses until the compactor returns.
            inflight_->event.stalled = true;
            resolve_compaction();
            continue;
        }

        run_turn();
    }

    if (inflight_) {
        // The task finished while compaction was still running; the candidate
        // has no future steps to serve. compactor_end stays unset.
        InFlight flight = std::move(*inflight_);
        inflight_.reset();
        flight.event.k = static_cast<int>(flight.window_steps.size());
        flight.event.outcome = Outcome::discarded;
        flight.event.error = "agent task completed during compaction";
        finish_event(std::move(flight.event));
    }

    RunResult result;
    result.total_time = backend_->now();
    result.turns = turns_;
    result.events = events_;

    if (trace_) {
        TraceEnd end;
        end.total_time = result.total_time;
        end.steps = static_cast<int>(ctx_.steps().size());
        end.final_active_tokens = ctx_.active_tokens();
        for (const CompactionEvent& event : events_) {
            end.outcome_counts[std::string(to_string(event.outcome))]++;
        }
        trace_->end(end);
    }

    result.final_context = std::move(ctx_);
    return result;
}

void Orchestrator::start_async_compaction() {
    if (inflight_) throw InvariantError("compaction started while another is in flight");

    InFlight flight;
    flight.event.mode = config_.mode;
    flight.event.ordinal = compaction_ordinal_++;
    flight.event.trigger_time = backend_->now();
    flight.event.compactor_start = flight.event.trigger_time;
    flight.snap = snapshot(ctx_, next_snapshot_id());
    flight.event.snapshot_id = flight.snap.id();
    flight.ticket = backend_->begin(build_compaction_request(flight.snap));
    inflight_ = std::move(flight);
}

void Orchestrator::run_sync_cycle() {
    CompactionEvent event;
    event.mode = Mode::sync;
    event.ordinal = compaction_ordinal_++;
    event.trigger_time = backend_->now();
    event.compactor_start = event.trigger_time;

    const ContextSnapshot snap = snapshot(ctx_, next_snapshot_id());
    event.snapshot_id = snap.id();

    // Blocking: the agent cannot step until the compactor returns.
    CompactOutcome outcome = compact(snap, *backend_, ctx_.counter());
    event.compactor_end = backend_->now();

    if (!outcome.ok()) {
        event.outcome = Outcome::discarded;
        event.error = outcome.error;
        defer_trigger_ = true;  // retry at the next trigger, after progress
        finish_event(std::move(event));
        return;
    }

    CompactionCandidate candidate = std::move(*outcome.candidate);
    if (injector_) candidate = injector_->apply(event.ordinal, candidate);
    event.summary = candidate.summary;
    event.summary_tokens = ctx_.counter().count(candidate.summary);

    if (!adopt_summary_only(candidate, event, Outcome::adopted)) {
        defer_trigger_ = true;
    }
    finish_event(std::move(event));
}

bool Orchestrator::adopt_summary_only(const CompactionCandidate& candidate, CompactionEvent& event,
                                      Outcome outcome) {
    TrajectoryContext next(ctx_.system_preamble(), ctx_.counter_ptr());
    next.append(next.make_step(Role::summary, candidate.summary, candidate.compaction_latency));
    if (next.active_tokens() >= ctx_.active_tokens()) {
        event.outcome = Outcome::discarded;
        event.error = "adoption would not reduce the active context (" +
                      std::to_string(next.active_tokens()) + " vs " +
                      std::to_string(ctx_.active_tokens()) + " tokens)";
        return false;
    }
    ctx_ = std::move(next);
    event.adopt_time = backend_->now();
    event.outcome = outcome;
    if (hooks_.on_adopt) hooks_.on_adopt(ctx_, event);
    return true;
}

void Orchestrator::adopt(const CompactionCandidate& candidate, const SpeculativeWindow& window,
                         CompactionEvent& event, Outcome outcome) {
    TrajectoryContext next(ctx_.system_preamble(), ctx_.counter_ptr());
    next.append(next.make_step(Role::summary, candidate.summary, candidate.compaction_latency));
    // Window steps are appended verbatim: content, role, token count, and
    // wall time preserved; only the ordinal is rebased.
    for (const Step& step : window.steps) {
        Step copy = step;
        copy.index = static_cast<int>(next.steps().size());
        next.append(std::move(copy));
    }
    ctx_ = std::move(next);
    event.adopt_time = backend_->now();
    event.outcome = outcome;
    if (hooks_.on_adopt) hooks_.on_adopt(ctx_, event);
}

void Orchestrator::resolve_compaction() {
    InFlight flight = std::move(*inflight_);
    inflight_.reset();
    CompactionEvent& event = flight.event;
    event.k = static_cast<int>(flight.window_steps.size());

    GenerationResponse response;
    try {
        response = backend_->wait(flight.ticket);
        event.compactor_end = event.compactor_start + response.latency_s;
    } catch (const BackendError& e) {
        event.compactor_end = backend_->now();
        event.outcome = Outcome::discarded;
        event.error = e.what();
        defer_trigger_ = true;
        finish_event(std::move(event));
        return;
    }

    CompactOutcome outcome =
        finish_compaction(flight.snap, std::move(response), *event.compactor_end, ctx_.counter());
    if (!outcome.ok()) {
        event.outcome = Outcome::discarded;
        event.error = outcome.error;
        defer_trigger_ = true;
        finish_event(std::move(event));
        return;
    }

    CompactionCandidate candidate = std::move(*outcome.candidate);
    if (injector_) candidate = injector_->apply(event.ordinal, candidate);
    event.summary = candidate.summary;
    event.summary_tokens = ctx_.counter().count(candidate.summary);

    const SpeculativeWindow window = make_window(flight.window_steps, flight.snap.id());

    if (config_.mode == Mode::async_nojudge) {
        // The ablation adopts every candidate without validation.
        adopt(candidate, window, event, Outcome::adopted);
        finish_event(std::move(event));
        return;
    }

    if (window.k == 0) {
        // The compactor beat the first step; there is no evidence to judge.
        adopt(candidate, window, event, Outcome::adopted);
        finish_event(std::move(event));
        return;
    }

    if (!judge_) throw InvariantError("slipstream mode requires a judge");
    event.judge_start = backend_->now();
    const JudgeOutcome judged = judge_->evaluate(candidate, window);
    event.judge_end = backend_->now();

    Decision decision;
    if (judged.parse_failed) {
        // Reject-on-uncertainty after the judge's internal retry.
        decision.accepted = false;
        decision.diagnosis = "judge verdict unparseable: " + judged.parse_error;
    } else {
        event.verdict = judged.verdict;
        decision = decide(*judged.verdict, config_.accept_threshold);
    }
    event.decision = decision.accepted ? "accept" : "reject";

    if (decision.accepted) {
        adopt(candidate, window, event, Outcome::adopted);
        finish_event(std::move(event));
        return;
    }

    // Targeted update: repair using the diagnosis and window evidence.
    bool updated = false;
    CompactionCandidate current = candidate;
    if (!decision.diagnosis.empty()) {
        for (int attempt = 0; attempt < config_.max_update_attempts && !updated; ++attempt) {
            if (!event.update_start) event.update_start = backend_->now();
            UpdateOutcome update = targeted_update(current, decision.diagnosis, window, *backend_,
                                                   ctx_.counter(), flight.snap.active_tokens());
            event.update_end = backend_->now();
            if (update.ok()) {
                current = std::move(*update.candidate);
                updated = true;
            } else {
                event.error = update.error;
            }
        }
    } else {
        event.error = "reject carried no diagnosis; targeted update skipped";
    }

    if (updated) {
        event.summary = current.summary;
        event.summary_tokens = ctx_.counter().count(current.summary);
        adopt(current, window, event, Outcome::adopted_after_update);
        finish_event(std::move(event));
        return;
    }

    // Last resort: synchronous compaction from the current live context
    // (which already contains the window steps).
    event.fallback_start = backend_->now();
    const ContextSnapshot live = snapshot(ctx_, next_snapshot_id());
    CompactOutcome fallback = compact(live, *backend_, ctx_.counter());
    event.fallback_end = backend_->now();

    if (fallback.ok()) {
        event.summary = fallback.candidate->summary;
        event.summary_tokens = ctx_.counter().count(fallback.candidate->summary);
        if (!adopt_summary_only(*fallback.candidate, event, Outcome::sync_fallback)) {
            defer_trigger_ = true;
        }
    } else {
        event.outcome = Outcome::discarded;
        event.error = fallback.error;
        defer_trigger_ = true;
    }
    finish_event(std::move(event));
}

void Orchestrator::run_turn() {
    const GenerationRequest request = build_agent_request(ctx_);
    const double started = backend_->now();
    const GenerationResponse response = backend_->generate(request);
    const double finished = backend_->now();

    std::vector<Step> turn_steps;
    Step reasoning = ctx_.make_step(Role::agent_reasoning, response.content, response.latency_s);
    trace_step(reasoning, started, finished);
    turn_steps.push_back(reasoning);
    ctx_.append(std::move(reasoning));

    for (const std::string& call : response.tool_calls) {
        Step call_step = ctx_.make_step(Role::tool_call, call, 0.0);
        trace_step(call_step, backend_->now(), backend_->now());
        turn_steps.push_back(call_step);
        ctx_.append(std::move(call_step));

        if (tools_) {
            const double before = backend_->now();
            auto [observation, latency] = tools_->run_tool(call);
            Step obs_step = ctx_.make_step(Role::tool_observation, std::move(observation), latency);
            trace_step(obs_step, before, backend_->now());
            turn_steps.push_back(obs_step);
            ctx_.append(std::move(obs_step));
        }
    }

    ++turns_;
    defer_trigger_ = false;
    if (inflight_) {
        // A turn joins the window atomically; tool pairs are never split.
        for (Step& step : turn_steps) inflight_->window_steps.push_back(std::move(step));
    }
}

}  // namespace slipstream
