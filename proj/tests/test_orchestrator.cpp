#include <doctest.h>

#include "helpers.hpp"
#include "slipstream/errors.hpp"
#include "slipstream/metrics.hpp"
#include "slipstream/orchestrator.hpp"
#include "slipstream/scripted_backend.hpp"

using namespace slipstream;
using nlohmann::json;

namespace {

// Standard workload: `steps` agent turns of `step_tokens` at `latency` each.
// With threshold 400 and 100-token steps the first trigger lands at the
// boundary after turn 4 (t = 4 * latency).
json base_script(int steps, int step_tokens = 100, double latency = 1.0) {
    json script;
    script["agent_step"] = test_helpers::agent_entries(steps, step_tokens, latency);
    return script;
}

void add_compactions(json& script, int count, double latency, int summary_tokens = 50) {
    if (!script.contains("compaction")) script["compaction"] = json::array();
    for (int i = 0; i < count; ++i) {
        script["compaction"].push_back(test_helpers::script_entry(
            test_helpers::tagged_filler(summary_tokens, "summary" + std::to_string(i)), latency));
    }
}

void add_accepting_judges(json& script, int count, double latency = 0.0) {
    if (!script.contains("judge")) script["judge"] = json::array();
    for (int i = 0; i < count; ++i) {
        script["judge"].push_back(
            test_helpers::script_entry(test_helpers::accept_verdict(), latency));
    }
}

struct RunOutput {
    RunResult result;
    std::string trace;
};

RunOutput run_script(const json& script, RunConfig config, FaultInjector* injector = nullptr,
                     bool oracle_judge = false, RunHooks hooks = {}) {
    auto backend = ScriptedBackend::from_json(script);
    LlmJudge llm_judge(*backend);
    FaultInjector empty;
    OracleJudge oracle(injector ? *injector : empty);

    TraceWriter trace;
    Orchestrator orchestrator(*backend, config);
    orchestrator.set_judge(oracle_judge ? static_cast<JudgeClient*>(&oracle)
                                        : static_cast<JudgeClient*>(&llm_judge));
    orchestrator.set_tool_runner(backend.get());
    orchestrator.set_fault_injector(injector);
    orchestrator.set_trace_writer(&trace);
    orchestrator.set_hooks(std::move(hooks));

    TrajectoryContext initial(script.value("system_preamble", std::string{}));
    if (script.contains("task")) {
        initial.append(initial.make_step(Role::user, script.at("task").get<std::string>()));
    }
    RunOutput output;
    output.result = orchestrator.run(std::move(initial));
    output.trace = trace.str();
    return output;
}

RunConfig config_for(Mode mode, int threshold) {
    RunConfig config;
    config.mode = mode;
    config.threshold = threshold;
    config.query = "test";
    return config;
}

constexpr int kNoCompaction = 1000 * 1000 * 100;

}  // namespace

TEST_CASE("sync compaction blocks the agent for the full compactor latency") {
    json script = base_script(6);
    add_compactions(script, 1, 10.0);

    const RunOutput baseline = run_script(base_script(6), config_for(Mode::sync, kNoCompaction));
    CHECK(baseline.result.total_time == 6.0);

    const RunOutput sync = run_script(script, config_for(Mode::sync, 400));
    REQUIRE(sync.result.events.size() == 1);
    const CompactionEvent& event = sync.result.events[0];
    CHECK(event.outcome == Outcome::adopted);
    CHECK(event.compactor_start == 4.0);
    CHECK(*event.compactor_end == 14.0);
    CHECK_FALSE(event.k.has_value());
    // Critical path grows by exactly the compaction latency.
    CHECK(sync.result.total_time == baseline.result.total_time + 10.0);

    // The adopted context is the preamble plus one summary step.
    const auto& steps = sync.result.final_context.steps();
    REQUIRE(!steps.empty());
    CHECK(steps[0].role == Role::summary);
}

TEST_CASE("sync compaction failure leaves the context unchanged and retries at the next trigger") {
    json script = base_script(6);
    script["compaction"] = json::array();
    script["compaction"].push_back(json{{"content", ""}, {"latency_s", 2.0}, {"fail", "timeout"}});
    add_compactions(script, 1, 3.0);

    const RunOutput out = run_script(script, config_for(Mode::sync, 400));
    REQUIRE(out.result.events.size() == 2);
    CHECK(out.result.events[0].outcome == Outcome::discarded);
    CHECK_FALSE(out.result.events[0].error.empty());
    CHECK(out.result.events[1].outcome == Outcome::adopted);
    // Failed attempt at t=4 (+2s), one more turn, then the retry fires at t=7.
    CHECK(out.result.events[1].trigger_time == 7.0);
}

TEST_CASE("overlapped compaction hides fully behind stepping on the accept path") {
    // Event-timeline oracle: trigger at t=4; turns finish at 5,6,7; the
    // compactor lands at 7; the window is exactly those 3 turns; judge and
    // adoption add nothing at zero scripted judge latency.
    json script = base_script(12);
    add_compactions(script, 2, 3.0);
    add_accepting_judges(script, 2);

    std::vector<std::pair<int, std::string>> adoptions;  // (k, first step content)
    RunHooks hooks;
    hooks.on_adopt = [&](const TrajectoryContext& ctx, const CompactionEvent& event) {
        adoptions.emplace_back(*event.k, ctx.steps()[0].content);
    };

    const RunOutput out = run_script(script, config_for(Mode::slipstream, 400), nullptr, false,
                                     std::move(hooks));
    const RunOutput baseline =
        run_script(base_script(12), config_for(Mode::slipstream, kNoCompaction));

    CHECK(baseline.result.total_time == 12.0);
    CHECK(out.result.total_time == 12.0);  // zero added critical-path time

    REQUIRE(out.result.events.size() == 2);
    const CompactionEvent& first = out.result.events[0];
    CHECK(first.outcome == Outcome::adopted);
    CHECK(first.decision == "accept");
    CHECK(*first.k == 3);
    CHECK(first.compactor_start == 4.0);
    CHECK(*first.compactor_end == 7.0);
    CHECK(*first.judge_start == 7.0);
    CHECK(*first.judge_end == 7.0);
    CHECK(*first.adopt_time == 7.0);
    CHECK_FALSE(first.stalled);

    REQUIRE(adoptions.size() == 2);
    CHECK(adoptions[0].first == 3);
}

TEST_CASE("adoption preserves the window verbatim after the summary step") {
    json script = base_script(12);
    add_compactions(script, 2, 3.0);
    add_accepting_judges(script, 2);

    std::vector<TrajectoryContext> contexts;
    std::vector<CompactionEvent> adoption_events;
    RunHooks hooks;
    hooks.on_adopt = [&](const TrajectoryContext& ctx, const CompactionEvent& event) {
        contexts.push_back(ctx);
        adoption_events.push_back(event);
    };
    run_script(script, config_for(Mode::slipstream, 400), nullptr, false, std::move(hooks));

    REQUIRE(contexts.size() == 2);
    const TrajectoryContext& adopted = contexts[0];
    REQUIRE(adopted.steps().size() == 4);  // summary + 3 window turns
    CHECK(adopted.steps()[0].role == Role::summary);
    CHECK(adopted.steps()[0].content == adoption_events[0].summary);
    // Window turns 5..7 carry the scripted contents of entries 4..6, verbatim.
    for (int i = 1; i <= 3; ++i) {
        const Step& step = adopted.steps()[static_cast<std::size_t>(i)];
        CHECK(step.index == i);
        CHECK(step.role == Role::agent_reasoning);
        CHECK(step.content == test_helpers::tagged_filler(100, "step" + std::to_string(3 + i)));
        CHECK(step.token_count == 100);
        CHECK(step.wall_time == 1.0);
    }
}

TEST_CASE("a zero-latency compactor adopts directly with an empty window") {
    json script = base_script(6);
    add_compactions(script, 1, 0.0);

    const RunOutput out = run_script(script, config_for(Mode::slipstream, 400));
    REQUIRE(out.result.events.size() == 1);
    const CompactionEvent& event = out.result.events[0];
    CHECK(event.outcome == Outcome::adopted);
    CHECK(*event.k == 0);
    CHECK(event.decision.empty());        // no judge ran
    CHECK_FALSE(event.verdict.has_value());
    CHECK_FALSE(event.judge_start.has_value());
    CHECK(*event.adopt_time == 4.0);
}

TEST_CASE("a compactor overlapping 2.1 step-times resolves at the third boundary") {
    json script = base_script(10);
    add_compactions(script, 2, 2.1);
    add_accepting_judges(script, 2);

    const RunOutput out = run_script(script, config_for(Mode::slipstream, 400));
    REQUIRE(!out.result.events.empty());
    // Completion at t=6.1 is observed at the t=7 boundary; turns 5, 6, and 7
    // were all generated on the uncompacted context, so k = 3.
    CHECK(*out.result.events[0].k == 3);
    CHECK(*out.result.events[0].compactor_end == doctest::Approx(6.1));
    CHECK(*out.result.events[0].judge_start == 7.0);
}

TEST_CASE("rejection pays exactly one targeted-update segment before adopting") {
    json script = base_script(12);
    add_compactions(script, 2, 3.0);
    script["judge"] = json::array();
    script["judge"].push_back(test_helpers::script_entry(
        test_helpers::verdict_json(10, 0, 5, "summary dropped the verified entity"), 0.0));
    script["judge"].push_back(test_helpers::script_entry(test_helpers::accept_verdict(), 0.0));
    script["targeted_update"] = json::array();
    script["targeted_update"].push_back(
        test_helpers::script_entry(test_helpers::tagged_filler(60, "repaired"), 2.0));

    const RunOutput out = run_script(script, config_for(Mode::slipstream, 400));
    REQUIRE(out.result.events.size() == 2);
    const CompactionEvent& event = out.result.events[0];
    CHECK(event.outcome == Outcome::adopted_after_update);
    CHECK(event.decision == "reject");
    CHECK(*event.update_start == 7.0);
    CHECK(*event.update_end == 9.0);
    CHECK(*event.adopt_time == 9.0);
    CHECK(event.summary == test_helpers::tagged_filler(60, "repaired"));
    // Baseline is 12s of stepping; the only extra critical-path time is the
    // 2s repair.
    CHECK(out.result.total_time == 14.0);
}

TEST_CASE("failed targeted update falls back to synchronous compaction from the live context") {
    json script = base_script(9);
    add_compactions(script, 1, 3.0);
    script["judge"] = json::array();
    script["judge"].push_back(test_helpers::script_entry(
        test_helpers::verdict_json(0, 10, 5, "plan was mutated"), 0.0));
    script["targeted_update"] = json::array();
    script["targeted_update"].push_back(
        json{{"content", ""}, {"latency_s", 1.0}, {"fail", "timeout"}});
    add_compactions(script, 1, 4.0);  // consumed by the fallback

    const RunOutput out = run_script(script, config_for(Mode::slipstream, 400));
    REQUIRE(!out.result.events.empty());
    const CompactionEvent& event = out.result.events[0];
    CHECK(event.outcome == Outcome::sync_fallback);
    CHECK(*event.update_start == 7.0);
    CHECK(*event.update_end == 8.0);
    CHECK(*event.fallback_start == 8.0);
    CHECK(*event.fallback_end == 12.0);
    CHECK(*event.adopt_time == 12.0);
    // Fallback re-compacts the live context, so only the summary remains.
    const auto& first_event_ctx_steps = out.result.final_context.steps();
    REQUIRE(!first_event_ctx_steps.empty());
    CHECK(first_event_ctx_steps[0].role == Role::summary);
}

TEST_CASE("a failed fallback discards the lifecycle and leaves the context intact") {
    json script = base_script(8);
    add_compactions(script, 1, 3.0);
    script["judge"] = json::array();
    script["judge"].push_back(
        test_helpers::script_entry(test_helpers::verdict_json(0, 0, 0, "broken"), 0.0));
    script["targeted_update"] = json::array();
    script["targeted_update"].push_back(
        json{{"content", ""}, {"latency_s", 1.0}, {"fail", "timeout"}});
    script["compaction"].push_back(json{{"content", ""}, {"latency_s", 1.0}, {"fail", "timeout"}});

    const RunOutput out = run_script(script, config_for(Mode::slipstream, 400));
    REQUIRE(!out.result.events.empty());
    CHECK(out.result.events[0].outcome == Outcome::discarded);
    CHECK_FALSE(out.result.events[0].error.empty());
    // No adoption ever happened: the live trajectory keeps every turn.
    CHECK(out.result.final_context.steps().size() == 8);
}

TEST_CASE("a compactor failure mid-flight discards the candidate off the critical path") {
    json script = base_script(8);
    script["compaction"] = json::array();
    script["compaction"].push_back(json{{"content", ""}, {"latency_s", 3.0}, {"fail", "timeout"}});

    const RunOutput out = run_script(script, config_for(Mode::slipstream, 400));
    REQUIRE(out.result.events.size() == 1);
    CHECK(out.result.events[0].outcome == Outcome::discarded);
    CHECK(*out.result.events[0].k == 3);
    CHECK(out.result.total_time == 8.0);  // the failure cost no agent time
    CHECK(out.result.final_context.steps().size() == 8);
}

TEST_CASE("task completion mid-flight discards the pending candidate") {
    json script = base_script(6);
    add_compactions(script, 1, 100.0);

    const RunOutput out = run_script(script, config_for(Mode::slipstream, 400));
    REQUIRE(out.result.events.size() == 1);
    const CompactionEvent& event = out.result.events[0];
    CHECK(event.outcome == Outcome::discarded);
    CHECK(event.error.find("task completed") != std::string::npos);
    CHECK_FALSE(event.compactor_end.has_value());  // never observed finishing
    CHECK(*event.k == 2);                          // turns 5 and 6 joined before the end
    CHECK(out.result.total_time == 6.0);
}

TEST_CASE("stepping pauses at k_max and waits out the compactor") {
    json script = base_script(10);
    add_compactions(script, 1, 5.0);
    add_accepting_judges(script, 1);

    RunConfig config = config_for(Mode::slipstream, 700);
    config.k_max = 2;
    const RunOutput out = run_script(script, config);
    REQUIRE(!out.result.events.empty());
    const CompactionEvent& event = out.result.events[0];
    CHECK(event.stalled);
    CHECK(*event.k == 2);
    // Trigger at 7, window full at 9, compactor lands at 12: 3s of stall.
    CHECK(*event.compactor_end == 12.0);
    CHECK(*event.adopt_time == 12.0);
    CHECK(out.result.total_time == 10.0 + 3.0);

    const LatencyBreakdown b = breakdown(parse_trace(out.trace));
    CHECK(b.blocking_compaction == 3.0);
    CHECK(b.overlapped_compaction == 2.0);
}

TEST_CASE("lifecycles never overlap and the trigger is not re-evaluated in flight") {
    json script = base_script(30, 200, 1.0);  // every other boundary re-triggers
    add_compactions(script, 16, 2.0, 20);
    add_accepting_judges(script, 16);

    RunHooks hooks;
    hooks.on_adopt = [](const TrajectoryContext& ctx, const CompactionEvent&) {
        // Only the latest adopted summary survives, always at the front.
        REQUIRE(!ctx.steps().empty());
        CHECK(ctx.steps()[0].role == Role::summary);
        for (std::size_t i = 1; i < ctx.steps().size(); ++i) {
            CHECK(ctx.steps()[i].role != Role::summary);
        }
    };
    const RunOutput out =
        run_script(script, config_for(Mode::slipstream, 400), nullptr, false, std::move(hooks));
    REQUIRE(out.result.events.size() >= 2);
    for (std::size_t i = 1; i < out.result.events.size(); ++i) {
        const CompactionEvent& prev = out.result.events[i - 1];
        const CompactionEvent& next = out.result.events[i];
        REQUIRE(prev.adopt_time.has_value());
        CHECK(next.trigger_time >= *prev.adopt_time);
    }
}

TEST_CASE("with an always-accepting judge, overlapped modes produce identical contexts") {
    json script = base_script(12);
    add_compactions(script, 2, 3.0);
    add_accepting_judges(script, 2);

    const RunOutput judged = run_script(script, config_for(Mode::slipstream, 400));
    const RunOutput unjudged = run_script(script, config_for(Mode::async_nojudge, 400));

    const auto& a = judged.result.final_context.steps();
    const auto& b = unjudged.result.final_context.steps();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].role == b[i].role);
        CHECK(a[i].content == b[i].content);
        CHECK(a[i].token_count == b[i].token_count);
    }
    CHECK(judged.result.final_context.system_preamble() ==
          unjudged.result.final_context.system_preamble());
}

TEST_CASE("skipping the judge saves exactly the judge latency on accept paths") {
    json script = base_script(12);
    add_compactions(script, 2, 3.0);
    add_accepting_judges(script, 2, 0.25);

    const RunOutput judged = run_script(script, config_for(Mode::slipstream, 400));
    const RunOutput unjudged = run_script(script, config_for(Mode::async_nojudge, 400));
    CHECK(unjudged.result.total_time == 12.0);
    CHECK(judged.result.total_time == unjudged.result.total_time + 2 * 0.25);
}

TEST_CASE("the no-judge ablation adopts corrupted candidates; the judged path repairs them") {
    json script = base_script(12);
    add_compactions(script, 2, 3.0);
    script["targeted_update"] = json::array();
    script["targeted_update"].push_back(
        test_helpers::script_entry("restored: summary0 marker intact " +
                                       test_helpers::filler(20),
                                   0.5));

    FaultInjector async_injector({{CorruptionMode::omission, "summary0", "", 0}});
    const RunOutput ablation = run_script(script, config_for(Mode::async_nojudge, 400),
                                          &async_injector);
    REQUIRE(!ablation.result.events.empty());
    CHECK(ablation.result.events[0].outcome == Outcome::adopted);
    // Corruption adopted verbatim: the dropped marker stays dropped.
    CHECK(ablation.result.events[0].summary.find("summary0") == std::string::npos);

    FaultInjector judged_injector({{CorruptionMode::omission, "summary0", "", 0}});
    const RunOutput judged = run_script(script, config_for(Mode::slipstream, 400),
                                        &judged_injector, /*oracle_judge=*/true);
    REQUIRE(!judged.result.events.empty());
    CHECK(judged.result.events[0].decision == "reject");
    CHECK(judged.result.events[0].outcome == Outcome::adopted_after_update);
}

TEST_CASE("tool calls append call/observation pairs that stay atomic in the window") {
    json script;
    script["agent_step"] = json::array();
    for (int i = 0; i < 6; ++i) {
        json entry = test_helpers::script_entry(test_helpers::tagged_filler(100, "s" +
                                                                            std::to_string(i)),
                                                1.0);
        if (i == 4) entry["tool_call"] = "search(\"target\")";
        script["agent_step"].push_back(entry);
    }
    script["tool"] = json::array({test_helpers::script_entry("observation payload", 0.5)});
    // Completes at t=5.2, inside turn 5 (which ends at 5.5 with its tool pair),
    // so the window is exactly that turn's three records.
    add_compactions(script, 1, 1.2);
    add_accepting_judges(script, 1);

    const RunOutput out = run_script(script, config_for(Mode::slipstream, 400));
    REQUIRE(!out.result.events.empty());
    const CompactionEvent& event = out.result.events[0];
    CHECK(event.outcome == Outcome::adopted);
    // Window: turn 5 (reasoning + tool_call + tool_observation) joined whole,
    // so k counts all three records.
    CHECK(*event.k == 3);

    const auto& steps = out.result.final_context.steps();
    REQUIRE(steps.size() >= 4);
    CHECK(steps[0].role == Role::summary);
    CHECK(steps[1].role == Role::agent_reasoning);
    CHECK(steps[2].role == Role::tool_call);
    CHECK(steps[2].content == "search(\"target\")");
    CHECK(steps[3].role == Role::tool_observation);
    CHECK(steps[3].content == "observation payload");
    CHECK(steps[3].wall_time == 0.5);

    const LatencyBreakdown b = breakdown(parse_trace(out.trace));
    CHECK(b.action_execution == 0.5);
}

TEST_CASE("targeted update demands a diagnosis and a compressing repair") {
    CompactionCandidate candidate;
    candidate.summary = "summary";
    SpeculativeWindow window = make_window({}, "s");
    ScriptedBackend backend;
    CharEstimator counter(4);

    CHECK_THROWS_AS(build_update_request(candidate, "", window), std::invalid_argument);

    backend.push(Purpose::targeted_update, {test_helpers::filler(500), 1.0, "", {}});
    const UpdateOutcome too_big =
        targeted_update(candidate, "missing fact", window, backend, counter, 100);
    CHECK_FALSE(too_big.ok());
    CHECK(too_big.error.find("compress") != std::string::npos);

    backend.push(Purpose::targeted_update, {"fixed summary", 1.0, "", {}});
    const UpdateOutcome repaired =
        targeted_update(candidate, "missing fact", window, backend, counter, 100);
    REQUIRE(repaired.ok());
    CHECK(repaired.candidate->summary == "fixed summary");
}

TEST_CASE("update requests carry the diagnosis, the candidate, and the window evidence") {
    CompactionCandidate candidate;
    candidate.summary = "candidate body";
    Step step;
    step.index = 3;
    step.role = Role::tool_observation;
    step.content = "observed evidence";
    const SpeculativeWindow window = make_window({step}, "s");

    const GenerationRequest request =
        build_update_request(candidate, "the entity went missing", window);
    REQUIRE(request.messages.size() == 1);
    CHECK(request.purpose == Purpose::targeted_update);
    const std::string& body = request.messages[0].content;
    CHECK(body.find("candidate body") != std::string::npos);
    CHECK(body.find("the entity went missing") != std::string::npos);
    CHECK(body.find("observed evidence") != std::string::npos);  // observations are evidence here
}

TEST_CASE("a 1s-step, 5s-compaction cadence spends a third of each cycle blocked") {
    // 30 steps of 100 tokens at threshold 1000: triggers land every 10 steps,
    // so each full cycle is 10s of stepping plus 5s of blocking compaction.
    json script = base_script(30);
    add_compactions(script, 2, 5.0);

    const RunOutput out = run_script(script, config_for(Mode::sync, 1000));
    REQUIRE(out.result.events.size() == 2);
    const CompactionEvent& first = out.result.events[0];
    const CompactionEvent& second = out.result.events[1];
    CHECK(first.trigger_time == 10.0);
    CHECK(second.trigger_time == 25.0);

    const double cycle_share = (*first.compactor_end - first.compactor_start) /
                               (second.trigger_time - first.trigger_time);
    CHECK(cycle_share == doctest::Approx(5.0 / 15.0));

    // Pooled over the whole run (the tail of steps after the last trigger
    // dilutes the share): exact oracle value 10s blocking out of 40s total.
    const LatencyBreakdown b = breakdown(parse_trace(out.trace));
    CHECK(b.blocking_compaction == 10.0);
    CHECK(b.total == 40.0);
    CHECK(b.blocking_compaction / b.total == 0.25);
}

TEST_CASE("orchestrator configuration is validated at construction") {
    ScriptedBackend backend;
    RunConfig bad = config_for(Mode::sync, 0);
    CHECK_THROWS_AS(Orchestrator(backend, bad), std::invalid_argument);
    bad = config_for(Mode::sync, 100);
    bad.accept_threshold = 11;
    CHECK_THROWS_AS(Orchestrator(backend, bad), std::invalid_argument);
    bad = config_for(Mode::sync, 100);
    bad.k_max = 0;
    CHECK_THROWS_AS(Orchestrator(backend, bad), std::invalid_argument);
}

TEST_CASE("max_steps caps live-style runs") {
    json script = base_script(50);
    RunConfig config = config_for(Mode::slipstream, kNoCompaction);
    config.max_steps = 5;
    const RunOutput out = run_script(script, config);
    CHECK(out.result.turns == 5);
    CHECK(out.result.total_time == 5.0);
}
