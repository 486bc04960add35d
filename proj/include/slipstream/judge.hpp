// Trajectory-grounded validation: the candidate summary is scored against
// the steps the agent took on the uncompacted context while compaction
// ran. Two rubric components (plan alignment, information preservation)
// aggregate by half-up rounding of their mean.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "slipstream/backend.hpp"
#include "slipstream/compactor.hpp"
#include "slipstream/context.hpp"

namespace slipstream {

struct SpeculativeWindow {
    std::vector<Step> steps;  // the next-k trajectory, in execution order
    int k = 0;                // == steps.size()
    std::string source_snapshot_id;
};

SpeculativeWindow make_window(std::vector<Step> steps, std::string source_snapshot_id);

struct JudgeVerdict {
    int plan_alignment = 0;
    int information_preservation = 0;
    int score = 0;
    std::string reasoning;  // one sentence; doubles as the rejection diagnosis
    // Set when the emitted score violated the formula and was recomputed.
    bool formula_corrected = false;
};

// round_half_up(0.5 * plan + 0.5 * info) in exact integer arithmetic.
int aggregate_score(int plan_alignment, int information_preservation);

// The shipped judge prompt with {summary_handover} and {spec_actions}
// placeholders; byte-identical to assets/judge_prompt.txt.
const std::string& judge_prompt_template();

// Serializes window steps for the prompt. Reasoning and tool calls only by
// default; include_observations adds tool_observation steps.
std::string serialize_window(const SpeculativeWindow& window, bool include_observations = false);

// Single-message request carrying only the filled template: candidate and
// window, nothing from the rest of the pre-compaction context. Requires
// window.k >= 1 (with no evidence there is nothing to judge).
GenerationRequest build_judge_request(const CompactionCandidate& candidate,
                                      const SpeculativeWindow& window,
                                      bool include_observations = false);

// Strict parse of the verdict JSON. Out-of-range components or missing
// fields throw ParseError; a score that violates the formula is recomputed
// and flagged rather than rejected.
JudgeVerdict parse_verdict(const std::string& raw);

struct Decision {
    bool accepted = false;
    std::string diagnosis;  // verdict reasoning; meaningful on reject
};

// Accept iff score >= accept_threshold (default 7).
Decision decide(const JudgeVerdict& verdict, int accept_threshold = 7);

struct JudgeOutcome {
    std::optional<JudgeVerdict> verdict;  // absent when parsing failed twice
    bool parse_failed = false;
    std::string parse_error;
};

class JudgeClient {
public:
    virtual ~JudgeClient() = default;
    virtual JudgeOutcome evaluate(const CompactionCandidate& candidate,
                                  const SpeculativeWindow& window) = 0;
};

// Backend-driven judge; one retry on an unparseable verdict, after which
// the orchestrator treats the result as a rejection.
class LlmJudge final : public JudgeClient {
public:
    explicit LlmJudge(Backend& backend, bool include_observations = false);
    JudgeOutcome evaluate(const CompactionCandidate& candidate,
                          const SpeculativeWindow& window) override;

private:
    Backend* backend_;
    bool include_observations_;
};

// Deterministic judge for fault-injection runs: checks the exact spans the
// injector recorded. A clean candidate scores 10/10; a corrupted one fails
// the component matching its corruption class.
class OracleJudge final : public JudgeClient {
public:
    explicit OracleJudge(const FaultInjector& injector);
    JudgeOutcome evaluate(const CompactionCandidate& candidate,
                          const SpeculativeWindow& window) override;

private:
    const FaultInjector* injector_;
};

}  // namespace slipstream
