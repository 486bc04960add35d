#include "slipstream/judge.hpp"

#include <sstream>

#include <json.hpp>

#include "slipstream/errors.hpp"

namespace slipstream {

using nlohmann::json;

SpeculativeWindow make_window(std::vector<Step> steps, std::string source_snapshot_id) {
    SpeculativeWindow window;
    window.k = static_cast<int>(steps.size());
    window.steps = std::move(steps);
    window.source_snapshot_id = std::move(source_snapshot_id);
    return window;
}

int aggregate_score(int plan_alignment, int information_preservation) {
    // round_half_up of the mean of two nonnegative integers.
    return (plan_alignment + information_preservation + 1) / 2;
}

const std::string& judge_prompt_template() {
    static const std::string text = R"PROMPT(You are evaluating whether a candidate compacted summary is consistent
with the agent's speculative steps -- the actions the agent took on
the original, uncompacted context while compaction ran asynchronously.

The agent's new context after adoption will be:
  [candidate compacted summary] + [speculative trajectory appended verbatim]

Judge consistency on TWO criteria using ONLY the candidate compacted
summary and the speculative trajectory provided below.

---
CANDIDATE COMPACTED STATE:
{summary_handover}

---
SPECULATIVE TRAJECTORY (reasoning + tool calls taken during async compaction):
{spec_actions}

---
CRITERIA:

1. PLAN ALIGNMENT
   The compacted state contains open/pending items (marked [PENDING],
   [OPEN], or described as unresolved/unconfirmed). Does the next-k
   trajectory pursue these open items with the same forward intent?
   - 10: Trajectory directly targets the most critical open item(s)
   - 7-9: Trajectory targets an open item, but not the most critical
   - 4-6: Trajectory is topically related but takes an indirect path
   - 1-3: Trajectory addresses something not listed as open/pending
   - 0:   Trajectory is unrelated to any compacted-state content,
          OR compacted state has no open items but trajectory
          continues searching instead of finishing

2. INFORMATION PRESERVATION
   The speculative trajectory's reasoning may reference prior context
   (entities, partial findings, verified facts, tool observations).
   Are those concrete facts preserved in the candidate compacted state?
   - 10: Every entity/fact the trajectory relies on appears in the
         compacted state
   - 7-9: Most referenced information is present; minor details
          missing but reconstructable from context
   - 4-6: Some key information the trajectory depends on is missing,
          which could cause confusion after adoption
   - 1-3: Trajectory relies heavily on information not in the
          compacted state
   - 0:   Trajectory references a completely different task state
          than what the compacted state describes

Respond with JSON only (no markdown, no extra text):
{"plan_alignment": <int 0-10>,
 "information_preservation": <int 0-10>,
 "score": <int 0-10>,
 "reasoning": "<one sentence on the key strength or weakness>"}

The overall score must equal:
  round(0.5 * plan_alignment + 0.5 * information_preservation)
)PROMPT";
    return text;
}

std::string serialize_window(const SpeculativeWindow& window, bool include_observations) {
    std::ostringstream out;
    bool first = true;
    for (const Step& step : window.steps) {
        if (step.role == Role::tool_observation && !include_observations) continue;
        if (step.role == Role::user || step.role == Role::summary) continue;
        if (!first) out << '\n';
        first = false;
        out << "[step " << step.index << " " << to_string(step.role) << "] " << step.content;
    }
    return out.str();
}

namespace {

void replace_once(std::string& text, std::string_view placeholder, std::string_view value) {
    const std::size_t pos = text.find(placeholder);
    if (pos == std::string::npos) {
        throw InvariantError("judge prompt template missing placeholder " + std::string(placeholder));
    }
    text.replace(pos, placeholder.size(), value);
}

int require_component(const json& obj, const char* key) {
    if (!obj.contains(key)) throw ParseError(std::string("verdict missing field: ") + key);
    const json& value = obj.at(key);
    if (!value.is_number_integer()) {
        throw ParseError(std::string("verdict field is not an integer: ") + key);
    }
    const int v = value.get<int>();
    if (v < 0 || v > 10) {
        throw ParseError(std::string("verdict field out of range [0,10]: ") + key + "=" +
                         std::to_string(v));
    }
    return v;
}

}  // namespace

GenerationRequest build_judge_request(const CompactionCandidate& candidate,
                                      const SpeculativeWindow& window,
                                      bool include_observations) {
    if (window.k < 1) {
        throw std::invalid_argument("judge needs a window with at least one step");
    }
    std::string prompt = judge_prompt_template();
    replace_once(prompt, "{summary_handover}", candidate.summary);
    replace_once(prompt, "{spec_actions}", serialize_window(window, include_observations));

    GenerationRequest request;
    request.purpose = Purpose::judge;
    request.max_output_tokens = default_max_output_tokens(Purpose::judge);
    request.messages.push_back({"user", std::move(prompt)});
    return request;
}

JudgeVerdict parse_verdict(const std::string& raw) {
    json obj;
    try {
        obj = json::parse(raw);
    } catch (const json::exception& e) {
        throw ParseError(std::string("verdict is not valid JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ParseError("verdict must be a JSON object");

    JudgeVerdict verdict;
    verdict.plan_alignment = require_component(obj, "plan_alignment");
    verdict.information_preservation = require_component(obj, "information_preservation");
    verdict.score = require_component(obj, "score");
    if (!obj.contains("reasoning") || !obj.at("reasoning").is_string()) {
        throw ParseError("verdict missing string field: reasoning");
    }
    verdict.reasoning = obj.at("reasoning").get<std::string>();

    // The components are the judge's findings; the aggregate is mechanical,
    // so a formula violation is repaired rather than rejected.
    const int expected = aggregate_score(verdict.plan_alignment, verdict.information_preservation);
    if (verdict.score != expected) {
        verdict.score = expected;
        verdict.formula_corrected = true;
    }
    return verdict;
}

Decision decide(const JudgeVerdict& verdict, int accept_threshold) {
    Decision decision;
    decision.accepted = verdict.score >= accept_threshold;
    decision.diagnosis = verdict.reasoning;
    return decision;
}

LlmJudge::LlmJudge(Backend& backend, bool include_observations)
    : backend_(&backend), include_observations_(include_observations) {}

JudgeOutcome LlmJudge::evaluate(const CompactionCandidate& candidate,
                                const SpeculativeWindow& window) {
    const GenerationRequest request = build_judge_request(candidate, window, include_observations_);
    JudgeOutcome outcome;
    // One retry on an unparseable or failed verdict, then reject-on-uncertainty.
    for (int attempt = 0; attempt < 2; ++attempt) {
        try {
            GenerationResponse response = backend_->generate(request);
            outcome.verdict = parse_verdict(response.content);
            outcome.parse_failed = false;
            return outcome;
        } catch (const ParseError& e) {
            outcome.parse_failed = true;
            outcome.parse_error = e.what();
        } catch (const BackendError& e) {
            outcome.parse_failed = true;
            outcome.parse_error = e.what();
        }
    }
    return outcome;
}

OracleJudge::OracleJudge(const FaultInjector& injector) : injector_(&injector) {}

JudgeOutcome OracleJudge::evaluate(const CompactionCandidate& candidate,
                                   const SpeculativeWindow& window) {
    (void)window;
    JudgeVerdict verdict;
    verdict.plan_alignment = 10;
    verdict.information_preservation = 10;
    verdict.reasoning = "summary preserves the facts and intent the continuation relies on";

    std::string diagnosis;
    if (const auto* specs = injector_->applied_for(candidate.source_snapshot_id)) {
        for (const CorruptionSpec& spec : *specs) {
            switch (spec.mode) {
                case CorruptionMode::omission:
                    if (candidate.summary.find(spec.target) == std::string::npos) {
                        verdict.information_preservation = 0;
                        diagnosis = "summary omits a span the continuation relies on: \"" +
                                    spec.target + "\"";
                    }
                    break;
                case CorruptionMode::commission:
                    if (candidate.summary.find(spec.replacement) != std::string::npos) {
                        verdict.plan_alignment = 0;
                        diagnosis = "summary mutates an instruction to \"" + spec.replacement +
                                    "\"; the trajectory follows \"" + spec.target + "\"";
                    }
                    break;
                case CorruptionMode::entity_replacement:
                    if (candidate.summary.find(spec.replacement) != std::string::npos) {
                        verdict.information_preservation = 0;
                        diagnosis = "summary replaces entity \"" + spec.target + "\" with \"" +
                                    spec.replacement + "\"";
                    }
                    break;
            }
        }
    }
    if (!diagnosis.empty()) verdict.reasoning = diagnosis;
    verdict.score = aggregate_score(verdict.plan_alignment, verdict.information_preservation);

    JudgeOutcome outcome;
    outcome.verdict = verdict;
    return outcome;
}

}  // namespace slipstream
