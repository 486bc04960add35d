// Trajectory data model: ordered steps over a fixed system preamble, with
// incremental token accounting, immutable snapshots, and the compaction
// trigger predicate.
#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "slipstream/tokens.hpp"

namespace slipstream {

enum class Role {
    agent_reasoning,
    tool_call,
    tool_observation,
    user,
    summary,
};

std::string_view to_string(Role role);
Role role_from_string(std::string_view name);

struct Step {
    int index = 0;
    Role role = Role::agent_reasoning;
    std::string content;
    int token_count = 0;     // always counter.count(content)
    double wall_time = 0.0;  // seconds spent producing this step
};

// The agent's working state. Single-writer: only the stepping task mutates it.
class TrajectoryContext {
public:
    TrajectoryContext() : TrajectoryContext("") {}
    explicit TrajectoryContext(std::string system_preamble,
                               std::shared_ptr<const TokenCounter> counter = default_token_counter());

    const std::string& system_preamble() const noexcept { return system_preamble_; }
    const std::vector<Step>& steps() const noexcept { return steps_; }
    int active_tokens() const noexcept { return active_tokens_; }
    int preamble_tokens() const noexcept { return preamble_tokens_; }
    const TokenCounter& counter() const noexcept { return *counter_; }
    std::shared_ptr<const TokenCounter> counter_ptr() const noexcept { return counter_; }

    // Builds the next step in sequence; token_count comes from the counter.
    Step make_step(Role role, std::string content, double wall_time = 0.0) const;

    // Rejects out-of-order appends with a SequenceError.
    void append(Step step);

private:
    std::string system_preamble_;
    int preamble_tokens_;
    std::vector<Step> steps_;
    int active_tokens_;
    std::shared_ptr<const TokenCounter> counter_;
};

// True iff the active context has reached the threshold. threshold must be > 0.
bool should_compact(const TrajectoryContext& ctx, int threshold_tokens);

// Frozen copy of a context. Immutable and safe to share across tasks.
class ContextSnapshot {
public:
    ContextSnapshot() = default;
    ContextSnapshot(std::string snapshot_id, const TrajectoryContext& ctx);

    const std::string& id() const noexcept { return id_; }
    const std::string& system_preamble() const noexcept { return system_preamble_; }
    const std::vector<Step>& steps() const noexcept { return steps_; }
    int active_tokens() const noexcept { return active_tokens_; }

    // JSONL: header {snapshot_id, system_preamble, active_tokens}, then one
    // object per step {index, role, content, token_count, wall_time}.
    std::string to_jsonl() const;
    static ContextSnapshot from_jsonl(std::string_view text);

private:
    std::string id_;
    std::string system_preamble_;
    std::vector<Step> steps_;
    int active_tokens_ = 0;
};

// Snapshot with a process-unique id ("s1", "s2", ...).
ContextSnapshot snapshot(const TrajectoryContext& ctx);

// Snapshot with a caller-chosen id (orchestrators label ids per run so
// parallel experiment grids stay deterministic).
ContextSnapshot snapshot(const TrajectoryContext& ctx, std::string snapshot_id);

}  // namespace slipstream
