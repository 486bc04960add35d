// Compaction request construction, candidate production, and the
// test-only corruption facility used for fault-injection runs.
#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "slipstream/backend.hpp"
#include "slipstream/context.hpp"

namespace slipstream {

struct CompactionCandidate {
    std::string summary;
    std::string source_snapshot_id;
    double produced_at = 0.0;
    double compaction_latency = 0.0;
};

// Instruction appended after the serialized trajectory. It requires the
// model to mark unresolved work with [PENDING]/[OPEN]; the judge rubric
// keys on those markers.
const std::string& compaction_instruction();

// Messages: system preamble, each snapshot step in order, then the fixed
// compaction instruction. Throws std::invalid_argument on an empty snapshot.
GenerationRequest build_compaction_request(const ContextSnapshot& snap);

// Maps a trajectory role onto the chat wire role (summary travels as user).
std::string wire_role(Role role);

struct CompactOutcome {
    std::optional<CompactionCandidate> candidate;
    std::string error;  // nonempty iff !candidate

    bool ok() const noexcept { return candidate.has_value(); }
};

// Validates raw compactor output (compression invariant) and assembles the
// candidate. Shared by the blocking path and the overlapped path, which
// collects its response at a later step boundary.
CompactOutcome finish_compaction(const ContextSnapshot& snap, GenerationResponse response,
                                 double produced_at, const TokenCounter& counter);

// Runs one compaction against the snapshot. Backend failures and
// compression violations yield a failed outcome, never a throw; the
// orchestrator decides the fallback.
CompactOutcome compact(const ContextSnapshot& snap, Backend& backend, const TokenCounter& counter);

// --- fault injection (test facility, enabled by explicit configuration) ---

enum class CorruptionMode { omission, commission, entity_replacement };

std::string_view to_string(CorruptionMode mode);
CorruptionMode corruption_mode_from_string(std::string_view name);

struct CorruptionSpec {
    CorruptionMode mode = CorruptionMode::omission;
    std::string target;       // span to delete (omission) or replace
    std::string replacement;  // required for commission / entity_replacement
    std::optional<int> at;    // 0-based compaction ordinal; defaults to file position
};

// Applies one corruption. Only the targeted span changes; everything else
// is byte-identical. Throws InjectionError when the target is absent and
// std::invalid_argument when the spec itself is malformed.
CompactionCandidate corrupt(const CompactionCandidate& candidate, const CorruptionSpec& spec);

// Schedule of corruptions keyed by compaction ordinal. Records what it
// applied so an oracle judge can check the exact injected faults.
class FaultInjector {
public:
    FaultInjector() = default;
    explicit FaultInjector(std::vector<CorruptionSpec> specs);

    static FaultInjector from_file(const std::filesystem::path& path);

    // Corrupts the candidate when the schedule names this ordinal.
    CompactionCandidate apply(int ordinal, CompactionCandidate candidate);

    const std::vector<CorruptionSpec>* applied_for(const std::string& snapshot_id) const;
    bool empty() const noexcept { return by_ordinal_.empty(); }
    std::size_t scheduled_count() const noexcept;

private:
    std::map<int, std::vector<CorruptionSpec>> by_ordinal_;
    std::map<std::string, std::vector<CorruptionSpec>> applied_;
};

}  // namespace slipstream
