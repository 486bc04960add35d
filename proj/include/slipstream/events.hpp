// Lifecycle records shared by the orchestrator (producer) and the metrics
// reporter (consumer).
#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "slipstream/judge.hpp"

namespace slipstream {

enum class Mode { sync, async_nojudge, slipstream };

std::string_view to_string(Mode mode);
Mode mode_from_string(std::string_view name);

enum class Outcome { adopted, adopted_after_update, sync_fallback, discarded };

std::string_view to_string(Outcome outcome);
Outcome outcome_from_string(std::string_view name);

// Full lifecycle record of one compaction. Absent phases stay unset; set
// timestamps are nondecreasing in lifecycle order.
struct CompactionEvent {
    std::string snapshot_id;
    Mode mode = Mode::slipstream;
    int ordinal = 0;  // 0-based compaction index within the run

    double trigger_time = 0.0;
    double compactor_start = 0.0;
    std::optional<double> compactor_end;
    std::optional<double> judge_start;
    std::optional<double> judge_end;
    std::optional<double> update_start;
    std::optional<double> update_end;
    std::optional<double> fallback_start;
    std::optional<double> fallback_end;
    std::optional<double> adopt_time;

    std::optional<int> k;  // window size; present iff mode != sync
    std::optional<JudgeVerdict> verdict;
    std::string decision;  // "accept", "reject", or "" when no judge ran
    Outcome outcome = Outcome::discarded;
    bool stalled = false;  // window hit k_max and stepping waited
    std::string error;     // failure detail for discarded/fallback paths

    std::string summary;  // adopted or candidate summary text
    int summary_tokens = 0;
};

}  // namespace slipstream
