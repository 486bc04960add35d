// Post-hoc aggregation of run traces: latency breakdowns, normalized
// mode comparisons, acceptance/rejection rates, and deviation-locality
// histograms. Pure functions over parsed trace files.
#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "slipstream/trace.hpp"

namespace slipstream {

struct LatencyBreakdown {
    double agent_reasoning = 0.0;
    double action_execution = 0.0;
    double blocking_compaction = 0.0;    // compaction time the agent waited out
    double overlapped_compaction = 0.0;  // compaction time hidden under stepping
    double judge_update = 0.0;
    double total = 0.0;  // end-to-end; overlapped time is reported but not added
};

// Deterministic aggregation of one trace. Sync traces have
// overlapped_compaction == 0; pure accept-path overlapped traces have
// blocking_compaction == 0.
LatencyBreakdown breakdown(const ParsedTrace& trace);

// (#reject decisions) / (#judged compactions) across all traces.
// Throws Error when no compaction was judged.
double rejection_rate(const std::vector<ParsedTrace>& traces);

// First-deviation offsets relative to the compaction step, supplied
// externally (scripted oracle in tests, human/LLM labels in real runs).
struct DeviationLabel {
    std::string query;
    int offset = 0;  // first_deviation_step - compaction_step
};

std::vector<DeviationLabel> load_labels(const std::filesystem::path& path);

struct LocalityHistogram {
    std::map<int, int> counts;  // offset -> occurrences
    int total = 0;

    // Cumulative fraction of deviations at offset <= k, for each seen k.
    std::map<int, double> cdf() const;
    double cdf_at(int k) const;
};

LocalityHistogram deviation_locality(const std::vector<DeviationLabel>& labels);

// --- report assembly -------------------------------------------------------

struct TraceSummary {
    std::string file;
    TraceHeader header;
    LatencyBreakdown latency;
    double compaction_share = 0.0;  // blocking / total (0 when total is 0)
};

struct Report {
    std::vector<TraceSummary> traces;
    LatencyBreakdown pooled;          // component sums across traces
    LatencyBreakdown per_trace_mean;  // component means across traces
    // mode -> mean of total(mode) / total(sync) over (query, threshold)
    // groups that include a sync trace.
    std::map<std::string, double> normalized_vs_sync;
    std::optional<double> rejection_rate;  // absent when nothing was judged
    std::optional<LocalityHistogram> locality;
};

Report build_report(const std::vector<std::pair<std::string, ParsedTrace>>& traces,
                    const std::optional<std::vector<DeviationLabel>>& labels = std::nullopt);

std::string report_to_json(const Report& report);
std::string report_to_table(const Report& report);

}  // namespace slipstream
