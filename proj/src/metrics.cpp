#include "slipstream/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "slipstream/errors.hpp"

namespace slipstream {

using nlohmann::json;

namespace {

struct Interval {
    double start = 0.0;
    double end = 0.0;
};

std::vector<Interval> merged_busy_intervals(const ParsedTrace& trace) {
    std::vector<Interval> intervals;
    intervals.reserve(trace.steps.size());
    for (const TraceStep& step : trace.steps) {
        if (step.end > step.start) intervals.push_back({step.start, step.end});
    }
    std::sort(intervals.begin(), intervals.end(),
              [](const Interval& a, const Interval& b) { return a.start < b.start; });
    std::vector<Interval> merged;
    for (const Interval& interval : intervals) {
        if (!merged.empty() && interval.start <= merged.back().end) {
            merged.back().end = std::max(merged.back().end, interval.end);
        } else {
            merged.push_back(interval);
        }
    }
    return merged;
}

double overlap_with(const std::vector<Interval>& busy, double start, double end) {
    double overlap = 0.0;
    for (const Interval& interval : busy) {
        const double lo = std::max(start, interval.start);
        const double hi = std::min(end, interval.end);
        if (hi > lo) overlap += hi - lo;
    }
    return overlap;
}

}  // namespace

LatencyBreakdown breakdown(const ParsedTrace& trace) {
    LatencyBreakdown result;
    for (const TraceStep& step : trace.steps) {
        const double duration = step.end - step.start;
        if (step.role == Role::agent_reasoning) result.agent_reasoning += duration;
        if (step.role == Role::tool_observation) result.action_execution += duration;
    }

    const std::vector<Interval> busy = merged_busy_intervals(trace);
    for (const CompactionEvent& event : trace.events) {
        if (event.compactor_end) {
            const double duration = *event.compactor_end - event.compactor_start;
            const double hidden = overlap_with(busy, event.compactor_start, *event.compactor_end);
            result.overlapped_compaction += hidden;
            result.blocking_compaction += duration - hidden;
        }
        if (event.fallback_start && event.fallback_end) {
            // The fallback generation runs with stepping paused.
            result.blocking_compaction += *event.fallback_end - *event.fallback_start;
        }
        if (event.judge_start && event.judge_end) {
            result.judge_update += *event.judge_end - *event.judge_start;
        }
        if (event.update_start && event.update_end) {
            result.judge_update += *event.update_end - *event.update_start;
        }
    }
    result.total = trace.end.total_time;
    return result;
}

double rejection_rate(const std::vector<ParsedTrace>& traces) {
    int judged = 0;
    int rejected = 0;
    for (const ParsedTrace& trace : traces) {
        for (const CompactionEvent& event : trace.events) {
            if (event.decision.empty()) continue;
            ++judged;
            if (event.decision == "reject") ++rejected;
        }
    }
    if (judged == 0) throw Error("rejection rate undefined: no judged compactions in the traces");
    return static_cast<double>(rejected) / static_cast<double>(judged);
}

std::vector<DeviationLabel> load_labels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open labels file: " + path.string());
    json root;
    try {
        root = json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError("labels file " + path.string() + ": " + e.what());
    }

    const json* entries = nullptr;
    if (root.is_array()) {
        entries = &root;
    } else if (root.is_object() && root.contains("labels") && root.at("labels").is_array()) {
        entries = &root.at("labels");
    } else {
        throw ParseError("labels file must be an array or an object with a \"labels\" array");
    }

    std::vector<DeviationLabel> labels;
    for (std::size_t i = 0; i < entries->size(); ++i) {
        const json& obj = (*entries)[i];
        const std::string where = "label[" + std::to_string(i) + "]";
        if (!obj.is_object()) throw ParseError(where + " must be an object");
        DeviationLabel label;
        label.query = obj.value("query", std::string{});
        if (obj.contains("offset")) {
            label.offset = obj.at("offset").get<int>();
        } else if (obj.contains("deviation_step") && obj.contains("compaction_step")) {
            label.offset = obj.at("deviation_step").get<int>() - obj.at("compaction_step").get<int>();
        } else {
            throw ParseError(where + " needs offset or deviation_step + compaction_step");
        }
        labels.push_back(std::move(label));
    }
    return labels;
}

std::map<int, double> LocalityHistogram::cdf() const {
    std::map<int, double> result;
    if (total == 0) return result;
    int cumulative = 0;
    for (const auto& [offset, count] : counts) {
        cumulative += count;
        result[offset] = static_cast<double>(cumulative) / static_cast<double>(total);
    }
    return result;
}

double LocalityHistogram::cdf_at(int k) const {
    if (total == 0) return 0.0;
    int cumulative = 0;
    for (const auto& [offset, count] : counts) {
        if (offset > k) break;
        cumulative += count;
    }
    return static_cast<double>(cumulative) / static_cast<double>(total);
}

LocalityHistogram deviation_locality(const std::vector<DeviationLabel>& labels) {
    LocalityHistogram histogram;
    for (const DeviationLabel& label : labels) {
        histogram.counts[label.offset]++;
        histogram.total++;
    }
    return histogram;
}

namespace {

json breakdown_to_json(const LatencyBreakdown& b) {
    json obj;
    obj["agent_reasoning"] = b.agent_reasoning;
    obj["action_execution"] = b.action_execution;
    obj["blocking_compaction"] = b.blocking_compaction;
    obj["overlapped_compaction"] = b.overlapped_compaction;
    obj["judge_update"] = b.judge_update;
    obj["total"] = b.total;
    return obj;
}

}  // namespace

Report build_report(const std::vector<std::pair<std::string, ParsedTrace>>& traces,
                    const std::optional<std::vector<DeviationLabel>>& labels) {
    Report report;
    int judged = 0;
    int rejected = 0;

    // (query, threshold) -> mode -> total, for the normalized comparison.
    std::map<std::pair<std::string, int>, std::map<std::string, double>> grouped;

    for (const auto& [file, trace] : traces) {
        TraceSummary summary;
        summary.file = file;
        summary.header = trace.header;
        summary.latency = breakdown(trace);
        summary.compaction_share =
            summary.latency.total > 0.0 ? summary.latency.blocking_compaction / summary.latency.total
                                        : 0.0;
        report.pooled.agent_reasoning += summary.latency.agent_reasoning;
        report.pooled.action_execution += summary.latency.action_execution;
        report.pooled.blocking_compaction += summary.latency.blocking_compaction;
        report.pooled.overlapped_compaction += summary.latency.overlapped_compaction;
        report.pooled.judge_update += summary.latency.judge_update;
        report.pooled.total += summary.latency.total;

        grouped[{trace.header.query, trace.header.threshold}]
               [std::string(to_string(trace.header.mode))] = summary.latency.total;

        for (const CompactionEvent& event : trace.events) {
            if (event.decision.empty()) continue;
            ++judged;
            if (event.decision == "reject") ++rejected;
        }
        report.traces.push_back(std::move(summary));
    }

    const auto count = static_cast<double>(traces.size());
    if (count > 0) {
        report.per_trace_mean.agent_reasoning = report.pooled.agent_reasoning / count;
        report.per_trace_mean.action_execution = report.pooled.action_execution / count;
        report.per_trace_mean.blocking_compaction = report.pooled.blocking_compaction / count;
        report.per_trace_mean.overlapped_compaction = report.pooled.overlapped_compaction / count;
        report.per_trace_mean.judge_update = report.pooled.judge_update / count;
        report.per_trace_mean.total = report.pooled.total / count;
    }

    std::map<std::string, std::pair<double, int>> ratio_sums;
    for (const auto& [key, by_mode] : grouped) {
        auto sync_it = by_mode.find("sync");
        if (sync_it == by_mode.end() || sync_it->second <= 0.0) continue;
        for (const auto& [mode, total] : by_mode) {
            if (mode == "sync") continue;
            auto& [sum, n] = ratio_sums[mode];
            sum += total / sync_it->second;
            n += 1;
        }
    }
    for (const auto& [mode, acc] : ratio_sums) {
        report.normalized_vs_sync[mode] = acc.first / acc.second;
    }

    if (judged > 0) {
        report.rejection_rate = static_cast<double>(rejected) / static_cast<double>(judged);
    }
    if (labels) report.locality = deviation_locality(*labels);
    return report;
}

std::string report_to_json(const Report& report) {
    json obj;
    obj["traces"] = json::array();
    for (const TraceSummary& summary : report.traces) {
        json entry;
        entry["file"] = summary.file;
        entry["query"] = summary.header.query;
        entry["mode"] = to_string(summary.header.mode);
        entry["threshold"] = summary.header.threshold;
        entry["seed"] = summary.header.seed;
        entry["breakdown"] = breakdown_to_json(summary.latency);
        entry["compaction_share"] = summary.compaction_share;
        obj["traces"].push_back(std::move(entry));
    }
    obj["aggregate"]["pooled"] = breakdown_to_json(report.pooled);
    obj["aggregate"]["per_trace_mean"] = breakdown_to_json(report.per_trace_mean);
    obj["aggregate"]["normalized_vs_sync"] = report.normalized_vs_sync;
    if (report.rejection_rate) obj["rejection_rate"] = *report.rejection_rate;
    if (report.locality) {
        json locality;
        locality["total"] = report.locality->total;
        json counts = json::object();
        json cdf = json::object();
        for (const auto& [offset, n] : report.locality->counts) {
            counts[std::to_string(offset)] = n;
        }
        for (const auto& [offset, fraction] : report.locality->cdf()) {
            cdf[std::to_string(offset)] = fraction;
        }
        locality["counts"] = std::move(counts);
        locality["cdf"] = std::move(cdf);
        obj["deviation_locality"] = std::move(locality);
    }
    return obj.dump(2) + "\n";
}

namespace {

void table_row(std::ostringstream& out, const std::string& label, const LatencyBreakdown& b) {
    out << std::left << std::setw(34) << label << std::right << std::fixed << std::setprecision(3)
        << std::setw(10) << b.agent_reasoning << std::setw(10) << b.action_execution
        << std::setw(12) << b.blocking_compaction << std::setw(12) << b.overlapped_compaction
        << std::setw(12) << b.judge_update << std::setw(10) << b.total << '\n';
}

}  // namespace

std::string report_to_table(const Report& report) {
    std::ostringstream out;
    out << std::left << std::setw(34) << "trace" << std::right << std::setw(10) << "reason"
        << std::setw(10) << "action" << std::setw(12) << "block-comp" << std::setw(12)
        << "ovlp-comp" << std::setw(12) << "judge+upd" << std::setw(10) << "total" << '\n';
    for (const TraceSummary& summary : report.traces) {
        std::string label = summary.header.query + "/" +
                            std::string(to_string(summary.header.mode)) + "/T" +
                            std::to_string(summary.header.threshold);
        table_row(out, label, summary.latency);
    }
    table_row(out, "pooled", report.pooled);
    table_row(out, "per-trace mean", report.per_trace_mean);
    for (const auto& [mode, ratio] : report.normalized_vs_sync) {
        out << "normalized total vs sync (" << mode << "): " << std::fixed << std::setprecision(4)
            << ratio << '\n';
    }
    if (report.rejection_rate) {
        out << "rejection rate: " << std::fixed << std::setprecision(4) << *report.rejection_rate
            << '\n';
    }
    if (report.locality) {
        out << "deviation locality (offset: count, cdf):" << '\n';
        const auto cdf = report.locality->cdf();
        for (const auto& [offset, count] : report.locality->counts) {
            out << "  k<=" << offset << ": " << count << ", " << std::fixed << std::setprecision(4)
                << cdf.at(offset) << '\n';
        }
    }
    return out.str();
}

}  // namespace slipstream
