// JSONL run traces: one header, one record per executed step, one record
// per compaction lifecycle, one end record. Byte-deterministic for a given
// (config, seed) under the scripted backend.
#pragma once

#include <iosfwd>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "slipstream/context.hpp"
#include "slipstream/events.hpp"

namespace slipstream {

struct TraceHeader {
    int format_version = 1;
    Mode mode = Mode::slipstream;
    int threshold = 0;
    int accept_threshold = 7;
    int k_max = 8;
    int max_update_attempts = 1;
    std::uint64_t seed = 0;
    std::string query;
    std::string backend_kind;  // "script" or "http"
    int preamble_tokens = 0;
};

struct TraceStep {
    int index = 0;
    Role role = Role::agent_reasoning;
    std::string content;
    int token_count = 0;
    double wall_time = 0.0;
    double start = 0.0;
    double end = 0.0;
};

struct TraceEnd {
    double total_time = 0.0;
    int steps = 0;
    int final_active_tokens = 0;
    std::map<std::string, int> outcome_counts;
};

class TraceWriter {
public:
    void header(const TraceHeader& header);
    void step(const TraceStep& step);
    void compaction(const CompactionEvent& event);
    void end(const TraceEnd& end);

    const std::string& str() const noexcept { return buffer_; }
    void write_file(const std::string& path) const;

private:
    std::string buffer_;
};

struct ParsedTrace {
    TraceHeader header;
    std::vector<TraceStep> steps;
    std::vector<CompactionEvent> events;
    TraceEnd end;
};

// Throws ParseError naming the offending line on malformed input.
ParsedTrace parse_trace(const std::string& text, const std::string& name = "trace");
ParsedTrace parse_trace_file(const std::string& path);

}  // namespace slipstream
