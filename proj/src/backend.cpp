#include "slipstream/backend.hpp"

#include <stdexcept>

#include "slipstream/errors.hpp"

namespace slipstream {

std::string_view to_string(Purpose purpose) {
    switch (purpose) {
        case Purpose::agent_step: return "agent_step";
        case Purpose::compaction: return "compaction";
        case Purpose::judge: return "judge";
        case Purpose::targeted_update: return "targeted_update";
    }
    throw std::invalid_argument("unknown purpose value");
}

Purpose purpose_from_string(std::string_view name) {
    if (name == "agent_step") return Purpose::agent_step;
    if (name == "compaction") return Purpose::compaction;
    if (name == "judge") return Purpose::judge;
    if (name == "targeted_update") return Purpose::targeted_update;
    throw ParseError("unknown purpose: " + std::string(name));
}

int default_max_output_tokens(Purpose purpose) {
    switch (purpose) {
        case Purpose::agent_step: return 2048;
        case Purpose::compaction: return 4096;
        case Purpose::judge: return 512;
        case Purpose::targeted_update: return 4096;
    }
    return 2048;
}

}  // namespace slipstream
