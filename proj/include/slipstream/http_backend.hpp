// OpenAI-compatible chat-completions client. Overlap comes from real
// threads; the clock is wall time since construction.
#pragma once

#include <future>
#include <map>
#include <mutex>
#include <string>

#include <json.hpp>

#include "slipstream/backend.hpp"

namespace slipstream {

struct HttpBackendConfig {
    std::string base_url;  // e.g. http://127.0.0.1:8000
    std::string model;
    // Name of the environment variable holding the bearer token; empty value
    // or unset variable sends no Authorization header.
    std::string api_key_env = "SLIPSTREAM_API_KEY";
    // Extra body fields (sampling options etc.) merged into every request
    // untouched.
    nlohmann::json extra_body = nlohmann::json::object();
    double timeout_s = 120.0;
};

class HttpBackend final : public Backend {
public:
    explicit HttpBackend(HttpBackendConfig config);

    Ticket begin(const GenerationRequest& request) override;
    bool ready(Ticket ticket) override;
    GenerationResponse wait(Ticket ticket) override;
    double now() override;

    // Exposed for tests: the JSON body sent for a request.
    nlohmann::json build_body(const GenerationRequest& request) const;

private:
    GenerationResponse perform(const GenerationRequest& request);

    HttpBackendConfig config_;
    std::string api_key_;
    std::chrono::steady_clock::time_point epoch_;
    std::mutex mutex_;
    Ticket next_ticket_ = 1;
    std::map<Ticket, std::future<GenerationResponse>> pending_;
};

}  // namespace slipstream
