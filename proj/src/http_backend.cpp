#include "slipstream/http_backend.hpp"

#include <chrono>
#include <cstdlib>

#include <httplib.h>

#include "slipstream/errors.hpp"
#include "slipstream/tokens.hpp"

namespace slipstream {

using nlohmann::json;

HttpBackend::HttpBackend(HttpBackendConfig config)
    : config_(std::move(config)), epoch_(std::chrono::steady_clock::now()) {
    if (config_.base_url.empty()) throw std::invalid_argument("http backend needs a base_url");
    if (!config_.api_key_env.empty()) {
        if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
    }
}

json HttpBackend::build_body(const GenerationRequest& request) const {
    json body;
    body["model"] = config_.model;
    body["messages"] = json::array();
    for (const ChatMessage& message : request.messages) {
        body["messages"].push_back({{"role", message.role}, {"content", message.content}});
    }
    int max_tokens = request.max_output_tokens > 0 ? request.max_output_tokens
                                                   : default_max_output_tokens(request.purpose);
    body["max_tokens"] = max_tokens;
    for (auto it = config_.extra_body.begin(); it != config_.extra_body.end(); ++it) {
        body[it.key()] = it.value();
    }
    return body;
}

GenerationResponse HttpBackend::perform(const GenerationRequest& request) {
    const json body = build_body(request);
    const std::string payload = body.dump();

    httplib::Client client(config_.base_url);
    client.set_connection_timeout(std::chrono::duration<double>(config_.timeout_s));
    client.set_read_timeout(std::chrono::duration<double>(config_.timeout_s));
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    const auto started = std::chrono::steady_clock::now();
    // One retry on transport errors only; HTTP error statuses are final.
    httplib::Result result;
    for (int attempt = 0; attempt < 2; ++attempt) {
        result = client.Post("/v1/chat/completions", headers, payload, "application/json");
        if (result) break;
    }
    const double latency =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    if (!result) {
        throw BackendError("transport error talking to " + config_.base_url + ": " +
                               httplib::to_string(result.error()),
                           true);
    }
    if (result->status < 200 || result->status >= 300) {
        throw BackendError("chat completion failed with HTTP " + std::to_string(result->status) +
                           ": " + result->body);
    }

    json reply;
    try {
        reply = json::parse(result->body);
    } catch (const json::exception& e) {
        throw BackendError(std::string("unparseable completion body: ") + e.what());
    }

    GenerationResponse response;
    response.latency_s = latency;
    try {
        response.content = reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw BackendError(std::string("completion missing choices[0].message.content: ") + e.what());
    }
    if (reply.contains("usage") && reply["usage"].contains("completion_tokens")) {
        response.output_tokens = reply["usage"]["completion_tokens"].get<int>();
    } else {
        response.output_tokens = default_token_counter()->count(response.content);
    }
    return response;
}

Backend::Ticket HttpBackend::begin(const GenerationRequest& request) {
    if (request.messages.empty()) throw std::invalid_argument("generation request has no messages");
    std::lock_guard lock(mutex_);
    Ticket ticket = next_ticket_++;
    pending_.emplace(ticket, std::async(std::launch::async,
                                        [this, request] { return perform(request); }));
    return ticket;
}

bool HttpBackend::ready(Ticket ticket) {
    std::lock_guard lock(mutex_);
    auto it = pending_.find(ticket);
    if (it == pending_.end()) throw std::invalid_argument("unknown or collected ticket");
    return it->second.wait_for(std::chrono::seconds(0)) == std::future_status::ready;
}

GenerationResponse HttpBackend::wait(Ticket ticket) {
    std::future<GenerationResponse> future;
    {
        std::lock_guard lock(mutex_);
        auto it = pending_.find(ticket);
        if (it == pending_.end()) throw std::invalid_argument("unknown or collected ticket");
        future = std::move(it->second);
        pending_.erase(it);
    }
    return future.get();
}

double HttpBackend::now() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_).count();
}

}  // namespace slipstream
