#pragma once

#include <memory>
#include <string>

#include "starsim/backend/backend.hpp"

namespace starsim {

struct LiveBackendConfig {
    // Base URL up to and including the API prefix, e.g.
    // "https://api.openai.com/v1" or "http://localhost:8080/v1".
    std::string base_url;
    std::string model;
    // Name of the environment variable holding the API key; empty or unset
    // variable sends no Authorization header.
    std::string api_key_env = "OPENAI_API_KEY";
    int retry_budget = 3;
    int retry_backoff_ms = 500;
    // Maximum in-flight requests across all threads.
    int concurrency = 4;
    int connect_timeout_s = 10;
    int read_timeout_s = 120;
};

/// OpenAI-compatible chat-completions client. Transient failures (transport
/// errors, 429, 5xx) retry with exponential backoff, at most 1 + retry_budget
/// attempts per request.
class LiveBackend : public Backend {
public:
    explicit LiveBackend(LiveBackendConfig config);
    ~LiveBackend() override;

    CompletionResponse complete(const CompletionRequest& request) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace starsim
