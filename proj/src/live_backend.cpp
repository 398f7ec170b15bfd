#include "starsim/backend/live.hpp"

#include <chrono>
#include <cstdlib>
#include <semaphore>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace starsim {

namespace {

// Splits "https://host:port/v1" into scheme://authority and path prefix.
void split_base_url(const std::string& base_url, std::string& origin, std::string& path_prefix) {
    std::string url = base_url;
    while (!url.empty() && url.back() == '/') url.pop_back();
    size_t scheme_end = url.find("://");
    size_t path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    if (path_start == std::string::npos) {
        origin = url;
        path_prefix.clear();
    } else {
        origin = url.substr(0, path_start);
        path_prefix = url.substr(path_start);
    }
}

bool retryable_status(int status) {
    return status == 429 || status >= 500;
}

}  // namespace

struct LiveBackend::Impl {
    LiveBackendConfig config;
    std::string origin;
    std::string path;
    std::string api_key;
    std::counting_semaphore<256> slots{1};

    explicit Impl(LiveBackendConfig cfg) : config(std::move(cfg)) {
        split_base_url(config.base_url, origin, path);
        path += "/chat/completions";
        if (!config.api_key_env.empty()) {
            if (const char* key = std::getenv(config.api_key_env.c_str())) {
                api_key = key;
            }
        }
        int cap = std::clamp(config.concurrency, 1, 256);
        for (int i = 1; i < cap; ++i) slots.release();
    }
};

LiveBackend::LiveBackend(LiveBackendConfig config)
    : impl_(std::make_unique<Impl>(std::move(config))) {}

LiveBackend::~LiveBackend() = default;

CompletionResponse LiveBackend::complete(const CompletionRequest& request) {
    nlohmann::json body = {
        {"model", impl_->config.model},
        {"messages",
         {{{"role", "system"}, {"content", request.system_prompt}},
          {{"role", "user"}, {"content", request.user_prompt}}}},
        {"temperature", request.temperature},
        {"max_tokens", request.max_tokens},
    };
    const std::string payload = body.dump();

    impl_->slots.acquire();
    struct Release {
        std::counting_semaphore<256>& s;
        ~Release() { s.release(); }
    } release{impl_->slots};

    std::string last_error = "no attempt made";
    const int attempts = 1 + std::max(0, impl_->config.retry_budget);
    for (int attempt = 0; attempt < attempts; ++attempt) {
        if (attempt > 0) {
            auto delay = std::chrono::milliseconds(
                static_cast<long long>(impl_->config.retry_backoff_ms) << (attempt - 1));
            std::this_thread::sleep_for(delay);
        }

        httplib::Client client(impl_->origin);
        client.set_connection_timeout(impl_->config.connect_timeout_s, 0);
        client.set_read_timeout(impl_->config.read_timeout_s, 0);
        httplib::Headers headers;
        if (!impl_->api_key.empty()) {
            headers.emplace("Authorization", "Bearer " + impl_->api_key);
        }

        auto result = client.Post(impl_->path, headers, payload, "application/json");
        if (!result) {
            last_error = "transport error: " + httplib::to_string(result.error());
            continue;
        }
        if (result->status != 200) {
            last_error = "HTTP " + std::to_string(result->status) + ": " + result->body;
            if (retryable_status(result->status)) continue;
            break;
        }

        try {
            nlohmann::json doc = nlohmann::json::parse(result->body);
            CompletionResponse response;
            response.text = doc.at("choices").at(0).at("message").at("content").get<std::string>();
            if (doc.contains("usage")) {
                response.tokens_in = doc["usage"].value("prompt_tokens", 0LL);
                response.tokens_out = doc["usage"].value("completion_tokens", 0LL);
            } else {
                response.tokens_in = whitespace_tokens(request.system_prompt) +
                                     whitespace_tokens(request.user_prompt);
                response.tokens_out = whitespace_tokens(response.text);
            }
            return response;
        } catch (const nlohmann::json::exception& e) {
            last_error = std::string("malformed completion payload: ") + e.what();
            break;
        }
    }
    throw BackendUnavailable("backend call \"" + request.tag + "\" failed: " + last_error);
}

}  // namespace starsim
