#pragma once

#include <map>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace starsim {

/// Uniform text-completion request. `tag` identifies the caller for token
/// accounting and playbook matching (e.g. "agent:3:round:2", "verifier:1:round:2").
struct CompletionRequest {
    std::string system_prompt;
    std::string user_prompt;
    double temperature = 0.0;
    int max_tokens = 1024;
    std::string tag;
};

struct CompletionResponse {
    std::string text;
    long long tokens_in = 0;
    long long tokens_out = 0;
};

/// Request-shaping knobs shared by every caller that builds completions.
struct GenerationParams {
    double temperature = 0.0;
    int max_tokens = 1024;
};

class BackendError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Live endpoint unreachable after the retry budget was spent.
class BackendUnavailable : public BackendError {
public:
    using BackendError::BackendError;
};

/// No scripted entry matched; the test script is incomplete.
class PlaybookMiss : public BackendError {
public:
    using BackendError::BackendError;
};

/// Text-completion abstraction. Implementations must be callable from
/// multiple concurrent tasks.
class Backend {
public:
    virtual ~Backend() = default;
    virtual CompletionResponse complete(const CompletionRequest& request) = 0;
};

// Whitespace-delimited token count; the scripted backend's accounting unit.
long long whitespace_tokens(const std::string& text);

/// One completed call's accounting entry.
struct UsageRecord {
    std::string tag;
    long long tokens_in = 0;
    long long tokens_out = 0;

    bool operator==(const UsageRecord&) const = default;
};

struct UsageTotals {
    long long tokens_in = 0;
    long long tokens_out = 0;

    bool operator==(const UsageTotals&) const = default;
};

/// Sums token counts grouped by tag prefix (the part before the first ':'),
/// separating defense-attributed calls from discussion calls.
std::map<std::string, UsageTotals> usage_totals(std::span<const UsageRecord> records);

/// Decorator that appends a UsageRecord per call; one instance per question
/// keeps accounting attributable and deterministic.
class RecordingBackend : public Backend {
public:
    explicit RecordingBackend(Backend& inner) : inner_(inner) {}

    CompletionResponse complete(const CompletionRequest& request) override;

    const std::vector<UsageRecord>& records() const { return records_; }

private:
    Backend& inner_;
    std::mutex mutex_;
    std::vector<UsageRecord> records_;
};

}  // namespace starsim
