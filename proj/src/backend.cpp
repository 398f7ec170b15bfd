#include "starsim/backend/backend.hpp"
#include "starsim/backend/scripted.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace starsim {

long long whitespace_tokens(const std::string& text) {
    long long count = 0;
    bool in_token = false;
    for (char c : text) {
        bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
        if (!space && !in_token) ++count;
        in_token = !space;
    }
    return count;
}

std::map<std::string, UsageTotals> usage_totals(std::span<const UsageRecord> records) {
    std::map<std::string, UsageTotals> totals;
    for (const auto& rec : records) {
        std::string prefix = rec.tag.substr(0, rec.tag.find(':'));
        auto& entry = totals[prefix];
        entry.tokens_in += rec.tokens_in;
        entry.tokens_out += rec.tokens_out;
    }
    return totals;
}

CompletionResponse RecordingBackend::complete(const CompletionRequest& request) {
    CompletionResponse response = inner_.complete(request);
    {
        std::lock_guard<std::mutex> lock(mutex_);
        records_.push_back({request.tag, response.tokens_in, response.tokens_out});
    }
    return response;
}

// ---------------------------------------------------------------------------
// Scripted backend
// ---------------------------------------------------------------------------

bool glob_match(std::string_view pattern, std::string_view text) {
    size_t p = 0, t = 0;
    size_t star = std::string_view::npos, backtrack = 0;
    while (t < text.size()) {
        if (p < pattern.size() && (pattern[p] == text[t] || pattern[p] == '?')) {
            ++p;
            ++t;
        } else if (p < pattern.size() && pattern[p] == '*') {
            star = p++;
            backtrack = t;
        } else if (star != std::string_view::npos) {
            p = star + 1;
            t = ++backtrack;
        } else {
            return false;
        }
    }
    while (p < pattern.size() && pattern[p] == '*') ++p;
    return p == pattern.size();
}

ScriptedPlaybook ScriptedPlaybook::from_json_text(const std::string& text) {
    nlohmann::json doc = nlohmann::json::parse(text);
    if (!doc.is_array()) {
        throw std::invalid_argument("playbook must be a JSON array");
    }
    ScriptedPlaybook playbook;
    for (const auto& item : doc) {
        PlaybookEntry entry;
        entry.tag_pattern = item.at("tag_pattern").get<std::string>();
        if (item.contains("contains") && !item["contains"].is_null()) {
            entry.contains = item["contains"].get<std::string>();
        }
        entry.response = item.at("response").get<std::string>();
        playbook.entries.push_back(std::move(entry));
    }
    return playbook;
}

ScriptedPlaybook ScriptedPlaybook::from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::invalid_argument("cannot open playbook file: " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return from_json_text(buffer.str());
}

CompletionResponse ScriptedBackend::complete(const CompletionRequest& request) {
    {
        std::lock_guard<std::mutex> lock(mutex_);
        call_log_.push_back(request.tag);
    }
    for (const auto& entry : playbook_.entries) {
        if (!glob_match(entry.tag_pattern, request.tag)) continue;
        if (entry.contains && request.user_prompt.find(*entry.contains) == std::string::npos) {
            continue;
        }
        CompletionResponse response;
        response.text = entry.response;
        response.tokens_in = whitespace_tokens(request.system_prompt) +
                             whitespace_tokens(request.user_prompt);
        response.tokens_out = whitespace_tokens(response.text);
        return response;
    }
    throw PlaybookMiss("no playbook entry matches tag \"" + request.tag + "\"");
}

std::vector<std::string> ScriptedBackend::call_log() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return call_log_;
}

}  // namespace starsim
