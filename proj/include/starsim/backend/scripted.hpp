#pragma once

#include <optional>
#include <string>
#include <vector>

#include "starsim/backend/backend.hpp"

namespace starsim {

/// One playbook entry. `tag_pattern` is a glob ('*' and '?' wildcards)
/// matched against the request tag; `contains`, when set, must additionally
/// appear as a substring of the user prompt. First match in list order wins.
struct PlaybookEntry {
    std::string tag_pattern;
    std::optional<std::string> contains;
    std::string response;
};

struct ScriptedPlaybook {
    std::vector<PlaybookEntry> entries;

    // Parses a JSON array of {tag_pattern, contains?, response}.
    static ScriptedPlaybook from_json_text(const std::string& text);
    static ScriptedPlaybook from_file(const std::string& path);
};

bool glob_match(std::string_view pattern, std::string_view text);

/// Deterministic offline backend: first-match playback with
/// whitespace-token accounting. Lookup is read-only; the call log is the
/// only mutable state and is mutex-guarded.
class ScriptedBackend : public Backend {
public:
    explicit ScriptedBackend(ScriptedPlaybook playbook) : playbook_(std::move(playbook)) {}

    // Throws PlaybookMiss (with the offending tag) when nothing matches.
    CompletionResponse complete(const CompletionRequest& request) override;

    std::vector<std::string> call_log() const;

private:
    ScriptedPlaybook playbook_;
    mutable std::mutex mutex_;
    std::vector<std::string> call_log_;
};

}  // namespace starsim
