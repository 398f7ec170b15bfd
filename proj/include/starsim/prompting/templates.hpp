#pragma once

#include <optional>
#include <string>
#include <vector>

#include "starsim/agents/strategy.hpp"
#include "starsim/core/types.hpp"

namespace starsim {

/// A rendered (system, user) prompt pair. Rendering is pure: the same inputs
/// always produce the same bytes, and no placeholder markers survive.
struct PromptBundle {
    std::string system;
    std::string user;

    bool operator==(const PromptBundle&) const = default;
};

/// Serializes observed messages as "Agent <id> (round <t>): <raw>" blocks in
/// agent-index order; an empty set renders the given sentinel line.
std::string serialize_views(const std::vector<Message>& messages, const std::string& empty_line);

// Question stem followed by one "X. text" line per option.
std::string render_question_block(const Question& question);

PromptBundle render_benign(const Question& question, const std::vector<Message>& observed);

PromptBundle render_malicious_independent(const Question& question,
                                          const std::vector<Message>& observed);

/// Cooperative attacker prompt. With `judged` set (separate-judge mode) a
/// strategy hint line follows the coordination strategy block; without it the
/// prompt leaves strategy selection to the attacker model itself.
PromptBundle render_malicious_cooperative(const Question& question,
                                          const std::vector<Message>& observed,
                                          const std::vector<Message>& ally_context,
                                          std::optional<JudgeOutcome> judged = std::nullopt);

/// Sentence-level fact-check prompt for one speaker's message. Sentences are
/// numbered from 1; the speaker never sees the ground truth.
PromptBundle render_verifier(AgentId speaker, const Question& question,
                             const std::vector<std::string>& sentences);

// Minimal ally-strength classification prompt for the separate-judge mode.
PromptBundle render_judge(const std::vector<Message>& ally_context);

}  // namespace starsim
