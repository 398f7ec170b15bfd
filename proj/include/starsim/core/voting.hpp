#pragma once

#include <optional>
#include <set>
#include <string_view>
#include <vector>

#include "starsim/core/types.hpp"

namespace starsim {

/// Extracts the token following the literal marker "<ANSWER>:" (last
/// occurrence wins when a model echoes the format), strips surrounding
/// whitespace and punctuation, and returns the label if it names an option.
/// Total: malformed output yields std::nullopt.
std::optional<char> parse_answer(std::string_view raw, const std::vector<Option>& options);

/// Trimmed text between "<REASON>:" and the next "<ANSWER>:" marker. Without
/// markers the whole text is the reason. Total.
std::string parse_reason(std::string_view raw);

/// Majority vote over final-round messages. Agents in `excluded` and agents
/// with unparseable answers cast no vote; ties break toward the earliest
/// option label. If every agent is excluded or no non-excluded vote parses,
/// falls back to tallying all agents (excluded treated as empty).
VoteResult majority_vote(const std::vector<Message>& messages,
                         const std::set<AgentId>& excluded,
                         const std::vector<Option>& options);

}  // namespace starsim
