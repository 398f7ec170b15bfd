#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace starsim {

// Dense agent index, stable for the whole run (0..N-1).
using AgentId = int;

enum class AgentRole {
    Benign,
    MaliciousIndependent,
    MaliciousCooperative,
};

std::string to_string(AgentRole role);
AgentRole agent_role_from_string(const std::string& s);

struct Option {
    char label = '?';
    std::string text;

    bool operator==(const Option&) const = default;
};

/// One multiple-choice QA instance. Labels are consecutive letters from 'A';
/// ground_truth and target_wrong must both be members and differ.
struct Question {
    std::string id;
    std::string stem;
    std::vector<Option> options;
    char ground_truth = '?';
    char target_wrong = '?';

    bool has_option(char label) const;
    const std::string& option_text(char label) const;

    // Throws std::invalid_argument on any invariant violation.
    void validate() const;

    bool operator==(const Question&) const = default;
};

/// One agent's structured response in one round. `raw` is the unmodified
/// backend output; `reason` and `answer` are parsed views of it. An
/// unparseable answer is std::nullopt, never an error.
struct Message {
    AgentId agent = 0;
    int round = 0;
    std::string reason;
    std::optional<char> answer;
    std::string raw;
    long long tokens_in = 0;
    long long tokens_out = 0;
    // Set when a malicious agent's parsed answer drifted from its target.
    bool off_target = false;

    bool operator==(const Message&) const = default;
};

struct VoteResult {
    char winner = '?';
    std::vector<std::pair<char, int>> tally;  // options with >=1 vote, label order
    std::vector<AgentId> excluded;            // sorted
    bool tie_broken = false;

    int tally_for(char label) const;

    bool operator==(const VoteResult&) const = default;
};

}  // namespace starsim
