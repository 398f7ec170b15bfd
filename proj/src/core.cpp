#include "starsim/core/types.hpp"
#include "starsim/core/topology.hpp"
#include "starsim/core/voting.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <stdexcept>

namespace starsim {

std::string to_string(AgentRole role) {
    switch (role) {
        case AgentRole::Benign:               return "benign";
        case AgentRole::MaliciousIndependent: return "malicious_independent";
        case AgentRole::MaliciousCooperative: return "malicious_cooperative";
    }
    return "benign";
}

AgentRole agent_role_from_string(const std::string& s) {
    if (s == "benign")                return AgentRole::Benign;
    if (s == "malicious_independent") return AgentRole::MaliciousIndependent;
    if (s == "malicious_cooperative") return AgentRole::MaliciousCooperative;
    throw std::invalid_argument("unknown agent role: " + s);
}

bool Question::has_option(char label) const {
    for (const auto& opt : options) {
        if (opt.label == label) return true;
    }
    return false;
}

const std::string& Question::option_text(char label) const {
    for (const auto& opt : options) {
        if (opt.label == label) return opt.text;
    }
    throw std::invalid_argument(std::string("question ") + id + " has no option " + label);
}

void Question::validate() const {
    if (options.size() < 2) {
        throw std::invalid_argument("question " + id + ": needs at least 2 options");
    }
    for (size_t i = 0; i < options.size(); ++i) {
        char expected = static_cast<char>('A' + i);
        if (options[i].label != expected) {
            throw std::invalid_argument("question " + id + ": option labels must be consecutive letters from A");
        }
    }
    if (!has_option(ground_truth)) {
        throw std::invalid_argument("question " + id + ": ground_truth not among options");
    }
    if (!has_option(target_wrong)) {
        throw std::invalid_argument("question " + id + ": target_wrong not among options");
    }
    if (ground_truth == target_wrong) {
        throw std::invalid_argument("question " + id + ": target_wrong must differ from ground_truth");
    }
}

int VoteResult::tally_for(char label) const {
    for (const auto& [l, c] : tally) {
        if (l == label) return c;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// Topology
// ---------------------------------------------------------------------------

Topology::Topology(int n_agents, std::vector<std::pair<AgentId, AgentId>> edges)
    : n_agents_(n_agents) {
    if (n_agents <= 0) {
        throw std::invalid_argument("topology needs at least one agent");
    }
    adjacency_.resize(static_cast<size_t>(n_agents));
    for (auto [a, b] : edges) {
        if (a == b) {
            throw std::invalid_argument("topology edges may not be self-loops");
        }
        if (a < 0 || b < 0 || a >= n_agents || b >= n_agents) {
            throw std::invalid_argument("topology edge endpoint out of range");
        }
        if (a > b) std::swap(a, b);
        if (std::find(edges_.begin(), edges_.end(), std::make_pair(a, b)) != edges_.end()) {
            throw std::invalid_argument("duplicate topology edge");
        }
        edges_.emplace_back(a, b);
        adjacency_[static_cast<size_t>(a)].push_back(b);
        adjacency_[static_cast<size_t>(b)].push_back(a);
    }
    std::sort(edges_.begin(), edges_.end());
    for (auto& adj : adjacency_) {
        std::sort(adj.begin(), adj.end());
    }
}

const std::vector<AgentId>& Topology::neighbors(AgentId agent) const {
    if (agent < 0 || agent >= n_agents_) {
        throw std::out_of_range("agent id out of range for topology");
    }
    return adjacency_[static_cast<size_t>(agent)];
}

Topology build_tree_topology(int n_agents) {
    std::vector<std::pair<AgentId, AgentId>> edges;
    for (AgentId i = 1; i < n_agents; ++i) {
        edges.emplace_back((i - 1) / 2, i);
    }
    return Topology(n_agents, std::move(edges));
}

// ---------------------------------------------------------------------------
// Answer parsing and vote aggregation
// ---------------------------------------------------------------------------

std::optional<char> parse_answer(std::string_view raw, const std::vector<Option>& options) {
    static constexpr std::string_view kMarker = "<ANSWER>:";
    size_t pos = raw.rfind(kMarker);
    if (pos == std::string_view::npos) return std::nullopt;

    size_t i = pos + kMarker.size();
    while (i < raw.size() && std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
    size_t end = i;
    while (end < raw.size() && !std::isspace(static_cast<unsigned char>(raw[end]))) ++end;
    std::string_view token = raw.substr(i, end - i);

    // Strip punctuation wrappers such as "(B)", "**B**" or "B.".
    while (!token.empty() && !std::isalnum(static_cast<unsigned char>(token.front()))) {
        token.remove_prefix(1);
    }
    while (!token.empty() && !std::isalnum(static_cast<unsigned char>(token.back()))) {
        token.remove_suffix(1);
    }
    if (token.size() != 1) return std::nullopt;

    char label = static_cast<char>(std::toupper(static_cast<unsigned char>(token.front())));
    for (const auto& opt : options) {
        if (opt.label == label) return label;
    }
    return std::nullopt;
}

std::string parse_reason(std::string_view raw) {
    constexpr std::string_view kReason = "<REASON>:";
    constexpr std::string_view kAnswer = "<ANSWER>:";
    size_t start = raw.find(kReason);
    size_t begin = (start == std::string_view::npos) ? 0 : start + kReason.size();
    size_t end = raw.find(kAnswer, begin);
    if (end == std::string_view::npos) end = raw.size();
    std::string_view reason = raw.substr(begin, end - begin);
    while (!reason.empty() && std::isspace(static_cast<unsigned char>(reason.front()))) {
        reason.remove_prefix(1);
    }
    while (!reason.empty() && std::isspace(static_cast<unsigned char>(reason.back()))) {
        reason.remove_suffix(1);
    }
    return std::string(reason);
}

namespace {

VoteResult tally_votes(const std::vector<Message>& messages,
                       const std::set<AgentId>& excluded,
                       const std::vector<Option>& options) {
    std::map<char, int> counts;
    for (const auto& msg : messages) {
        if (excluded.count(msg.agent) > 0) continue;
        if (!msg.answer) continue;
        counts[*msg.answer] += 1;
    }

    VoteResult result;
    result.excluded.assign(excluded.begin(), excluded.end());

    if (counts.empty()) {
        // No countable vote at all: every option ties at zero, so the
        // earliest label wins by the tie-break rule.
        result.winner = options.front().label;
        result.tie_broken = true;
        return result;
    }

    int best = 0;
    for (const auto& opt : options) {
        auto it = counts.find(opt.label);
        if (it == counts.end()) continue;
        result.tally.emplace_back(opt.label, it->second);
        best = std::max(best, it->second);
    }
    int at_best = 0;
    for (const auto& [label, count] : result.tally) {
        if (count == best) {
            if (at_best == 0) result.winner = label;
            ++at_best;
        }
    }
    result.tie_broken = at_best > 1;
    return result;
}

}  // namespace

VoteResult majority_vote(const std::vector<Message>& messages,
                         const std::set<AgentId>& excluded,
                         const std::vector<Option>& options) {
    if (options.empty()) {
        throw std::invalid_argument("majority_vote needs a non-empty option set");
    }
    bool any_countable = false;
    for (const auto& msg : messages) {
        if (excluded.count(msg.agent) == 0 && msg.answer) {
            any_countable = true;
            break;
        }
    }
    if (!any_countable) {
        // All agents excluded or nothing parseable: fall back to the full
        // population so a run always produces an answer.
        return tally_votes(messages, {}, options);
    }
    return tally_votes(messages, excluded, options);
}

}  // namespace starsim
