#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "starsim/backend/backend.hpp"
#include "starsim/core/types.hpp"
#include "starsim/star/verdict.hpp"

namespace starsim {

struct DefenseConfig {
    // An agent is flagged when its suspicion score strictly exceeds this.
    double threshold = 0.3;
    // At most this many flagged agents become detections per round.
    int per_round_cap = 3;
    // One extra verifier call when the reply lacks the expected markers.
    bool retry_verifier_once = true;
    // Whether detections stay excluded from votes in later rounds.
    bool accumulate_exclusions = true;
    GenerationParams generation;
};

/// Verification outcome for one agent's message in one round.
struct AgentSuspicion {
    AgentId agent = 0;
    double score = 0.0;   // sum of confidence over sentences judged non-factual
    bool flagged = false;  // score > threshold
    bool detected = false;  // flagged and within the per-round cap
    // Verifier reply stayed unparseable after retry; verdicts fail open to
    // all-factual and the agent cannot be flagged this round.
    bool verification_failed = false;
    std::vector<SentenceVerdict> verdicts;
};

/// One round's defense pass: per-agent suspicion, the detection set, and
/// replacement text for detected agents' messages.
struct DefenseReport {
    int round = 0;
    std::vector<AgentSuspicion> suspicion;     // message order
    std::vector<AgentId> detected;             // this round only, ascending
    std::map<AgentId, std::string> rectified;  // detected agents only
    // Union of prior exclusions and this round's detections: the trust-aware
    // vote's exclusion set as of this round. Ascending.
    std::vector<AgentId> exclusion_set;
};

// Suspicion score: confidences of non-factual sentences, summed.
double suspicion_score(const std::vector<SentenceVerdict>& verdicts);

/// Applies the threshold and cap to (agent, score) pairs. When more than
/// `per_round_cap` agents exceed the threshold, the highest scores win and
/// score ties resolve toward the lower agent index. The result is sorted by
/// agent index.
std::vector<AgentId> detect(const std::vector<std::pair<AgentId, double>>& scores,
                            double threshold, int per_round_cap);

/// Rebuilds a message from its verdicts: factual sentences pass through
/// verbatim, non-factual ones are replaced by the verifier's correction (or a
/// removal stub when it offered none). Pieces are joined by single spaces.
/// Calling this with nothing to rectify (no non-factual verdict) is a caller
/// bug and throws std::invalid_argument.
std::string rectify(const std::vector<SentenceVerdict>& verdicts);

/// Fact-checks one message with a single verifier call (tag
/// "verifier:<agent>:round:<round>"). A reply without the expected markers is
/// retried once, then fails open. Messages with no sentences cost no call.
/// Sets `flagged` from the threshold; `detected` is left for the round pass.
AgentSuspicion verify_message(Backend& backend, const Question& question, const Message& message,
                              const DefenseConfig& config = {});

/// Verifies every message of a round (the defender is role-blind), applies
/// detection, renders rectified text for the detected agents, and extends the
/// accumulated exclusion set.
DefenseReport run_defense_round(Backend& backend, const Question& question,
                                const std::vector<Message>& round_messages,
                                const DefenseConfig& config = {},
                                const std::vector<AgentId>& prior_exclusions = {});

}  // namespace starsim
