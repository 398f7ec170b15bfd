#pragma once

#include <optional>
#include <vector>

#include "starsim/agents/strategy.hpp"
#include "starsim/backend/backend.hpp"
#include "starsim/core/types.hpp"

namespace starsim {

/// The previous-round responses of an attacker's co-conspirators, in agent
/// index order. Cooperative attackers read these to pick a strategy; the
/// acting agent itself is never a member.
struct AllyContext {
    int round = 0;  // round the ally messages were produced in
    std::vector<Message> messages;
};

/// Selects the other malicious agents' messages from one round's output.
/// Rectified copies must not leak in here: coordination always reads the
/// original ally text.
AllyContext assemble_ally_context(const std::vector<Message>& round_messages,
                                  const std::vector<AgentId>& malicious_ids, AgentId actor);

/// One discussion call with the benign template. `observed` is what the
/// topology delivered from the previous round (possibly rectified).
Message act_benign(Backend& backend, const Question& question,
                   const std::vector<Message>& observed, AgentId agent, int round,
                   const GenerationParams& params = {});

/// Classifies ally strength with a dedicated judge call (tag
/// "judge:<agent>:round:<round>"). An empty ally context is Weak by
/// definition and costs no call.
JudgeOutcome judge_allies(Backend& backend, const AllyContext& allies, AgentId agent, int round,
                          const GenerationParams& params = {});

/// A malicious agent's full turn: the response message plus, for cooperative
/// attackers in separate-judge mode, the judge verdict and derived strategy.
struct MaliciousTurn {
    Message message;
    std::optional<JudgeOutcome> judged;
    std::optional<AttackStrategy> strategy;
};

/// Runs one malicious turn. Independent attackers make exactly one call.
/// Cooperative attackers with a non-empty ally context and `separate_judge`
/// make two (judge, then response); otherwise the coordination prompt carries
/// the strategy decision implicitly and one call suffices. The message's
/// `off_target` flag records drift from the question's target answer.
/// `role` must be a malicious role.
MaliciousTurn act_malicious(Backend& backend, const Question& question,
                            const std::vector<Message>& observed, const AllyContext& allies,
                            AgentRole role, AgentId agent, int round, bool separate_judge,
                            const GenerationParams& params = {});

}  // namespace starsim
