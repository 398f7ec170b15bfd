#pragma once

#include <string>

namespace starsim {

/// Judge verdict on the persuasive strength of an ally context.
enum class JudgeOutcome { Strong, Weak };

/// Cooperative attack strategies: endorse allies to fake consensus, or open
/// a new deceptive argument line.
enum class AttackStrategy { Reinforcement, Innovation };

// Pure mapping: Strong -> Reinforcement, Weak -> Innovation.
AttackStrategy strategy_for(JudgeOutcome outcome);

std::string to_string(JudgeOutcome outcome);
std::string to_string(AttackStrategy strategy);

}  // namespace starsim
