#include "starsim/agents/strategy.hpp"

namespace starsim {

AttackStrategy strategy_for(JudgeOutcome outcome) {
    return outcome == JudgeOutcome::Strong ? AttackStrategy::Reinforcement
                                           : AttackStrategy::Innovation;
}

std::string to_string(JudgeOutcome outcome) {
    return outcome == JudgeOutcome::Strong ? "Strong" : "Weak";
}

std::string to_string(AttackStrategy strategy) {
    return strategy == AttackStrategy::Reinforcement ? "Reinforcement" : "Innovation";
}

}  // namespace starsim
