#include "starsim/agents/agents.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

#include "starsim/core/voting.hpp"
#include "starsim/prompting/parsers.hpp"
#include "starsim/prompting/templates.hpp"

namespace starsim {

namespace {

std::string round_tag(const char* kind, AgentId agent, int round) {
    return std::string(kind) + ":" + std::to_string(agent) + ":round:" + std::to_string(round);
}

Message make_message(AgentId agent, int round, const CompletionResponse& response,
                     const Question& question) {
    Message message;
    message.agent = agent;
    message.round = round;
    message.raw = response.text;
    message.reason = parse_reason(response.text);
    message.answer = parse_answer(response.text, question.options);
    message.tokens_in = response.tokens_in;
    message.tokens_out = response.tokens_out;
    return message;
}

CompletionResponse run_prompt(Backend& backend, const PromptBundle& prompt, std::string tag,
                              const GenerationParams& params) {
    CompletionRequest request;
    request.system_prompt = prompt.system;
    request.user_prompt = prompt.user;
    request.temperature = params.temperature;
    request.max_tokens = params.max_tokens;
    request.tag = std::move(tag);
    return backend.complete(request);
}

}  // namespace

AllyContext assemble_ally_context(const std::vector<Message>& round_messages,
                                  const std::vector<AgentId>& malicious_ids, AgentId actor) {
    AllyContext allies;
    for (const Message& message : round_messages) {
        if (message.agent == actor) continue;
        if (std::find(malicious_ids.begin(), malicious_ids.end(), message.agent) ==
            malicious_ids.end()) {
            continue;
        }
        allies.messages.push_back(message);
        allies.round = message.round;
    }
    std::stable_sort(allies.messages.begin(), allies.messages.end(),
                     [](const Message& a, const Message& b) { return a.agent < b.agent; });
    return allies;
}

Message act_benign(Backend& backend, const Question& question,
                   const std::vector<Message>& observed, AgentId agent, int round,
                   const GenerationParams& params) {
    PromptBundle prompt = render_benign(question, observed);
    CompletionResponse response =
        run_prompt(backend, prompt, round_tag("agent", agent, round), params);
    return make_message(agent, round, response, question);
}

JudgeOutcome judge_allies(Backend& backend, const AllyContext& allies, AgentId agent, int round,
                          const GenerationParams& params) {
    if (allies.messages.empty()) return JudgeOutcome::Weak;
    PromptBundle prompt = render_judge(allies.messages);
    CompletionResponse response =
        run_prompt(backend, prompt, round_tag("judge", agent, round), params);
    return parse_judge_output(response.text);
}

MaliciousTurn act_malicious(Backend& backend, const Question& question,
                            const std::vector<Message>& observed, const AllyContext& allies,
                            AgentRole role, AgentId agent, int round, bool separate_judge,
                            const GenerationParams& params) {
    if (role == AgentRole::Benign) {
        throw std::invalid_argument("act_malicious called with a benign role");
    }

    MaliciousTurn turn;
    PromptBundle prompt;
    if (role == AgentRole::MaliciousIndependent) {
        prompt = render_malicious_independent(question, observed);
    } else {
        if (separate_judge && !allies.messages.empty()) {
            turn.judged = judge_allies(backend, allies, agent, round, params);
            turn.strategy = strategy_for(*turn.judged);
        }
        prompt = render_malicious_cooperative(question, observed, allies.messages, turn.judged);
    }

    CompletionResponse response =
        run_prompt(backend, prompt, round_tag("agent", agent, round), params);
    turn.message = make_message(agent, round, response, question);
    turn.message.off_target =
        !turn.message.answer.has_value() || *turn.message.answer != question.target_wrong;
    return turn;
}

}  // namespace starsim
