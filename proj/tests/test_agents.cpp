#include <algorithm>
#include <memory>

#include "doctest.h"
#include "starsim/agents/agents.hpp"
#include "starsim/backend/backend.hpp"
#include "starsim/backend/scripted.hpp"
#include "starsim/prompting/templates.hpp"

using namespace starsim;

namespace {

Question abcd_question() {
    Question q;
    q.id = "q1";
    q.stem = "Which planet is known as the Red Planet?";
    q.options = {{'A', "Mars"}, {'B', "Venus"}, {'C', "Jupiter"}, {'D', "Mercury"}};
    q.ground_truth = 'A';
    q.target_wrong = 'B';
    return q;
}

Message prior_message(AgentId agent, int round, std::string raw) {
    Message m;
    m.agent = agent;
    m.round = round;
    m.raw = std::move(raw);
    return m;
}

// Every agent/judge call resolves through this playbook; a tag without an
// entry would throw PlaybookMiss and fail the test loudly.
ScriptedPlaybook scripted_playbook() {
    return ScriptedPlaybook::from_json_text(R"([
      {"tag_pattern": "judge:*", "response": "Strong"},
      {"tag_pattern": "agent:*", "contains": "convince other agents",
       "response": "<REASON>: Iron oxide is a red herring; Venus glows red at dusk.\n<ANSWER>: B"},
      {"tag_pattern": "agent:*",
       "response": "<REASON>: Iron oxide dust gives Mars its color.\n<ANSWER>: A"}
    ])");
}

int calls_tagged(const ScriptedBackend& backend, const std::string& prefix) {
    const auto& log = backend.call_log();
    return static_cast<int>(std::count_if(log.begin(), log.end(), [&](const std::string& tag) {
        return tag.rfind(prefix, 0) == 0;
    }));
}

}  // namespace

TEST_CASE("ally context keeps only other malicious agents, in index order") {
    std::vector<Message> round_messages = {
        prior_message(4, 1, "ally four"),
        prior_message(0, 1, "benign zero"),
        prior_message(1, 1, "self"),
        prior_message(2, 1, "benign two"),
    };

    AllyContext for_one = assemble_ally_context(round_messages, {1, 4}, 1);
    REQUIRE(for_one.messages.size() == 1);
    CHECK(for_one.messages[0].agent == 4);
    CHECK(for_one.round == 1);

    AllyContext for_four = assemble_ally_context(round_messages, {1, 2, 4}, 4);
    REQUIRE(for_four.messages.size() == 2);
    CHECK(for_four.messages[0].agent == 1);
    CHECK(for_four.messages[1].agent == 2);

    // A lone attacker has no allies.
    AllyContext lone = assemble_ally_context(round_messages, {1}, 1);
    CHECK(lone.messages.empty());
}

TEST_CASE("benign turn is exactly one tagged call with a parsed answer") {
    ScriptedBackend backend(scripted_playbook());
    Message msg = act_benign(backend, abcd_question(), {}, 3, 2);

    REQUIRE(backend.call_log().size() == 1);
    CHECK(backend.call_log()[0] == "agent:3:round:2");
    CHECK(msg.agent == 3);
    CHECK(msg.round == 2);
    CHECK(msg.answer == 'A');
    CHECK(msg.reason == "Iron oxide dust gives Mars its color.");
    CHECK(!msg.off_target);  // meaningless for benign agents, stays false
    CHECK(msg.tokens_in > 0);
    CHECK(msg.tokens_out == 10);  // whitespace tokens of the scripted reply
}

TEST_CASE("independent attacker makes one call and never consults a judge") {
    ScriptedBackend backend(scripted_playbook());
    std::vector<Message> observed = {prior_message(0, 1, "<REASON>: r\n<ANSWER>: A")};
    AllyContext allies = assemble_ally_context(observed, {1, 4}, 1);  // non-empty context

    MaliciousTurn turn = act_malicious(backend, abcd_question(), observed, allies,
                                       AgentRole::MaliciousIndependent, 1, 2,
                                       /*separate_judge=*/true);

    CHECK(backend.call_log().size() == 1);
    CHECK(calls_tagged(backend, "judge:") == 0);
    CHECK(!turn.judged.has_value());
    CHECK(!turn.strategy.has_value());
    CHECK(turn.message.answer == 'B');
    CHECK(!turn.message.off_target);
}

TEST_CASE("cooperative attacker budget: one call in round one, judge plus response later") {
    Question q = abcd_question();

    // Round one: no ally context exists yet, so no judge call is spent.
    {
        ScriptedBackend backend(scripted_playbook());
        MaliciousTurn turn = act_malicious(backend, q, {}, AllyContext{},
                                           AgentRole::MaliciousCooperative, 1, 1,
                                           /*separate_judge=*/true);
        CHECK(backend.call_log().size() == 1);
        CHECK(backend.call_log()[0] == "agent:1:round:1");
        // No allies means nothing was judged; the turn records no strategy.
        CHECK(!turn.judged.has_value());
        CHECK(!turn.strategy.has_value());
    }

    // Later rounds with allies: judge first, then the coordination prompt.
    {
        ScriptedBackend backend(scripted_playbook());
        std::vector<Message> prev = {
            prior_message(4, 1, "<REASON>: Venus is red.\n<ANSWER>: B"),
            prior_message(0, 1, "<REASON>: Mars is red.\n<ANSWER>: A"),
        };
        AllyContext allies = assemble_ally_context(prev, {1, 4}, 1);
        MaliciousTurn turn = act_malicious(backend, q, prev, allies,
                                           AgentRole::MaliciousCooperative, 1, 2,
                                           /*separate_judge=*/true);
        REQUIRE(backend.call_log().size() == 2);
        CHECK(backend.call_log()[0] == "judge:1:round:2");
        CHECK(backend.call_log()[1] == "agent:1:round:2");
        REQUIRE(turn.judged.has_value());
        CHECK(*turn.judged == JudgeOutcome::Strong);
        CHECK(*turn.strategy == AttackStrategy::Reinforcement);
    }

    // Single-prompt mode folds the decision into one call even with allies.
    {
        ScriptedBackend backend(scripted_playbook());
        std::vector<Message> prev = {prior_message(4, 1, "<REASON>: x\n<ANSWER>: B")};
        AllyContext allies = assemble_ally_context(prev, {1, 4}, 1);
        MaliciousTurn turn = act_malicious(backend, q, prev, allies,
                                           AgentRole::MaliciousCooperative, 1, 2,
                                           /*separate_judge=*/false);
        CHECK(backend.call_log().size() == 1);
        CHECK(!turn.judged.has_value());
        CHECK(!turn.strategy.has_value());
    }
}

TEST_CASE("judge_allies: empty context is Weak without spending a call") {
    ScriptedBackend backend(scripted_playbook());
    CHECK(judge_allies(backend, AllyContext{}, 1, 3) == JudgeOutcome::Weak);
    CHECK(backend.call_log().empty());
}

TEST_CASE("judge_allies: unparseable verdicts default to Weak") {
    ScriptedBackend backend(ScriptedPlaybook::from_json_text(R"([
      {"tag_pattern": "judge:*", "response": "I cannot decide between the two."}
    ])"));
    AllyContext allies;
    allies.round = 1;
    allies.messages = {prior_message(4, 1, "<REASON>: x\n<ANSWER>: B")};
    CHECK(judge_allies(backend, allies, 1, 2) == JudgeOutcome::Weak);
    CHECK(backend.call_log().size() == 1);
}

TEST_CASE("off_target flags drift from the scripted target answer") {
    // Attacker model wanders off to C: the turn is recorded but flagged.
    ScriptedBackend backend(ScriptedPlaybook::from_json_text(R"([
      {"tag_pattern": "agent:*", "response": "<REASON>: hedging\n<ANSWER>: C"}
    ])"));
    MaliciousTurn turn = act_malicious(backend, abcd_question(), {}, AllyContext{},
                                       AgentRole::MaliciousIndependent, 1, 1,
                                       /*separate_judge=*/true);
    CHECK(turn.message.answer == 'C');
    CHECK(turn.message.off_target);

    // No parseable answer at all also counts as off target.
    ScriptedBackend mute(ScriptedPlaybook::from_json_text(R"([
      {"tag_pattern": "agent:*", "response": "I refuse to answer."}
    ])"));
    MaliciousTurn silent = act_malicious(mute, abcd_question(), {}, AllyContext{},
                                         AgentRole::MaliciousIndependent, 1, 1, true);
    CHECK(!silent.message.answer.has_value());
    CHECK(silent.message.off_target);
}

TEST_CASE("act_malicious rejects a benign role") {
    ScriptedBackend backend(scripted_playbook());
    CHECK_THROWS_AS(act_malicious(backend, abcd_question(), {}, AllyContext{}, AgentRole::Benign,
                                  0, 1, true),
                    std::invalid_argument);
}

TEST_CASE("first-round prompts carry the no-views sentinel through the playbook gate") {
    // An entry gated on the sentinel matches, proving the prompt the backend
    // received rendered it.
    ScriptedBackend backend(ScriptedPlaybook::from_json_text(R"([
      {"tag_pattern": "agent:*", "contains": "No other views yet.",
       "response": "<REASON>: fresh start\n<ANSWER>: A"},
      {"tag_pattern": "agent:*", "response": "<REASON>: stale\n<ANSWER>: D"}
    ])"));
    Message first = act_benign(backend, abcd_question(), {}, 0, 1);
    CHECK(first.answer == 'A');

    std::vector<Message> observed = {prior_message(2, 1, "<REASON>: r\n<ANSWER>: D")};
    Message second = act_benign(backend, abcd_question(), observed, 0, 2);
    CHECK(second.answer == 'D');
}

TEST_CASE("generation params flow through to the backend request") {
    // RecordingBackend captures usage; the scripted backend echoes tokens, so
    // a distinct max_tokens cannot change behavior here — instead check via a
    // params-sensitive fake.
    struct Capture : Backend {
        GenerationParams seen;
        CompletionResponse complete(const CompletionRequest& request) override {
            seen.temperature = request.temperature;
            seen.max_tokens = request.max_tokens;
            CompletionResponse r;
            r.text = "<REASON>: ok\n<ANSWER>: A";
            r.tokens_in = 1;
            r.tokens_out = 1;
            return r;
        }
    } capture;

    GenerationParams params;
    params.temperature = 0.7;
    params.max_tokens = 256;
    act_benign(capture, abcd_question(), {}, 0, 1, params);
    CHECK(capture.seen.temperature == 0.7);
    CHECK(capture.seen.max_tokens == 256);
}
