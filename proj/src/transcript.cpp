#include "starsim/harness/transcript.hpp"

#include <fstream>

#include "json.hpp"

namespace starsim {

namespace {

using nlohmann::json;

json message_to_json(const Message& message) {
    json object{
        {"agent", message.agent},
        {"answer", nullptr},
        {"off_target", message.off_target},
        {"raw", message.raw},
        {"reason", message.reason},
        {"round", message.round},
        {"tokens_in", message.tokens_in},
        {"tokens_out", message.tokens_out},
    };
    if (message.answer.has_value()) object["answer"] = std::string(1, *message.answer);
    return object;
}

Message message_from_json(const json& object) {
    Message message;
    message.agent = object.at("agent").get<AgentId>();
    message.round = object.at("round").get<int>();
    message.reason = object.at("reason").get<std::string>();
    message.raw = object.at("raw").get<std::string>();
    message.tokens_in = object.at("tokens_in").get<long long>();
    message.tokens_out = object.at("tokens_out").get<long long>();
    message.off_target = object.at("off_target").get<bool>();
    if (!object.at("answer").is_null()) {
        std::string answer = object.at("answer").get<std::string>();
        if (answer.size() == 1) message.answer = answer[0];
    }
    return message;
}

json vote_to_json(const VoteResult& vote) {
    json tally = json::object();
    for (const auto& [label, count] : vote.tally) tally[std::string(1, label)] = count;
    return json{
        {"excluded", vote.excluded},
        {"tally", tally},
        {"tie_broken", vote.tie_broken},
        {"winner", std::string(1, vote.winner)},
    };
}

VoteResult vote_from_json(const json& object) {
    VoteResult vote;
    std::string winner = object.at("winner").get<std::string>();
    vote.winner = winner.empty() ? '?' : winner[0];
    for (const auto& [label, count] : object.at("tally").items()) {
        if (!label.empty()) vote.tally.emplace_back(label[0], count.get<int>());
    }
    vote.excluded = object.at("excluded").get<std::vector<AgentId>>();
    vote.tie_broken = object.at("tie_broken").get<bool>();
    return vote;
}

json question_to_json(const Question& question) {
    json options = json::object();
    for (const Option& option : question.options) {
        options[std::string(1, option.label)] = option.text;
    }
    return json{
        {"ground_truth", std::string(1, question.ground_truth)},
        {"id", question.id},
        {"options", options},
        {"stem", question.stem},
        {"target_wrong", std::string(1, question.target_wrong)},
    };
}

Question question_from_json(const json& object) {
    Question question;
    question.id = object.at("id").get<std::string>();
    question.stem = object.at("stem").get<std::string>();
    for (const auto& [label, text] : object.at("options").items()) {
        if (!label.empty()) question.options.push_back({label[0], text.get<std::string>()});
    }
    question.ground_truth = object.at("ground_truth").get<std::string>().at(0);
    question.target_wrong = object.at("target_wrong").get<std::string>().at(0);
    return question;
}

json verdict_to_json(const SentenceVerdict& verdict) {
    json object{
        {"confidence", verdict.confidence},
        {"correction", nullptr},
        {"factual", verdict.factual},
        {"index", verdict.index},
        {"sentence", verdict.sentence},
    };
    if (verdict.correction.has_value()) {
        object["correction"] = json{{"correct_assertion", verdict.correction->correct_assertion},
                                    {"misleading_claim", verdict.correction->misleading_claim}};
    }
    return object;
}

SentenceVerdict verdict_from_json(const json& object) {
    SentenceVerdict verdict;
    verdict.index = object.at("index").get<int>();
    verdict.sentence = object.at("sentence").get<std::string>();
    verdict.factual = object.at("factual").get<bool>();
    verdict.confidence = object.at("confidence").get<double>();
    if (!object.at("correction").is_null()) {
        Correction correction;
        correction.misleading_claim =
            object.at("correction").at("misleading_claim").get<std::string>();
        correction.correct_assertion =
            object.at("correction").at("correct_assertion").get<std::string>();
        verdict.correction = std::move(correction);
    }
    return verdict;
}

json suspicion_to_json(const AgentSuspicion& suspicion) {
    json verdicts = json::array();
    for (const SentenceVerdict& verdict : suspicion.verdicts) {
        verdicts.push_back(verdict_to_json(verdict));
    }
    return json{
        {"agent", suspicion.agent},
        {"detected", suspicion.detected},
        {"flagged", suspicion.flagged},
        {"score", suspicion.score},
        {"verification_failed", suspicion.verification_failed},
        {"verdicts", verdicts},
    };
}

AgentSuspicion suspicion_from_json(const json& object) {
    AgentSuspicion suspicion;
    suspicion.agent = object.at("agent").get<AgentId>();
    suspicion.score = object.at("score").get<double>();
    suspicion.flagged = object.at("flagged").get<bool>();
    suspicion.detected = object.at("detected").get<bool>();
    suspicion.verification_failed = object.at("verification_failed").get<bool>();
    for (const json& verdict : object.at("verdicts")) {
        suspicion.verdicts.push_back(verdict_from_json(verdict));
    }
    return suspicion;
}

json defense_report_to_json(const DefenseReport& report) {
    json suspicion = json::array();
    for (const AgentSuspicion& entry : report.suspicion) {
        suspicion.push_back(suspicion_to_json(entry));
    }
    json rectified = json::object();
    for (const auto& [agent, text] : report.rectified) {
        rectified[std::to_string(agent)] = text;
    }
    return json{
        {"detected", report.detected},   {"exclusion_set", report.exclusion_set},
        {"rectified", rectified},        {"round", report.round},
        {"suspicion", suspicion},
    };
}

DefenseReport defense_report_from_json(const json& object) {
    DefenseReport report;
    report.round = object.at("round").get<int>();
    for (const json& entry : object.at("suspicion")) {
        report.suspicion.push_back(suspicion_from_json(entry));
    }
    report.detected = object.at("detected").get<std::vector<AgentId>>();
    report.exclusion_set = object.at("exclusion_set").get<std::vector<AgentId>>();
    for (const auto& [agent, text] : object.at("rectified").items()) {
        report.rectified[std::stoi(agent)] = text.get<std::string>();
    }
    return report;
}

json memory_entry_to_json(const MemoryEntry& entry) {
    json observed = json::array();
    for (const Message& message : entry.observed) observed.push_back(message_to_json(message));
    return json{{"observed", observed}, {"own", message_to_json(entry.own)}};
}

MemoryEntry memory_entry_from_json(const json& object) {
    MemoryEntry entry;
    entry.own = message_from_json(object.at("own"));
    for (const json& message : object.at("observed")) {
        entry.observed.push_back(message_from_json(message));
    }
    return entry;
}

json usage_to_json(const UsageRecord& record) {
    return json{{"tag", record.tag},
                {"tokens_in", record.tokens_in},
                {"tokens_out", record.tokens_out}};
}

UsageRecord usage_from_json(const json& object) {
    UsageRecord record;
    record.tag = object.at("tag").get<std::string>();
    record.tokens_in = object.at("tokens_in").get<long long>();
    record.tokens_out = object.at("tokens_out").get<long long>();
    return record;
}

}  // namespace

std::string transcript_to_json_line(const Transcript& transcript) {
    json roles = json::array();
    for (AgentRole role : transcript.roles) roles.push_back(to_string(role));

    json rounds = json::array();
    for (const std::vector<Message>& round : transcript.rounds) {
        json messages = json::array();
        for (const Message& message : round) messages.push_back(message_to_json(message));
        rounds.push_back(std::move(messages));
    }

    json memories = json::array();
    for (const std::vector<MemoryEntry>& history : transcript.memories) {
        json entries = json::array();
        for (const MemoryEntry& entry : history) entries.push_back(memory_entry_to_json(entry));
        memories.push_back(std::move(entries));
    }

    json defense_reports = json::array();
    for (const DefenseReport& report : transcript.defense_reports) {
        defense_reports.push_back(defense_report_to_json(report));
    }

    json votes = json::array();
    for (const VoteResult& vote : transcript.per_round_votes) votes.push_back(vote_to_json(vote));

    json usage = json::array();
    for (const UsageRecord& record : transcript.usage) usage.push_back(usage_to_json(record));

    json object{
        {"config_hash", transcript.config_hash},
        {"defense_reports", defense_reports},
        {"error", transcript.error},
        {"failed", transcript.failed},
        {"final_vote", vote_to_json(transcript.final_vote)},
        {"memories", memories},
        {"per_round_votes", votes},
        {"question", question_to_json(transcript.question)},
        {"roles", roles},
        {"rounds", rounds},
        {"schema_version", Transcript::kSchemaVersion},
        {"usage", usage},
    };
    return object.dump();
}

Transcript transcript_from_json_line(const std::string& line) {
    json object;
    try {
        object = json::parse(line);
    } catch (const json::exception& e) {
        throw TranscriptError(std::string("transcript line is not valid JSON: ") + e.what());
    }

    try {
        int version = object.at("schema_version").get<int>();
        if (version != Transcript::kSchemaVersion) {
            throw TranscriptError("unsupported transcript schema_version " +
                                  std::to_string(version));
        }

        Transcript transcript;
        transcript.config_hash = object.at("config_hash").get<std::string>();
        transcript.question = question_from_json(object.at("question"));
        for (const json& role : object.at("roles")) {
            transcript.roles.push_back(agent_role_from_string(role.get<std::string>()));
        }
        for (const json& round : object.at("rounds")) {
            std::vector<Message> messages;
            for (const json& message : round) messages.push_back(message_from_json(message));
            transcript.rounds.push_back(std::move(messages));
        }
        for (const json& history : object.at("memories")) {
            std::vector<MemoryEntry> entries;
            for (const json& entry : history) entries.push_back(memory_entry_from_json(entry));
            transcript.memories.push_back(std::move(entries));
        }
        for (const json& report : object.at("defense_reports")) {
            transcript.defense_reports.push_back(defense_report_from_json(report));
        }
        for (const json& vote : object.at("per_round_votes")) {
            transcript.per_round_votes.push_back(vote_from_json(vote));
        }
        transcript.final_vote = vote_from_json(object.at("final_vote"));
        for (const json& record : object.at("usage")) {
            transcript.usage.push_back(usage_from_json(record));
        }
        transcript.failed = object.at("failed").get<bool>();
        transcript.error = object.at("error").get<std::string>();
        return transcript;
    } catch (const json::exception& e) {
        throw TranscriptError(std::string("transcript line is missing fields: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw TranscriptError(std::string("transcript line has bad values: ") + e.what());
    }
}

std::vector<Transcript> load_transcripts(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw TranscriptError("cannot open transcripts file " + path);

    std::vector<Transcript> transcripts;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            transcripts.push_back(transcript_from_json_line(line));
        } catch (const TranscriptError& e) {
            throw TranscriptError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return transcripts;
}

}  // namespace starsim
