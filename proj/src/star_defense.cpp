#include "starsim/star/defense.hpp"

#include <algorithm>
#include <optional>
#include <stdexcept>

#include "starsim/prompting/parsers.hpp"
#include "starsim/prompting/templates.hpp"
#include "starsim/star/sentences.hpp"

namespace starsim {

double suspicion_score(const std::vector<SentenceVerdict>& verdicts) {
    double score = 0.0;
    for (const SentenceVerdict& verdict : verdicts) {
        if (!verdict.factual) score += verdict.confidence;
    }
    return score;
}

std::vector<AgentId> detect(const std::vector<std::pair<AgentId, double>>& scores,
                            double threshold, int per_round_cap) {
    std::vector<std::pair<AgentId, double>> flagged;
    for (const auto& entry : scores) {
        if (entry.second > threshold) flagged.push_back(entry);
    }
    std::stable_sort(flagged.begin(), flagged.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (per_round_cap >= 0 && flagged.size() > static_cast<size_t>(per_round_cap)) {
        flagged.resize(static_cast<size_t>(per_round_cap));
    }
    std::vector<AgentId> detected;
    detected.reserve(flagged.size());
    for (const auto& entry : flagged) detected.push_back(entry.first);
    std::sort(detected.begin(), detected.end());
    return detected;
}

std::string rectify(const std::vector<SentenceVerdict>& verdicts) {
    bool any_flagged = std::any_of(verdicts.begin(), verdicts.end(),
                                   [](const SentenceVerdict& v) { return !v.factual; });
    if (!any_flagged) {
        throw std::invalid_argument("rectify called with no non-factual sentence");
    }
    std::string rebuilt;
    for (const SentenceVerdict& verdict : verdicts) {
        std::string piece;
        if (verdict.factual) {
            piece = verdict.sentence;
        } else if (verdict.correction.has_value()) {
            piece = "[Corrected] " + verdict.correction->correct_assertion +
                    " (The original claim — " + verdict.correction->misleading_claim +
                    " — was flagged as misleading.)";
        } else {
            piece = "[Removed: unverified claim.]";
        }
        if (piece.empty()) continue;
        if (!rebuilt.empty()) rebuilt += ' ';
        rebuilt += piece;
    }
    return rebuilt;
}

AgentSuspicion verify_message(Backend& backend, const Question& question, const Message& message,
                              const DefenseConfig& config) {
    AgentSuspicion result;
    result.agent = message.agent;

    std::vector<std::string> sentences = split_sentences(message.raw);
    if (sentences.empty()) return result;

    PromptBundle prompt = render_verifier(message.agent, question, sentences);
    CompletionRequest request;
    request.system_prompt = prompt.system;
    request.user_prompt = prompt.user;
    request.temperature = config.generation.temperature;
    request.max_tokens = config.generation.max_tokens;
    request.tag = "verifier:" + std::to_string(message.agent) + ":round:" +
                  std::to_string(message.round);

    int attempts = config.retry_verifier_once ? 2 : 1;
    std::optional<std::vector<SentenceVerdict>> verdicts;
    for (int attempt = 0; attempt < attempts && !verdicts.has_value(); ++attempt) {
        CompletionResponse response = backend.complete(request);
        try {
            verdicts = parse_verifier_output(response.text, static_cast<int>(sentences.size()));
        } catch (const MissingMarkers&) {
            // fall through to the retry, then to fail-open
        }
    }
    if (!verdicts.has_value()) {
        result.verification_failed = true;
        verdicts.emplace(sentences.size());
        for (size_t k = 0; k < sentences.size(); ++k) {
            (*verdicts)[k].index = static_cast<int>(k) + 1;
            (*verdicts)[k].factual = true;
            (*verdicts)[k].confidence = 0.0;
        }
    }
    for (size_t k = 0; k < sentences.size(); ++k) {
        (*verdicts)[k].sentence = sentences[k];
    }
    result.verdicts = std::move(*verdicts);
    result.score = suspicion_score(result.verdicts);
    result.flagged = !result.verification_failed && result.score > config.threshold;
    return result;
}

DefenseReport run_defense_round(Backend& backend, const Question& question,
                                const std::vector<Message>& round_messages,
                                const DefenseConfig& config,
                                const std::vector<AgentId>& prior_exclusions) {
    DefenseReport report;
    if (!round_messages.empty()) report.round = round_messages.front().round;

    std::vector<std::pair<AgentId, double>> scores;
    for (const Message& message : round_messages) {
        AgentSuspicion suspicion = verify_message(backend, question, message, config);
        if (!suspicion.verification_failed) {
            scores.emplace_back(suspicion.agent, suspicion.score);
        }
        report.suspicion.push_back(std::move(suspicion));
    }

    report.detected = detect(scores, config.threshold, config.per_round_cap);
    for (AgentId agent : report.detected) {
        for (AgentSuspicion& suspicion : report.suspicion) {
            if (suspicion.agent == agent) {
                suspicion.detected = true;
                report.rectified[agent] = rectify(suspicion.verdicts);
            }
        }
    }

    report.exclusion_set = prior_exclusions;
    report.exclusion_set.insert(report.exclusion_set.end(), report.detected.begin(),
                                report.detected.end());
    std::sort(report.exclusion_set.begin(), report.exclusion_set.end());
    report.exclusion_set.erase(
        std::unique(report.exclusion_set.begin(), report.exclusion_set.end()),
        report.exclusion_set.end());
    return report;
}

}  // namespace starsim
