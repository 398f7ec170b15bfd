#include "starsim/harness/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "starsim/agents/agents.hpp"
#include "starsim/backend/scripted.hpp"
#include "starsim/core/voting.hpp"

namespace starsim {

namespace {

std::string fixed6(double value) {
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.6f", value);
    return buffer;
}

long long record_tokens(const UsageRecord& record) {
    return record.tokens_in + record.tokens_out;
}

std::string tag_prefix(const std::string& tag) {
    return tag.substr(0, tag.find(':'));
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

}  // namespace

std::vector<AgentRole> roles_for(const ExperimentConfig& config) {
    std::vector<AgentRole> roles(static_cast<size_t>(config.n_agents), AgentRole::Benign);
    if (config.attack_mode == AttackMode::None) return roles;
    AgentRole malicious = config.attack_mode == AttackMode::Independent
                              ? AgentRole::MaliciousIndependent
                              : AgentRole::MaliciousCooperative;
    for (AgentId id : config.malicious_ids) {
        roles[static_cast<size_t>(id)] = malicious;
    }
    return roles;
}

Topology topology_for(const ExperimentConfig& config) {
    if (config.topology == "tree") {
        return build_tree_topology(config.n_agents);
    }
    std::ifstream in(config.topology);
    if (!in) throw ConfigError("cannot open topology file " + config.topology);

    std::vector<std::pair<AgentId, AgentId>> edges;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream fields(line);
        AgentId a;
        AgentId b;
        if (!(fields >> a)) continue;  // blank or comment-only line
        if (!(fields >> b)) {
            throw ConfigError(config.topology + ":" + std::to_string(line_no) +
                              ": expected two agent ids");
        }
        edges.emplace_back(a, b);
    }
    try {
        return Topology(config.n_agents, std::move(edges));
    } catch (const std::invalid_argument& e) {
        throw ConfigError("topology file " + config.topology + ": " + e.what());
    }
}

std::unique_ptr<Backend> make_backend(const BackendSpec& spec) {
    if (spec.kind == "scripted") {
        if (spec.playbook_path.empty()) {
            throw ConfigError("scripted backend needs a playbook path");
        }
        return std::make_unique<ScriptedBackend>(ScriptedPlaybook::from_file(spec.playbook_path));
    }
    if (spec.kind == "live") {
        if (spec.live.base_url.empty()) throw ConfigError("live backend needs base_url");
        return std::make_unique<LiveBackend>(spec.live);
    }
    throw ConfigError("unknown backend kind \"" + spec.kind + "\"");
}

Transcript run_question(const ExperimentConfig& config, const Question& question,
                        Backend& backend) {
    config.validate();
    question.validate();

    const std::vector<AgentRole> roles = roles_for(config);
    const Topology topology = topology_for(config);
    const int n = config.n_agents;

    Transcript transcript;
    transcript.config_hash = config_hash(config);
    transcript.question = question;
    transcript.roles = roles;
    transcript.memories.resize(static_cast<size_t>(n));

    RecordingBackend recorder(backend);

    std::vector<Message> delivered_prev;  // previous round as observed downstream
    std::vector<Message> original_prev;   // previous round as spoken (ally context)
    std::vector<AgentId> exclusions;

    try {
        for (int t = 1; t <= config.rounds; ++t) {
            std::vector<Message> round_messages;
            round_messages.reserve(static_cast<size_t>(n));

            for (AgentId agent = 0; agent < n; ++agent) {
                std::vector<Message> observed;
                if (t > 1) {
                    const std::vector<AgentId>& hood = topology.neighbors(agent);
                    for (const Message& message : delivered_prev) {
                        if (std::binary_search(hood.begin(), hood.end(), message.agent)) {
                            observed.push_back(message);
                        }
                    }
                }

                Message message;
                AgentRole role = roles[static_cast<size_t>(agent)];
                if (role == AgentRole::Benign) {
                    message =
                        act_benign(recorder, question, observed, agent, t, config.generation);
                } else if (role == AgentRole::MaliciousIndependent) {
                    message = act_malicious(recorder, question, observed, AllyContext{}, role,
                                            agent, t, false, config.generation)
                                  .message;
                } else {
                    AllyContext allies =
                        assemble_ally_context(original_prev, config.malicious_ids, agent);
                    message = act_malicious(recorder, question, observed, allies, role, agent, t,
                                            config.separate_judge, config.generation)
                                  .message;
                }

                transcript.memories[static_cast<size_t>(agent)].push_back(
                    MemoryEntry{message, observed});
                round_messages.push_back(std::move(message));
            }
            transcript.rounds.push_back(round_messages);

            std::vector<Message> delivered = round_messages;
            if (config.defense == DefenseMode::Star) {
                DefenseReport report = run_defense_round(recorder, question, round_messages,
                                                         config.defense_config, exclusions);
                exclusions = config.defense_config.accumulate_exclusions ? report.exclusion_set
                                                                         : report.detected;
                for (Message& message : delivered) {
                    auto rectified = report.rectified.find(message.agent);
                    if (rectified != report.rectified.end()) {
                        message.raw = rectified->second;
                        message.reason = parse_reason(message.raw);
                        message.answer = parse_answer(message.raw, question.options);
                    }
                }
                transcript.defense_reports.push_back(std::move(report));
            }

            std::set<AgentId> excluded(exclusions.begin(), exclusions.end());
            transcript.per_round_votes.push_back(
                majority_vote(round_messages, excluded, question.options));

            delivered_prev = std::move(delivered);
            original_prev = std::move(round_messages);
        }
        transcript.final_vote = transcript.per_round_votes.back();
    } catch (const BackendError& e) {
        transcript.failed = true;
        transcript.error = e.what();
    }

    transcript.usage = recorder.records();
    return transcript;
}

RunMetrics compute_metrics(const std::vector<Transcript>& transcripts) {
    RunMetrics metrics;
    metrics.n = static_cast<int>(transcripts.size());

    int succeeded = 0;
    int truth_wins = 0;
    int target_wins = 0;
    int ties = 0;
    long long detected_malicious = 0;
    long long malicious_round_slots = 0;
    bool any_defense = false;
    std::vector<int> round_truth;
    std::vector<int> round_target;
    std::vector<int> round_runs;

    for (const Transcript& transcript : transcripts) {
        for (const UsageRecord& record : transcript.usage) {
            metrics.tokens_total += record_tokens(record);
            if (tag_prefix(record.tag) == "verifier") {
                metrics.tokens_defense += record_tokens(record);
            }
        }
        if (transcript.failed) {
            ++metrics.failures;
            continue;
        }
        ++succeeded;

        if (transcript.final_vote.winner == transcript.question.ground_truth) ++truth_wins;
        if (transcript.final_vote.winner == transcript.question.target_wrong) ++target_wins;
        if (transcript.final_vote.tie_broken) ++ties;

        for (size_t r = 0; r < transcript.per_round_votes.size(); ++r) {
            if (round_runs.size() <= r) {
                round_runs.resize(r + 1, 0);
                round_truth.resize(r + 1, 0);
                round_target.resize(r + 1, 0);
            }
            ++round_runs[r];
            char winner = transcript.per_round_votes[r].winner;
            if (winner == transcript.question.ground_truth) ++round_truth[r];
            if (winner == transcript.question.target_wrong) ++round_target[r];
        }

        if (!transcript.defense_reports.empty()) {
            any_defense = true;
            std::set<AgentId> malicious;
            for (size_t i = 0; i < transcript.roles.size(); ++i) {
                if (transcript.roles[i] != AgentRole::Benign) {
                    malicious.insert(static_cast<AgentId>(i));
                }
            }
            for (const DefenseReport& report : transcript.defense_reports) {
                malicious_round_slots += static_cast<long long>(malicious.size());
                for (AgentId agent : report.detected) {
                    if (malicious.count(agent) > 0) ++detected_malicious;
                }
            }
        }
    }

    if (succeeded > 0) {
        metrics.tsr = static_cast<double>(truth_wins) / succeeded;
        metrics.asr = static_cast<double>(target_wins) / succeeded;
        metrics.tie_rate = static_cast<double>(ties) / succeeded;
    }
    for (size_t r = 0; r < round_runs.size(); ++r) {
        double runs = round_runs[r] > 0 ? static_cast<double>(round_runs[r]) : 1.0;
        metrics.per_round_tsr.push_back(round_truth[r] / runs);
        metrics.per_round_asr.push_back(round_target[r] / runs);
    }
    if (any_defense && malicious_round_slots > 0) {
        metrics.detection_accuracy =
            static_cast<double>(detected_malicious) / static_cast<double>(malicious_round_slots);
    }
    return metrics;
}

std::string metrics_csv(const RunMetrics& metrics, const std::string& config_hash) {
    std::string detection =
        metrics.detection_accuracy.has_value() ? fixed6(*metrics.detection_accuracy) : "n/a";
    std::string csv =
        "config_hash,n,tsr,asr,detection_accuracy,tie_rate,failures,tokens_total,tokens_defense\n";
    csv += config_hash + "," + std::to_string(metrics.n) + "," + fixed6(metrics.tsr) + "," +
           fixed6(metrics.asr) + "," + detection + "," + fixed6(metrics.tie_rate) + "," +
           std::to_string(metrics.failures) + "," + std::to_string(metrics.tokens_total) + "," +
           std::to_string(metrics.tokens_defense) + "\n";
    return csv;
}

std::string plot_data_csv(const RunMetrics& metrics) {
    std::string csv = "round,tsr,asr\n";
    for (size_t r = 0; r < metrics.per_round_tsr.size(); ++r) {
        csv += std::to_string(r + 1) + "," + fixed6(metrics.per_round_tsr[r]) + "," +
               fixed6(metrics.per_round_asr[r]) + "\n";
    }
    return csv;
}

ExperimentResult run_experiment(const ExperimentConfig& config, Backend& backend) {
    config.validate();
    std::vector<DatasetRecord> records = load_dataset(config.dataset.path, config.dataset.format);
    int sample = config.dataset.sample_size == 0 ? static_cast<int>(records.size())
                                                 : config.dataset.sample_size;
    std::vector<Question> questions =
        sample_questions(records, sample, config.dataset.seed, config.dataset.target_rule);
    return run_experiment(config, questions, backend);
}

ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::vector<Question>& questions, Backend& backend) {
    config.validate();

    std::vector<Transcript> transcripts(questions.size());
    std::atomic<size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto work = [&] {
        while (true) {
            size_t index = next.fetch_add(1);
            if (index >= questions.size()) break;
            try {
                transcripts[index] = run_question(config, questions[index], backend);
            } catch (...) {
                std::lock_guard<std::mutex> hold(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };

    size_t workers = std::min(static_cast<size_t>(config.workers),
                              std::max<size_t>(questions.size(), 1));
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (std::thread& worker : pool) worker.join();
    }
    if (failure) std::rethrow_exception(failure);

    ExperimentResult result;
    result.metrics = compute_metrics(transcripts);
    result.transcripts = std::move(transcripts);

    std::filesystem::create_directories(config.output_dir);
    result.transcripts_path = config.output_dir + "/transcripts.jsonl";
    result.metrics_path = config.output_dir + "/metrics.csv";
    result.plot_path = config.output_dir + "/per_round.csv";

    std::string lines;
    for (const Transcript& transcript : result.transcripts) {
        lines += transcript_to_json_line(transcript);
        lines += '\n';
    }
    write_file(result.transcripts_path, lines);
    write_file(result.metrics_path, metrics_csv(result.metrics, config_hash(config)));
    write_file(result.plot_path, plot_data_csv(result.metrics));
    return result;
}

}  // namespace starsim
