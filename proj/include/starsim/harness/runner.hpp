#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "starsim/core/topology.hpp"
#include "starsim/harness/config.hpp"
#include "starsim/harness/transcript.hpp"

namespace starsim {

/// Aggregate results over one run's transcripts. Failed questions count in
/// `failures` and are excluded from every rate's denominator; token totals
/// cover all questions, failed included.
struct RunMetrics {
    int n = 0;  // transcripts considered, failed included
    int failures = 0;
    double tsr = 0.0;  // final winner = ground truth
    double asr = 0.0;  // final winner = target wrong answer
    // Correctly detected malicious agents over (malicious x defended rounds);
    // absent when no round ran the defense.
    std::optional<double> detection_accuracy;
    std::vector<double> per_round_tsr;
    std::vector<double> per_round_asr;
    double tie_rate = 0.0;
    long long tokens_total = 0;    // tokens_in + tokens_out, all calls
    long long tokens_defense = 0;  // verifier-tagged calls only

    bool operator==(const RunMetrics&) const = default;
};

// Per-agent roles implied by the config (attack mode + malicious ids).
std::vector<AgentRole> roles_for(const ExperimentConfig& config);

// The built-in tree or the config's edge-list file. Throws ConfigError.
Topology topology_for(const ExperimentConfig& config);

// Constructs the configured backend. Throws ConfigError on a bad spec.
std::unique_ptr<Backend> make_backend(const BackendSpec& spec);

/// Runs the full T-round discussion for one question: per-role agent turns,
/// optional per-round defense with rectified re-delivery, per-round vote
/// probes, and the final trust-aware vote. Backend failures mark the
/// transcript failed instead of propagating.
Transcript run_question(const ExperimentConfig& config, const Question& question,
                        Backend& backend);

// Pure fold over transcripts; replayable from persisted JSONL byte-for-byte.
RunMetrics compute_metrics(const std::vector<Transcript>& transcripts);

// CSV renderings (header + rows, '\n' line ends, fixed 6-decimal floats).
std::string metrics_csv(const RunMetrics& metrics, const std::string& config_hash);
std::string plot_data_csv(const RunMetrics& metrics);

struct ExperimentResult {
    RunMetrics metrics;
    std::vector<Transcript> transcripts;
    std::string transcripts_path;
    std::string metrics_path;
    std::string plot_path;
};

/// Samples questions per the config's dataset spec and runs them with bounded
/// concurrency, then writes transcripts.jsonl, metrics.csv and per_round.csv
/// into the output directory. Output bytes depend only on config + playbook
/// (and the live model's replies, when live).
ExperimentResult run_experiment(const ExperimentConfig& config, Backend& backend);

// Same, with the question list supplied directly (no dataset loading).
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::vector<Question>& questions, Backend& backend);

}  // namespace starsim
