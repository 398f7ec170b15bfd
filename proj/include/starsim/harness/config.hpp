#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "starsim/backend/backend.hpp"
#include "starsim/backend/live.hpp"
#include "starsim/core/types.hpp"
#include "starsim/datasets/datasets.hpp"
#include "starsim/star/defense.hpp"

namespace starsim {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class AttackMode { None, Independent, Cooperative };
enum class DefenseMode { None, Star };

AttackMode attack_mode_from_string(const std::string& name);
DefenseMode defense_mode_from_string(const std::string& name);
std::string to_string(AttackMode mode);
std::string to_string(DefenseMode mode);

struct DatasetSpec {
    std::string path;
    DatasetFormat format = DatasetFormat::Normalized;
    // 0 means "all records"; otherwise sampled without replacement.
    int sample_size = 0;
    std::uint64_t seed = 0;
    TargetRule target_rule = TargetRule::FixedOffset;
};

/// Which Backend implementation to construct, with its settings.
struct BackendSpec {
    std::string kind = "scripted";  // "scripted" | "live"
    std::string playbook_path;      // scripted only
    LiveBackendConfig live;         // live only
};

/// Everything a run needs, loadable from a JSON file. Defaults mirror the
/// reference setup: 5 agents on a tree, agents 1 and 4 malicious, 3 rounds.
struct ExperimentConfig {
    int n_agents = 5;
    std::vector<AgentId> malicious_ids = {1, 4};
    AttackMode attack_mode = AttackMode::Cooperative;
    DefenseMode defense = DefenseMode::None;
    int rounds = 3;
    // "tree" for the built-in balanced binary tree, otherwise the path of an
    // edge-list file ("i j" per line, '#' comments).
    std::string topology = "tree";
    BackendSpec backend;
    DefenseConfig defense_config;
    // Cooperative attackers: explicit judge call feeding a strategy hint
    // (true) vs. leaving strategy choice inside the attacker prompt (false).
    bool separate_judge = true;
    GenerationParams generation;
    DatasetSpec dataset;
    std::string output_dir = "out";
    // Questions processed concurrently.
    int workers = 1;

    // Throws ConfigError on any inconsistency.
    void validate() const;
};

// Parses/serializes the JSON config document. Serialization is canonical:
// every field present, keys sorted, so serialize-parse-serialize is stable.
ExperimentConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const ExperimentConfig& config);
ExperimentConfig load_config(const std::string& path);

/// 16-hex-digit FNV-1a hash of the canonical serialization, with operational
/// fields (workers, output_dir) pinned so they do not perturb it; stamps
/// transcripts and metrics rows so artifacts can be traced to the experiment
/// that produced them.
std::string config_hash(const ExperimentConfig& config);

}  // namespace starsim
