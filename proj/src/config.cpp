#include "starsim/harness/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace starsim {

namespace {

using nlohmann::json;

// Settings with get<>() mismatches or unknown enum names should all surface
// as ConfigError, keyed by where in the document they sit.
template <typename T>
T field(const json& object, const std::string& key, const T& fallback) {
    if (!object.contains(key)) return fallback;
    try {
        return object.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config field \"" + key + "\": " + e.what());
    }
}

json dataset_to_json(const DatasetSpec& dataset) {
    return json{
        {"format", to_string(dataset.format)},     {"path", dataset.path},
        {"sample_size", dataset.sample_size},      {"seed", dataset.seed},
        {"target_rule", to_string(dataset.target_rule)},
    };
}

json backend_to_json(const BackendSpec& backend) {
    return json{
        {"api_key_env", backend.live.api_key_env},
        {"base_url", backend.live.base_url},
        {"concurrency", backend.live.concurrency},
        {"connect_timeout_s", backend.live.connect_timeout_s},
        {"kind", backend.kind},
        {"model", backend.live.model},
        {"playbook", backend.playbook_path},
        {"read_timeout_s", backend.live.read_timeout_s},
        {"retry_backoff_ms", backend.live.retry_backoff_ms},
        {"retry_budget", backend.live.retry_budget},
    };
}

json defense_to_json(const DefenseConfig& defense) {
    return json{
        {"accumulate_exclusions", defense.accumulate_exclusions},
        {"per_round_cap", defense.per_round_cap},
        {"retry_verifier_once", defense.retry_verifier_once},
        {"threshold", defense.threshold},
    };
}

}  // namespace

AttackMode attack_mode_from_string(const std::string& name) {
    if (name == "none") return AttackMode::None;
    if (name == "independent") return AttackMode::Independent;
    if (name == "cooperative") return AttackMode::Cooperative;
    throw ConfigError("unknown attack_mode \"" + name + "\"");
}

DefenseMode defense_mode_from_string(const std::string& name) {
    if (name == "none") return DefenseMode::None;
    if (name == "star") return DefenseMode::Star;
    throw ConfigError("unknown defense \"" + name + "\"");
}

std::string to_string(AttackMode mode) {
    switch (mode) {
        case AttackMode::None: return "none";
        case AttackMode::Independent: return "independent";
        case AttackMode::Cooperative: return "cooperative";
    }
    return "none";
}

std::string to_string(DefenseMode mode) {
    return mode == DefenseMode::Star ? "star" : "none";
}

void ExperimentConfig::validate() const {
    if (n_agents < 1) throw ConfigError("n_agents must be >= 1");
    if (rounds < 1) throw ConfigError("rounds must be >= 1");
    if (workers < 1) throw ConfigError("workers must be >= 1");

    std::set<AgentId> seen;
    for (AgentId id : malicious_ids) {
        if (id < 0 || id >= n_agents) {
            throw ConfigError("malicious id " + std::to_string(id) + " outside 0.." +
                              std::to_string(n_agents - 1));
        }
        if (!seen.insert(id).second) {
            throw ConfigError("duplicate malicious id " + std::to_string(id));
        }
    }
    if (attack_mode != AttackMode::None && malicious_ids.empty()) {
        throw ConfigError("attack_mode set but malicious_ids is empty");
    }

    if (defense_config.threshold < 0.0) throw ConfigError("defense threshold must be >= 0");
    if (defense_config.per_round_cap < 0) throw ConfigError("per_round_cap must be >= 0");

    if (backend.kind != "scripted" && backend.kind != "live") {
        throw ConfigError("backend kind must be \"scripted\" or \"live\", got \"" + backend.kind +
                          "\"");
    }
    if (backend.kind == "live" && backend.live.base_url.empty()) {
        throw ConfigError("live backend needs base_url");
    }
    if (dataset.sample_size < 0) throw ConfigError("sample_size must be >= 0");
    if (generation.max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
    if (generation.temperature < 0.0) throw ConfigError("temperature must be >= 0");
}

ExperimentConfig config_from_json_text(const std::string& text) {
    json object;
    try {
        object = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!object.is_object()) throw ConfigError("config root must be a JSON object");

    ExperimentConfig defaults;
    ExperimentConfig config;
    config.n_agents = field(object, "n_agents", defaults.n_agents);
    config.malicious_ids = field(object, "malicious_ids", defaults.malicious_ids);
    config.attack_mode =
        attack_mode_from_string(field<std::string>(object, "attack_mode", "cooperative"));
    config.defense = defense_mode_from_string(field<std::string>(object, "defense", "none"));
    config.rounds = field(object, "rounds", defaults.rounds);
    config.topology = field(object, "topology", defaults.topology);
    config.separate_judge = field(object, "separate_judge", defaults.separate_judge);
    config.output_dir = field(object, "output_dir", defaults.output_dir);
    config.workers = field(object, "workers", defaults.workers);

    if (object.contains("generation")) {
        const json& generation = object.at("generation");
        config.generation.temperature =
            field(generation, "temperature", defaults.generation.temperature);
        config.generation.max_tokens =
            field(generation, "max_tokens", defaults.generation.max_tokens);
    }
    if (object.contains("defense_config")) {
        const json& defense = object.at("defense_config");
        config.defense_config.threshold =
            field(defense, "threshold", defaults.defense_config.threshold);
        config.defense_config.per_round_cap =
            field(defense, "per_round_cap", defaults.defense_config.per_round_cap);
        config.defense_config.retry_verifier_once =
            field(defense, "retry_verifier_once", defaults.defense_config.retry_verifier_once);
        config.defense_config.accumulate_exclusions =
            field(defense, "accumulate_exclusions", defaults.defense_config.accumulate_exclusions);
    }
    config.defense_config.generation = config.generation;

    if (object.contains("backend")) {
        const json& backend = object.at("backend");
        config.backend.kind = field<std::string>(backend, "kind", "scripted");
        config.backend.playbook_path = field<std::string>(backend, "playbook", "");
        config.backend.live.base_url = field<std::string>(backend, "base_url", "");
        config.backend.live.model = field<std::string>(backend, "model", "");
        config.backend.live.api_key_env =
            field<std::string>(backend, "api_key_env", defaults.backend.live.api_key_env);
        config.backend.live.retry_budget =
            field(backend, "retry_budget", defaults.backend.live.retry_budget);
        config.backend.live.retry_backoff_ms =
            field(backend, "retry_backoff_ms", defaults.backend.live.retry_backoff_ms);
        config.backend.live.concurrency =
            field(backend, "concurrency", defaults.backend.live.concurrency);
        config.backend.live.connect_timeout_s =
            field(backend, "connect_timeout_s", defaults.backend.live.connect_timeout_s);
        config.backend.live.read_timeout_s =
            field(backend, "read_timeout_s", defaults.backend.live.read_timeout_s);
    }
    if (object.contains("dataset")) {
        const json& dataset = object.at("dataset");
        config.dataset.path = field<std::string>(dataset, "path", "");
        config.dataset.format =
            dataset_format_from_string(field<std::string>(dataset, "format", "normalized"));
        config.dataset.sample_size = field(dataset, "sample_size", defaults.dataset.sample_size);
        config.dataset.seed = field(dataset, "seed", defaults.dataset.seed);
        config.dataset.target_rule =
            target_rule_from_string(field<std::string>(dataset, "target_rule", "fixed_offset"));
    }

    config.validate();
    return config;
}

std::string config_to_json_text(const ExperimentConfig& config) {
    json object{
        {"attack_mode", to_string(config.attack_mode)},
        {"backend", backend_to_json(config.backend)},
        {"dataset", dataset_to_json(config.dataset)},
        {"defense", to_string(config.defense)},
        {"defense_config", defense_to_json(config.defense_config)},
        {"generation",
         json{{"max_tokens", config.generation.max_tokens},
              {"temperature", config.generation.temperature}}},
        {"malicious_ids", config.malicious_ids},
        {"n_agents", config.n_agents},
        {"output_dir", config.output_dir},
        {"rounds", config.rounds},
        {"separate_judge", config.separate_judge},
        {"topology", config.topology},
        {"workers", config.workers},
    };
    return object.dump(2) + "\n";
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return config_from_json_text(buffer.str());
}

std::string config_hash(const ExperimentConfig& config) {
    // Operational knobs cannot change any simulated outcome, so they are
    // pinned before hashing: the hash identifies the experiment, and reruns
    // with different parallelism or output locations stay comparable.
    ExperimentConfig behavioral = config;
    behavioral.workers = 1;
    behavioral.output_dir.clear();
    std::string canonical = config_to_json_text(behavioral);

    std::uint64_t hash = 1469598103934665603ULL;  // FNV-1a 64-bit
    for (unsigned char c : canonical) {
        hash ^= c;
        hash *= 1099511628211ULL;
    }
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(hash));
    return std::string(hex);
}

}  // namespace starsim
