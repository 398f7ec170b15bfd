#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "starsim/harness/runner.hpp"
#include "starsim/harness/transcript.hpp"

namespace {

// Accept either the run's output directory or the JSONL file itself.
std::string transcripts_file(const std::string& arg) {
    std::filesystem::path path(arg);
    if (std::filesystem::is_directory(path)) path /= "transcripts.jsonl";
    return path.string();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Multi-agent debate simulator: cooperative misinformation attacks and a "
        "sentence-level fact-check defense"};
    app.require_subcommand(1);

    std::string config_path;
    std::string backend_kind;
    std::string playbook_path;
    std::string out_dir;
    CLI::App* run = app.add_subcommand("run", "Run an experiment from a config file");
    run->add_option("--config", config_path, "Experiment config (JSON)")->required();
    run->add_option("--backend", backend_kind, "Override backend kind: live or scripted")
        ->check(CLI::IsMember({"live", "scripted"}));
    run->add_option("--playbook", playbook_path, "Override the scripted playbook path");
    run->add_option("--out", out_dir, "Override the output directory");

    std::string transcripts_arg;
    CLI::App* metrics =
        app.add_subcommand("metrics", "Recompute the metrics CSV from persisted transcripts");
    metrics->add_option("--transcripts", transcripts_arg, "Run output directory or .jsonl file")
        ->required();
    CLI::App* plot = app.add_subcommand(
        "plot-data", "Per-round vote-rate CSV (round,tsr,asr) from persisted transcripts");
    plot->add_option("--transcripts", transcripts_arg, "Run output directory or .jsonl file")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            starsim::ExperimentConfig config = starsim::load_config(config_path);
            if (!backend_kind.empty()) config.backend.kind = backend_kind;
            if (!playbook_path.empty()) config.backend.playbook_path = playbook_path;
            if (!out_dir.empty()) config.output_dir = out_dir;
            config.validate();

            std::unique_ptr<starsim::Backend> backend = starsim::make_backend(config.backend);
            starsim::ExperimentResult result = starsim::run_experiment(config, *backend);
            std::cout << starsim::metrics_csv(result.metrics, starsim::config_hash(config));
            std::cerr << "wrote " << result.transcripts_path << "\n"
                      << "wrote " << result.metrics_path << "\n"
                      << "wrote " << result.plot_path << "\n";
            return 0;
        }

        std::vector<starsim::Transcript> transcripts =
            starsim::load_transcripts(transcripts_file(transcripts_arg));
        if (transcripts.empty()) {
            std::cerr << "error: no transcripts in " << transcripts_arg << "\n";
            return 1;
        }
        starsim::RunMetrics computed = starsim::compute_metrics(transcripts);
        if (metrics->parsed()) {
            std::cout << starsim::metrics_csv(computed, transcripts.front().config_hash);
        } else {
            std::cout << starsim::plot_data_csv(computed);
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
