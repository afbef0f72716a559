#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rbill/harness/commands.hpp"

namespace h = rbill::harness;

int main(int argc, char** argv) {
    CLI::App app{"Random billiard with disk thermostats: simulation and verification harness"};
    app.require_subcommand(1, 1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::optional<unsigned> workers;

    for (const auto& [name, fn] : h::commands()) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "override run.master_seed");
        sub->add_option("--out", out_dir, "override output.directory");
        sub->add_option("--workers", workers, "override run.workers (results do not depend on it)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : h::kExecutionError;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    h::ExperimentConfig cfg;
    try {
        cfg = h::parse_config(h::read_file(config_path));
    } catch (const std::exception& e) {
        std::cerr << command << ": " << e.what() << "\n";
        return h::kExecutionError;
    }
    if (seed) cfg.run.master_seed = *seed;
    if (workers) cfg.run.workers = std::max(1u, *workers);
    if (!out_dir.empty()) cfg.output.directory = out_dir;

    int status = h::kExecutionError;
    try {
        status = h::run_command(command, cfg);
    } catch (const std::exception& e) {
        std::cerr << command << ": " << e.what() << "\n";
        return h::kExecutionError;
    }
    const auto manifest = nlohmann::json::parse(h::read_file(std::filesystem::path(cfg.output.directory) / "manifest.json"));
    std::cout << manifest["summary"].dump(2) << "\n";
    std::cout << command << ": " << (status == 0 ? "PASS" : status == 1 ? "FAIL" : "ERROR") << " (exit " << status
              << "), results in " << cfg.output.directory << "\n";
    return status;
}
