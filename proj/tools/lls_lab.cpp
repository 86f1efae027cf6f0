// lls_lab: batch driver for the latent-structure mixture laboratory.
//
// Subcommands: diagnose | estimate | converge | identify | scenario list.
// Every run is driven by one JSON config (see README) plus a few flags;
// outputs are plot-ready CSVs with JSON verdict sidecars. Exit codes:
// 0 success, 1 usage/config error, 2 undecided-dominant diagnosis.

#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "lls/commands.hpp"

namespace {

int env_jobs_default() {
    if (const char* env = std::getenv("LLS_LAB_JOBS")) {
        try {
            return std::max(1, std::stoi(env));
        } catch (...) {
            return 0;
        }
    }
    return 0;  // resolve to hardware concurrency
}

struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int jobs = env_jobs_default();
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "experiment config JSON")->required();
    cmd->add_option("--out", flags.out_dir, "output directory (overrides config)");
    cmd->add_option("--seed", flags.seed, "seed (overrides config)")
        ->each([&flags](const std::string&) { flags.seed_set = true; });
    cmd->add_option("--jobs", flags.jobs, "worker count (default: LLS_LAB_JOBS or all cores)");
}

lls::ExperimentConfig load_config(const CommonFlags& flags) {
    auto config = lls::ExperimentConfig::load(flags.config_path);
    if (flags.seed_set) config.seed = flags.seed;
    if (!flags.out_dir.empty()) config.out_dir = flags.out_dir;
    config.jobs = flags.jobs;
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"latent-structure mixture laboratory"};
    app.require_subcommand(1);

    CommonFlags diagnose_flags, estimate_flags, converge_flags, identify_flags;
    std::string outcomes_path;

    auto* diagnose = app.add_subcommand("diagnose", "pairwise orthogonality scan");
    add_common(diagnose, diagnose_flags);

    auto* estimate = app.add_subcommand("estimate", "posterior means for an outcomes CSV");
    add_common(estimate, estimate_flags);
    estimate->add_option("outcomes", outcomes_path, "outcomes CSV, one row per sequence")
        ->required();

    auto* converge = app.add_subcommand("converge", "convergence-curve experiment");
    add_common(converge, converge_flags);

    auto* identify = app.add_subcommand("identify", "mixing covariance and rank test");
    add_common(identify, identify_flags);

    auto* scenario = app.add_subcommand("scenario", "scenario catalog");
    bool list = false;
    scenario->add_subcommand("list", "list built-in scenarios")
        ->callback([&list] { list = true; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (diagnose->parsed()) {
            const auto result = lls::cmd_diagnose(load_config(diagnose_flags));
            for (const auto& f : result.written_files) std::cout << f << "\n";
            return result.exit_code;
        }
        if (estimate->parsed()) {
            const auto result = lls::cmd_estimate(load_config(estimate_flags), outcomes_path);
            for (const auto& f : result.written_files) std::cout << f << "\n";
            return result.exit_code;
        }
        if (converge->parsed()) {
            const auto result = lls::cmd_converge(load_config(converge_flags));
            for (const auto& f : result.written_files) std::cout << f << "\n";
            return result.exit_code;
        }
        if (identify->parsed()) {
            const auto result = lls::cmd_identify(load_config(identify_flags));
            for (const auto& f : result.written_files) std::cout << f << "\n";
            return result.exit_code;
        }
        if (scenario->parsed()) {
            if (list) {
                std::cout << lls::scenario_listing();
                return 0;
            }
            std::cerr << "usage: lls_lab scenario list\n";
            return 1;
        }
    } catch (const lls::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
