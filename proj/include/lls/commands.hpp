#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lls/scenarios.hpp"

namespace lls {

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// One JSON document drives a run: a scenario id (plus optional parameters) or
// an inline model+mixing pair, a seed, an output directory, and per-command
// parameter blocks ("diagnose", "estimate", "converge", "identify").
struct ExperimentConfig {
    std::optional<std::string> scenario_id;
    nlohmann::json scenario_params;  // null unless given
    std::optional<nlohmann::json> model_json;
    std::optional<nlohmann::json> mixing_json;
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    int jobs = 1;
    nlohmann::json raw;

    static ExperimentConfig load(const std::string& path);     // throws ConfigError
    static ExperimentConfig parse(const nlohmann::json& doc);  // throws ConfigError

    // Scenario when named, otherwise a synthetic bundle around the inline
    // model and mixing measure.
    Scenario resolve_scenario() const;
};

struct CommandResult {
    int exit_code = 0;
    std::vector<std::string> written_files;
};

// diagnose: pairwise orthogonality scan -> verdicts.csv + diagnose_report.json.
// Exit code 2 when at least half of the off-diagonal pairs are undecided.
CommandResult cmd_diagnose(const ExperimentConfig& config);

// estimate: posterior means for each row of an outcomes CSV -> posterior.csv.
// Rows with invalid categories or zero evidence are flagged in the error
// column; the run continues.
CommandResult cmd_estimate(const ExperimentConfig& config, const std::string& outcomes_path);

// converge: the convergence-curve experiment -> curve.csv + curve_verdict.json.
CommandResult cmd_converge(const ExperimentConfig& config);

// identify: mixing covariance and its rank -> covariance.csv + rank_report.json.
CommandResult cmd_identify(const ExperimentConfig& config);

}  // namespace lls
