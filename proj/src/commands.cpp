#include "lls/commands.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "lls/csv.hpp"
#include "lls/identify.hpp"
#include "lls/rng.hpp"

namespace lls {

namespace {

namespace fs = std::filesystem;

std::string write_file(const std::string& dir, const std::string& name,
                       const std::string& content) {
    fs::create_directories(dir);
    const fs::path path = fs::path(dir) / name;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot open output file " + path.string());
    os << content;
    return path.string();
}

const nlohmann::json* section(const nlohmann::json& raw, const char* name) {
    if (!raw.contains(name)) return nullptr;
    if (!raw.at(name).is_object()) throw ConfigError(std::string("config field '") + name +
                                                     "' must be an object");
    return &raw.at(name);
}

template <typename T>
T field_or(const nlohmann::json* sec, const char* name, T fallback) {
    if (!sec || !sec->contains(name)) return fallback;
    try {
        return sec->at(name).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config field '") + name + "': " + e.what());
    }
}

nlohmann::json config_echo(const ExperimentConfig& config) {
    nlohmann::json echo;
    echo["scenario"] = config.scenario_id ? nlohmann::json(*config.scenario_id) : nlohmann::json();
    echo["seed"] = config.seed;
    return echo;
}

}  // namespace

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("config file not found: " + path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(is);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    return parse(doc);
}

ExperimentConfig ExperimentConfig::parse(const nlohmann::json& doc) {
    ExperimentConfig config;
    config.raw = doc;
    try {
        if (doc.contains("scenario") && !doc.at("scenario").is_null())
            config.scenario_id = doc.at("scenario").get<std::string>();
        if (doc.contains("scenario_params")) config.scenario_params = doc.at("scenario_params");
        if (doc.contains("model")) config.model_json = doc.at("model");
        if (doc.contains("mixing")) config.mixing_json = doc.at("mixing");
        if (doc.contains("seed")) {
            const auto& s = doc.at("seed");
            const bool nonneg_integer =
                s.is_number_unsigned() || (s.is_number_integer() && s.get<std::int64_t>() >= 0);
            if (!nonneg_integer)
                throw ConfigError("config field 'seed' must be an unsigned 64-bit integer");
            config.seed = s.get<std::uint64_t>();
        }
        if (doc.contains("out")) config.out_dir = doc.at("out").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config error: ") + e.what());
    }
    if (!config.scenario_id && !(config.model_json && config.mixing_json))
        throw ConfigError("config must name a scenario or provide inline 'model' and 'mixing'");
    return config;
}

Scenario ExperimentConfig::resolve_scenario() const {
    if (scenario_id) {
        const nlohmann::json* params =
            scenario_params.is_null() ? nullptr : &scenario_params;
        Scenario s = make_scenario(*scenario_id, seed, params);
        s.mixing.validate(s.model);
        return s;
    }
    try {
        Scenario s{"inline",
                   "inline model and mixing measure",
                   ModelSpec::from_json(*model_json),
                   MixingMeasure::from_json(*mixing_json),
                   {},
                   std::nullopt,
                   std::nullopt,
                   {}};
        s.mixing.validate(s.model);
        for (const auto& atom : s.mixing.atoms) s.pair_grid.push_back(atom.point);
        return s;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("inline model/mixing: ") + e.what());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("inline model/mixing: ") + e.what());
    }
}

CommandResult cmd_diagnose(const ExperimentConfig& config) {
    const Scenario scenario = config.resolve_scenario();
    const nlohmann::json* sec = section(config.raw, "diagnose");

    HellingerOptions options;
    options.N = field_or<std::int64_t>(sec, "N", options.N);
    options.decay_threshold = field_or<double>(sec, "decay_threshold", options.decay_threshold);
    options.floor_threshold = field_or<double>(sec, "floor_threshold", options.floor_threshold);

    std::vector<LatentPoint> grid = scenario.pair_grid;
    if (sec && sec->contains("grid")) {
        grid.clear();
        for (const auto& coords : sec->at("grid"))
            grid.emplace_back(coords.get<std::vector<double>>());
    } else if (sec && sec->contains("scalar_grid")) {
        if (!scenario.embedding)
            throw ConfigError("scalar_grid requires a scenario with a scalar embedding");
        grid.clear();
        for (const double t : sec->at("scalar_grid").get<std::vector<double>>())
            grid.push_back(scenario.embedding->embed(t));
    }
    if (grid.empty()) throw ConfigError("diagnose: empty grid");
    for (const auto& g : grid)
        if (!scenario.model.membership(g).in_Q) throw ConfigError("diagnose: grid point outside Q");

    const VerdictMatrix matrix = pairwise_scan(scenario.model, grid, options, config.jobs);

    std::ostringstream csv;
    matrix.write_csv(csv);
    nlohmann::json report = matrix.to_json();
    report["config"] = config_echo(config);

    CommandResult result;
    result.written_files.push_back(write_file(config.out_dir, "verdicts.csv", csv.str()));
    result.written_files.push_back(
        write_file(config.out_dir, "diagnose_report.json", report.dump(2) + "\n"));
    const std::size_t pairs = matrix.offdiagonal_pairs();
    if (pairs > 0 && 2 * matrix.undecided_offdiagonal() >= pairs) result.exit_code = 2;
    return result;
}

CommandResult cmd_estimate(const ExperimentConfig& config, const std::string& outcomes_path) {
    const Scenario scenario = config.resolve_scenario();
    std::ifstream is(outcomes_path);
    if (!is) throw ConfigError("outcomes file not found: " + outcomes_path);
    const auto sequences = read_outcomes_csv(is);

    const int K = scenario.model.latent_dim();
    std::ostringstream csv;
    for (int k = 0; k < K; ++k) csv << "e" << (k + 1) << ",";
    csv << "top_atom_mass,error\n";
    const auto flag_row = [&](std::string msg) {
        for (char& c : msg)
            if (c == ',' || c == '\n') c = ';';
        for (int k = 0; k < K; ++k) csv << ",";
        csv << "," << msg << "\n";
    };
    for (const auto& seq : sequences) {
        try {
            const auto result = posterior_mean(scenario.mixing, scenario.model, seq.values);
            double top = 0.0;
            for (const double p : result.atom_posteriors) top = std::max(top, p);
            for (int k = 0; k < K; ++k) csv << format_double(result.point[k]) << ",";
            csv << format_double(top) << ",\n";
        } catch (const zero_evidence_error&) {
            flag_row("zero evidence: outcome impossible under every atom");
        } catch (const std::invalid_argument& e) {
            flag_row(e.what());
        } catch (const std::out_of_range& e) {
            flag_row(e.what());
        }
    }

    CommandResult result;
    result.written_files.push_back(write_file(config.out_dir, "posterior.csv", csv.str()));
    return result;
}

CommandResult cmd_converge(const ExperimentConfig& config) {
    const Scenario scenario = config.resolve_scenario();
    const nlohmann::json* sec = section(config.raw, "converge");

    CurveConfig cc;
    cc.n_grid = field_or<std::vector<std::int64_t>>(sec, "n_grid", {10, 50, 200, 400});
    for (std::size_t i = 0; i + 1 < cc.n_grid.size(); ++i)
        if (cc.n_grid[i] >= cc.n_grid[i + 1])
            throw ConfigError("converge: n_grid must be sorted strictly ascending");
    if (!cc.n_grid.empty() && cc.n_grid.back() > scenario.model.reach(cc.n_grid.back()))
        throw ConfigError("converge: n_grid exceeds the model horizon");
    cc.replicates_M = field_or<int>(sec, "M", 2000);
    cc.repeats_R = field_or<int>(sec, "R", 10);
    const std::string metric = field_or<std::string>(sec, "metric", "w1");
    if (metric == "w1")
        cc.metric = CurveMetric::w1;
    else if (metric == "energy")
        cc.metric = CurveMetric::energy;
    else
        throw ConfigError("converge: unknown metric '" + metric + "'");
    cc.projection.coordinate = field_or<int>(sec, "projection", 0);
    cc.seed = config.seed;
    cc.jobs = config.jobs;

    const auto reference = EmpiricalMeasureQ::from_mixing(scenario.mixing);
    const auto curve = convergence_curve(scenario.mixing, scenario.model, reference, cc,
                                         scenario.id);

    std::ostringstream csv;
    curve.write_csv(csv);
    nlohmann::json verdict = curve.verdict_json();
    verdict["config"] = config_echo(config);
    if (scenario.refined_mixing) {
        const auto refined = EmpiricalMeasureQ::from_mixing(*scenario.refined_mixing);
        verdict["quadrature_discretization_error"] =
            cc.metric == CurveMetric::w1
                ? wasserstein1_1d(reference, refined, cc.projection)
                : energy_distance(reference, refined, derive_seed(config.seed, 0x9D));
    }

    CommandResult result;
    result.written_files.push_back(write_file(config.out_dir, "curve.csv", csv.str()));
    result.written_files.push_back(
        write_file(config.out_dir, "curve_verdict.json", verdict.dump(2) + "\n"));
    return result;
}

CommandResult cmd_identify(const ExperimentConfig& config) {
    const Scenario scenario = config.resolve_scenario();
    const nlohmann::json* sec = section(config.raw, "identify");

    const std::int64_t default_J = std::min<std::int64_t>(scenario.model.horizon(), 4);
    const std::int64_t J = field_or<std::int64_t>(sec, "J", default_J);
    const double rel_tol = field_or<double>(sec, "rel_tol", 1e-9);

    const auto block = mixing_covariance(scenario.mixing, scenario.model, J);
    const auto report = rank_test(block, scenario.model.latent_dim(), rel_tol);

    // truncation stability: the same rank at roughly half the depth
    nlohmann::json doc = report.to_json();
    doc["J"] = J;
    if (J >= 2) {
        const std::int64_t half = (J + 1) / 2;
        const auto half_block = mixing_covariance(scenario.mixing, scenario.model, half);
        const auto half_report = rank_test(half_block, scenario.model.latent_dim(), rel_tol);
        doc["truncation_check"] = {{"J", half},
                                   {"estimated_rank", half_report.estimated_rank},
                                   {"stable", half_report.estimated_rank == report.estimated_rank}};
    }
    doc["config"] = config_echo(config);

    std::ostringstream csv;
    block.write_csv(csv);

    CommandResult result;
    result.written_files.push_back(write_file(config.out_dir, "covariance.csv", csv.str()));
    result.written_files.push_back(
        write_file(config.out_dir, "rank_report.json", doc.dump(2) + "\n"));
    return result;
}

}  // namespace lls
