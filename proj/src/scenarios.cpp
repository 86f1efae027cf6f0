#include "lls/scenarios.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "lls/rng.hpp"

namespace lls {

LatentPoint ScalarEmbedding::embed(double t) const {
    if (kind == Kind::first_coordinate) return LatentPoint({t, 1.0 - t});
    return LatentPoint({(1.0 + t) / 2.0, (1.0 - t) / 2.0});
}

double ScalarEmbedding::project(const LatentPoint& p) const {
    if (kind == Kind::first_coordinate) return p[0];
    return p[0] - p[1];
}

std::string ScalarEmbedding::name() const {
    return kind == Kind::first_coordinate ? "t -> (t, 1-t)" : "t -> ((1+t)/2, (1-t)/2)";
}

OrthoVerdict ExpectedDiagnosis::pair_verdict(int i, int j) const {
    if (i > j) std::swap(i, j);
    const auto it = pair_overrides.find({i, j});
    return it != pair_overrides.end() ? it->second : default_pair_verdict;
}

namespace {

constexpr std::int64_t kDefaultHorizon = 16;

// The shared constant-tail model: lambda^1 has head row (1,0), lambda^2 has
// head row (0,1), both tails are (1/2,1/2).
ModelSpec split_first_item_model() {
    const nlohmann::json params = {
        {"head", {{{1.0, 0.0}}, {{0.0, 1.0}}}},
        {"tail", {{0.5, 0.5}, {0.5, 0.5}}},
    };
    auto gen = make_generator("constant-tail", params);
    ItemSpace items;
    items.horizon = kDefaultHorizon;
    items.counts.assign(kDefaultHorizon, 2);
    return ModelSpec({}, std::move(items), std::move(gen));
}

MixingMeasure uniform_quadrature(const ScalarEmbedding& embedding, double lo, double hi,
                                 int atoms) {
    MixingMeasure mu;
    mu.kind = MixingMeasure::Kind::quadrature;
    mu.density_note = "uniform on [" + std::to_string(lo) + "," + std::to_string(hi) + "]";
    const double h = (hi - lo) / atoms;
    for (int i = 0; i < atoms; ++i)
        mu.atoms.push_back({embedding.embed(lo + (i + 0.5) * h), 1.0 / atoms});
    return mu;
}

}  // namespace

Scenario scenario_binary_counterexample() {
    ScalarEmbedding embedding{ScalarEmbedding::Kind::first_coordinate};
    ModelSpec model = split_first_item_model();

    MixingMeasure mixing;
    mixing.kind = MixingMeasure::Kind::discrete;
    mixing.atoms = {{embedding.embed(1.0), 0.5}, {embedding.embed(0.0), 0.5}};

    ExpectedDiagnosis expected;
    expected.default_pair_verdict = OrthoVerdict::orthogonal_zero_factor;
    expected.convergence = CurveVerdict::converging;
    expected.constants = {{"hellinger_product", 0.0}, {"hellinger_sum", 2.0}};

    Scenario s{"binary-counterexample",
               "two-atom binary model whose first item separates the atoms deterministically; "
               "affinity product 0 by an exact zero factor, affinity-gap sum exactly 2",
               std::move(model),
               std::move(mixing),
               {embedding.embed(1.0), embedding.embed(0.0)},
               embedding,
               std::nullopt,
               std::move(expected)};
    return s;
}

Scenario scenario_tail_equivalent(int quadrature_atoms) {
    if (quadrature_atoms < 2) throw std::invalid_argument("tail-equivalent: need >= 2 atoms");
    ScalarEmbedding embedding{ScalarEmbedding::Kind::first_coordinate};
    ModelSpec model = split_first_item_model();

    MixingMeasure mixing = uniform_quadrature(embedding, 0.0, 1.0, quadrature_atoms);

    ExpectedDiagnosis expected;
    expected.default_pair_verdict = OrthoVerdict::non_orthogonal;
    // grid below is {0, 1/4, 1/2, 3/4, 1}; only the endpoint pair is orthogonal
    expected.pair_overrides[{0, 4}] = OrthoVerdict::orthogonal_zero_factor;
    expected.convergence = CurveVerdict::plateau;
    expected.constants = {{"w1_floor", 5.0 / 36.0},
                          {"posterior_mean_given_first_one", 2.0 / 3.0},
                          {"posterior_mean_given_first_two", 1.0 / 3.0},
                          // halving the midpoint-grid step moves each atom's
                          // split mass by exactly 1/(4 * atoms)
                          {"quadrature_w1_step", 1.0 / (4.0 * quadrature_atoms)}};

    std::vector<LatentPoint> grid;
    for (const double t : {0.0, 0.25, 0.5, 0.75, 1.0}) grid.push_back(embedding.embed(t));

    Scenario s{"tail-equivalent",
               "continuous mixture on [0,1] where only the first item is informative; interior "
               "pairs stay non-orthogonal and the estimator plateaus at W1 floor 5/36",
               std::move(model),
               std::move(mixing),
               std::move(grid),
               embedding,
               uniform_quadrature(embedding, 0.0, 1.0, 2 * quadrature_atoms),
               std::move(expected)};
    return s;
}

Scenario scenario_sqrt_decay() {
    ScalarEmbedding embedding{ScalarEmbedding::Kind::symmetric};
    auto gen = make_generator("sqrt-decay", nlohmann::json{{"coef", {1.0, -1.0}}});
    ItemSpace items;
    items.horizon = kDefaultHorizon;
    items.counts.assign(kDefaultHorizon, 2);
    ModelSpec model({}, std::move(items), std::move(gen));

    MixingMeasure mixing;
    mixing.kind = MixingMeasure::Kind::discrete;
    mixing.atoms = {{embedding.embed(-0.8), 0.3},
                    {embedding.embed(0.0), 0.4},
                    {embedding.embed(0.7), 0.3}};

    ExpectedDiagnosis expected;
    expected.default_pair_verdict = OrthoVerdict::orthogonal_by_decay;
    // the extreme pair (-1, 1) hits an exact zero factor at item 1
    expected.pair_overrides[{0, 4}] = OrthoVerdict::orthogonal_zero_factor;
    expected.convergence = CurveVerdict::converging;
    expected.constants = {{"sum_growth_coefficient", 1.0}};  // (g-g')^2/4 for the pair (-1,1)

    std::vector<LatentPoint> grid;
    for (const double t : {-1.0, -0.5, 0.0, 0.5, 1.0}) grid.push_back(embedding.embed(t));

    Scenario s{"sqrt-decay",
               "binary items with bias 1/2 + g/(2 sqrt j); every distinct pair is orthogonal via "
               "a divergent affinity-gap sum, per-item information decays like 1/j",
               std::move(model),
               std::move(mixing),
               std::move(grid),
               embedding,
               std::nullopt,
               std::move(expected)};
    return s;
}

Scenario scenario_random(const RandomScenarioParams& params, std::uint64_t seed) {
    if (params.atom_count < 1 || params.items < 1 ||
        params.separation <= 0.0 || params.margin < 0.0 ||
        2.0 * params.margin + params.separation >= 1.0)
        throw std::invalid_argument("scenario_random: infeasible parameters");
    if (params.family == RandomScenarioParams::Family::tail_constant &&
        (params.informative_items < 1 || params.informative_items > params.items))
        throw std::invalid_argument("scenario_random: infeasible informative item count");

    ScalarEmbedding embedding{ScalarEmbedding::Kind::first_coordinate};
    ItemSpace items;
    items.horizon = params.items;
    items.counts.assign(static_cast<std::size_t>(params.items), 2);

    std::shared_ptr<const BasisGenerator> gen;
    std::string flavor;
    if (params.family == RandomScenarioParams::Family::separated) {
        gen = make_generator("seeded-binary",
                             nlohmann::json{{"seed", seed},
                                            {"separation", params.separation},
                                            {"margin", params.margin}});
        flavor = "separated";
    } else {
        // random separated head, shared uninformative tail
        Xoshiro256pp rng(derive_seed(seed, 0xC0));
        std::vector<std::vector<std::vector<double>>> head(2);
        const double band = 1.0 - 2.0 * params.margin - params.separation;
        for (std::int64_t j = 0; j < params.informative_items; ++j) {
            double u = params.margin + rng.uniform01() * band;
            double v = u + params.separation +
                       rng.uniform01() * (1.0 - params.margin - params.separation - u);
            if (rng.uniform01() < 0.5) std::swap(u, v);
            head[0].push_back({u, 1.0 - u});
            head[1].push_back({v, 1.0 - v});
        }
        gen = make_generator("constant-tail",
                             nlohmann::json{{"head", head}, {"tail", {{0.5, 0.5}, {0.5, 0.5}}}});
        flavor = "tail-constant";
    }
    ModelSpec model({}, std::move(items), std::move(gen));

    // distinct atoms in (0,1), weights normalized
    Xoshiro256pp rng(derive_seed(seed, 0xA7));
    MixingMeasure mixing;
    mixing.kind = MixingMeasure::Kind::discrete;
    std::vector<double> weights;
    double wsum = 0.0;
    for (int i = 0; i < params.atom_count; ++i) {
        const double t = (i + 0.5 + 0.6 * (rng.uniform01() - 0.5)) / params.atom_count;
        const double w = 0.5 + rng.uniform01();
        mixing.atoms.push_back({embedding.embed(t), w});
        wsum += w;
    }
    for (auto& atom : mixing.atoms) atom.weight /= wsum;
    {  // renormalize exactly
        double s = 0.0;
        for (const auto& a : mixing.atoms) s += a.weight;
        mixing.atoms.back().weight += 1.0 - s;
    }

    ExpectedDiagnosis expected;
    if (params.family == RandomScenarioParams::Family::separated) {
        expected.default_pair_verdict = OrthoVerdict::orthogonal_by_decay;
        expected.convergence = CurveVerdict::converging;
    } else {
        expected.default_pair_verdict = OrthoVerdict::non_orthogonal;
        expected.convergence = CurveVerdict::plateau;
    }

    std::vector<LatentPoint> grid;
    for (const auto& atom : mixing.atoms) grid.push_back(atom.point);

    Scenario s{"random",
               "seeded synthetic binary family (" + flavor + "), " +
                   std::to_string(params.atom_count) + " atoms",
               std::move(model),
               std::move(mixing),
               std::move(grid),
               embedding,
               std::nullopt,
               std::move(expected)};
    return s;
}

const std::vector<std::string>& scenario_ids() {
    static const std::vector<std::string> ids = {"binary-counterexample", "tail-equivalent",
                                                 "sqrt-decay", "random"};
    return ids;
}

Scenario make_scenario(const std::string& id, std::uint64_t seed, const nlohmann::json* params) {
    if (id == "binary-counterexample") return scenario_binary_counterexample();
    if (id == "tail-equivalent") {
        int atoms = 400;
        if (params && params->contains("quadrature_atoms"))
            atoms = params->at("quadrature_atoms").get<int>();
        return scenario_tail_equivalent(atoms);
    }
    if (id == "sqrt-decay") return scenario_sqrt_decay();
    if (id == "random") {
        RandomScenarioParams p;
        if (params) {
            if (params->contains("family")) {
                const std::string f = params->at("family").get<std::string>();
                if (f == "separated")
                    p.family = RandomScenarioParams::Family::separated;
                else if (f == "tail-constant")
                    p.family = RandomScenarioParams::Family::tail_constant;
                else
                    throw std::invalid_argument("scenario_random: unknown family '" + f + "'");
            }
            if (params->contains("items")) p.items = params->at("items").get<std::int64_t>();
            if (params->contains("atoms")) p.atom_count = params->at("atoms").get<int>();
            if (params->contains("informative_items"))
                p.informative_items = params->at("informative_items").get<int>();
            if (params->contains("separation")) p.separation = params->at("separation").get<double>();
            if (params->contains("margin")) p.margin = params->at("margin").get<double>();
        }
        return scenario_random(p, seed);
    }
    throw std::invalid_argument("unknown scenario id: " + id);
}

std::string scenario_listing() {
    std::ostringstream os;
    for (const auto& id : scenario_ids()) {
        Scenario s = make_scenario(id, 0);
        os << id << ": " << s.description << "\n";
    }
    return os.str();
}

}  // namespace lls
