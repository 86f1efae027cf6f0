#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lls/converge.hpp"
#include "lls/hellinger.hpp"
#include "lls/measure.hpp"

namespace lls {

// Maps a scalar latent parameter into the K=2 hyperplane and back. The
// built-in families are one-dimensional; keeping the embedding explicit lets
// one code path serve them all.
struct ScalarEmbedding {
    enum class Kind {
        first_coordinate,  // t in [0,1]  -> (t, 1-t)
        symmetric,         // t in [-1,1] -> ((1+t)/2, (1-t)/2)
    };
    Kind kind = Kind::first_coordinate;

    LatentPoint embed(double t) const;
    double project(const LatentPoint& p) const;
    std::string name() const;
};

struct ExpectedDiagnosis {
    OrthoVerdict default_pair_verdict = OrthoVerdict::undecided;
    // overrides for specific grid pairs (i < j)
    std::map<std::pair<int, int>, OrthoVerdict> pair_overrides;
    CurveVerdict convergence = CurveVerdict::undecided;
    std::map<std::string, double> constants;

    OrthoVerdict pair_verdict(int i, int j) const;
};

struct Scenario {
    std::string id;
    std::string description;
    ModelSpec model;
    MixingMeasure mixing;
    std::vector<LatentPoint> pair_grid;
    std::optional<ScalarEmbedding> embedding;
    std::optional<MixingMeasure> refined_mixing;  // finer quadrature, for discretization reports
    ExpectedDiagnosis expected;
};

// Two-atom binary model whose first item splits the atoms deterministically:
// the affinity product vanishes through an exact zero factor while the
// affinity-gap sum stays finite (= 2).
Scenario scenario_binary_counterexample();

// Continuous mixture on [0,1] over the same constant-tail model: only the
// first item is informative, interior pairs stay non-orthogonal and the
// estimator plateaus at the exact floor 5/36 against the uniform reference.
Scenario scenario_tail_equivalent(int quadrature_atoms = 400);

// Binary items with bias 1/2 + g/(2 sqrt j): every distinct pair is
// orthogonal (the affinity-gap sum diverges like a harmonic series) but the
// per-item information decays, so the estimator converges slowly.
Scenario scenario_sqrt_decay();

struct RandomScenarioParams {
    enum class Family { separated, tail_constant };
    Family family = Family::separated;
    std::int64_t items = 64;          // tabulated horizon
    int atom_count = 2;
    int informative_items = 3;        // tail_constant only
    double separation = 0.35;         // minimal per-item row gap
    double margin = 0.1;              // distance of rows from {0,1}
};

// Seeded synthetic family: per-item separation either bounded below
// (orthogonal, estimator converges fast) or vanishing after a finite head
// (estimator plateaus).
Scenario scenario_random(const RandomScenarioParams& params, std::uint64_t seed);

const std::vector<std::string>& scenario_ids();
Scenario make_scenario(const std::string& id, std::uint64_t seed = 0,
                       const nlohmann::json* params = nullptr);
std::string scenario_listing();  // one line per id

}  // namespace lls
