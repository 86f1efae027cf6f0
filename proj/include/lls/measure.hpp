#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lls/model.hpp"

namespace lls {

// Finite-dimensional cylinder: item j -> category l, both 1-based, items
// distinct. Kept sorted by item.
class Cylinder {
public:
    Cylinder() = default;
    explicit Cylinder(std::vector<std::pair<std::int64_t, int>> assignments);

    const std::vector<std::pair<std::int64_t, int>>& assignments() const { return assignments_; }
    bool empty() const { return assignments_.empty(); }

private:
    std::vector<std::pair<std::int64_t, int>> assignments_;
};

// Finite atomic measure on Q: native discrete atoms, or quadrature atoms
// standing in for a continuous measure.
struct MixingMeasure {
    enum class Kind { discrete, quadrature };
    struct Atom {
        LatentPoint point;
        double weight;
    };

    std::vector<Atom> atoms;
    Kind kind = Kind::discrete;
    std::string density_note;  // optional description of the approximated density (not serialized)

    // weights positive and summing to 1, every atom inside Q
    void validate(const ModelSpec& model) const;

    LatentPoint mean() const;

    nlohmann::json to_json() const;
    static MixingMeasure from_json(const nlohmann::json& doc);
};

// A finite outcome prefix a_1..a_n, categories 1-based.
struct OutcomeSequence {
    std::vector<int> values;

    std::int64_t length() const { return static_cast<std::int64_t>(values.size()); }
};

// CSV: header a1..an, then one row per sequence.
void write_outcomes_csv(std::ostream& os, std::span<const OutcomeSequence> sequences);
std::vector<OutcomeSequence> read_outcomes_csv(std::istream& is);

double cylinder_prob(const LatentPoint& g, const Cylinder& c, const ModelSpec& model);
double mixture_cylinder_prob(const MixingMeasure& mu, const Cylinder& c, const ModelSpec& model);

// Independent draw of the first n items under P_g. Deterministic in the seed.
OutcomeSequence sample_outcomes(const LatentPoint& g, std::int64_t n, const ModelSpec& model,
                                std::uint64_t seed);

struct JointDraw {
    std::size_t atom_index;
    LatentPoint point;
    OutcomeSequence outcomes;
};

// Latent atom by weight, then outcomes from the selected P_g.
JointDraw sample_joint(const MixingMeasure& mu, std::int64_t n, const ModelSpec& model,
                       std::uint64_t seed);

// Enumeration over all outcome tuples of items 1..n (visit receives 1-based
// categories). Used by the exact identities and by test oracles.
std::int64_t outcome_space_size(const ModelSpec& model, std::int64_t n);
void for_each_outcome(const ModelSpec& model, std::int64_t n,
                      const std::function<void(std::span<const int>)>& visit);

struct RobbinsCheck {
    double lhs = 0.0;  // integral of f against the mixture
    double rhs = 0.0;  // mixture of the per-atom integrals
    double abs_diff = 0.0;
};

// Finite-horizon form of the mixture/integral exchange: for f measurable on
// the first n items, int f dP_mu = sum_i w_i int f dP_{g_i}, both sides
// evaluated by exact enumeration. Refuses when the outcome space exceeds the
// budget.
RobbinsCheck finite_robbins_identity(const std::function<double(std::span<const int>)>& f,
                                     std::int64_t n, const MixingMeasure& mu,
                                     const ModelSpec& model,
                                     std::int64_t enumeration_budget = 1000000);

}  // namespace lls
