#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lls/model.hpp"

namespace lls {

enum class OrthoVerdict {
    orthogonal_zero_factor,
    orthogonal_by_decay,
    non_orthogonal,
    undecided,
};

std::string to_string(OrthoVerdict v);

struct HellingerOptions {
    std::int64_t N = 10000;          // truncation depth
    double decay_threshold = 1e-8;   // product below this is treated as decayed to 0
    double floor_threshold = 1e-6;   // constant-tail products above this are called positive
    std::int64_t max_stored_factors = 4096;
};

// Per-pair diagnostics: item affinities h_j, the partial product and the
// affinity-gap partial sum, plus the verdict and what it was based on.
struct HellingerReport {
    std::vector<double> g1, g2;
    std::int64_t N = 0;          // requested depth
    std::int64_t evaluated = 0;  // items actually evaluated (horizon may clamp)
    std::vector<double> factors; // first min(evaluated, max_stored_factors) affinities
    double product_N = 1.0;
    double sum_N = 0.0;
    std::optional<std::int64_t> zero_factor_at;
    OrthoVerdict verdict = OrthoVerdict::undecided;
    std::string verdict_basis;
    double decay_threshold = 0.0;
    double floor_threshold = 0.0;

    nlohmann::json to_json() const;
};

// Item affinity sum_l sqrt(beta_jl(g1) beta_jl(g2)); in [0,1], and 1 exactly
// iff the rows coincide.
double hellinger_item(const LatentPoint& g1, const LatentPoint& g2, std::int64_t j,
                      const ModelSpec& model);

// prod_{j<=N} h_j. Accumulated in the log domain; an exact zero factor
// short-circuits to 0 so underflow can never masquerade as orthogonality.
double hellinger_product(const LatentPoint& g1, const LatentPoint& g2, std::int64_t N,
                         const ModelSpec& model);

// sum_{j<=N} sum_l (sqrt beta_jl(g1) - sqrt beta_jl(g2))^2, evaluated from the
// definition (not via the affinities, which is the identity tests check).
double hellinger_sum(const LatentPoint& g1, const LatentPoint& g2, std::int64_t N,
                     const ModelSpec& model);

HellingerReport orthogonality_verdict(const LatentPoint& g1, const LatentPoint& g2,
                                      const ModelSpec& model, const HellingerOptions& opt = {});

// Symmetric verdict matrix over a grid of latent points; diagonal entries are
// non-orthogonal by definition. Reports are kept for i < j.
struct VerdictMatrix {
    std::vector<LatentPoint> grid;
    std::vector<OrthoVerdict> cells;  // row-major, size grid^2
    std::vector<HellingerReport> reports;
    HellingerOptions options;

    OrthoVerdict at(std::size_t i, std::size_t j) const { return cells[i * grid.size() + j]; }
    std::size_t undecided_offdiagonal() const;
    std::size_t offdiagonal_pairs() const;
    void write_csv(std::ostream& os) const;
    nlohmann::json to_json() const;
};

VerdictMatrix pairwise_scan(const ModelSpec& model, const std::vector<LatentPoint>& grid,
                            const HellingerOptions& opt = {}, int jobs = 1);

struct InequalityCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
};

// (3/2 - sqrt 2)(sqrt a - sqrt b)^2 <= (sqrt((a+b)/2) - sqrt b)^2 on [0,1]^2.
InequalityCheck simple_inequality_check(double a, double b);

struct MidpointCheck {
    std::int64_t N = 0;
    double midpoint_sum = 0.0;  // sum_N((g1+g2)/2, g2)
    double scaled_pair_sum = 0.0;  // (3/2 - sqrt 2) * sum_N(g1, g2)
    bool holds = false;
};

// Finite-depth consequence of the midpoint inequality applied per (j,l):
// sum_N(mid, g2) >= (3/2 - sqrt 2) sum_N(g1, g2), up to 1e-9 slack.
MidpointCheck midpoint_divergence_check(const LatentPoint& g1, const LatentPoint& g2,
                                        const ModelSpec& model, std::int64_t N);

}  // namespace lls
