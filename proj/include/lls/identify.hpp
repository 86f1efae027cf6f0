#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "lls/measure.hpp"

namespace lls {

// Covariance of the image profile coordinates beta_jl under the mixing
// measure, restricted to items j <= J. Stored dense row-major with the (j,l)
// index set alongside.
struct CovarianceBlock {
    enum class Provenance { exact_from_atoms, monte_carlo };

    std::vector<std::pair<std::int64_t, int>> index;  // (j, l), both 1-based
    std::vector<double> values;                       // dim x dim, row-major
    Provenance provenance = Provenance::exact_from_atoms;
    std::int64_t sample_size = 0;  // only meaningful for monte_carlo

    // singular values of the stacked atom-profile matrix (uncentered facet)
    std::vector<double> profile_singular_values;

    std::size_t dim() const { return index.size(); }
    double at(std::size_t r, std::size_t c) const { return values[r * dim() + c]; }

    void write_csv(std::ostream& os) const;  // header names the (j,l) pairs as b{j}_{l}
};

// Exact weighted covariance over the atoms of mu.
CovarianceBlock mixing_covariance(const MixingMeasure& mu, const ModelSpec& model, std::int64_t J);

struct RankReport {
    int estimated_rank = 0;             // singular values of C above rel_tol * largest
    std::vector<double> singular_values;
    bool consistent = false;            // estimated_rank == K - 1
    int profile_rank = 0;               // rank of the stacked atom-profile matrix
    int K = 0;
    double rel_tol = 0.0;
    std::string note;

    nlohmann::json to_json() const;
};

// Rank of the covariance block with a relative singular-value threshold. A
// rank-K mixing measure with full support on the hyperplane has centered rank
// K-1 (the hyperplane removes one dimension), which is what `consistent`
// checks; the uncentered profile rank is reported alongside.
RankReport rank_test(const CovarianceBlock& C, int K, double rel_tol = 1e-9);

}  // namespace lls
