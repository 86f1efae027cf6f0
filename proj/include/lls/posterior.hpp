#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "lls/measure.hpp"

namespace lls {

// Raised when every atom assigns likelihood zero to an outcome sequence: the
// data-generating point is outside the support of the mixing measure. Never a
// silent fallback.
class zero_evidence_error : public std::runtime_error {
public:
    explicit zero_evidence_error(const std::string& what) : std::runtime_error(what) {}
};

struct PosteriorResult {
    LatentPoint point;                         // likelihood-weighted mean of the atoms
    std::vector<double> atom_posteriors;       // normalized weights w_i L_i / sum
    std::vector<double> atom_log_likelihoods;  // log L_i(a), -inf for impossible atoms
    std::int64_t n = 0;
};

// Conditional mean of the latent point given the first n outcomes, against
// the atoms of mu. Likelihoods accumulate as sums of logs.
PosteriorResult posterior_mean(const MixingMeasure& mu, const ModelSpec& model,
                               std::span<const int> outcomes);

// Weighted point cloud on Q; the empirical form of the estimator output and
// of reference measures.
struct EmpiricalMeasureQ {
    std::vector<LatentPoint> points;
    std::vector<double> weights;  // positive, sum 1

    struct Provenance {
        std::int64_t n = 0;
        int replicates = 0;
        std::uint64_t seed = 0;
    } provenance;

    static EmpiricalMeasureQ from_mixing(const MixingMeasure& mu);

    // CSV: '#' provenance comment, then g1..gK,weight rows.
    void write_csv(std::ostream& os) const;
};

// The empirical law of e_n over `replicates` independent outcome draws from
// the mixture: sample_joint per replicate (latent component discarded), then
// the posterior mean of the drawn prefix. Deterministic in the seed and
// independent of the worker count.
EmpiricalMeasureQ pushforward_estimate(const MixingMeasure& mu, const ModelSpec& model,
                                       std::int64_t n, int replicates, std::uint64_t seed,
                                       int jobs = 1);

// One outcome stream from P_g with posterior means at each requested prefix
// length. n_list must be nondecreasing.
std::vector<std::pair<std::int64_t, LatentPoint>> individual_trajectory(
    const LatentPoint& g, const MixingMeasure& mu, const ModelSpec& model,
    std::span<const std::int64_t> n_list, std::uint64_t seed);

}  // namespace lls
