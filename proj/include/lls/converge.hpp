#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lls/posterior.hpp"

namespace lls {

// 1-D projection used by the Wasserstein metric: a coordinate index, or an
// arbitrary direction vector.
struct Projection {
    int coordinate = 0;
    std::optional<std::vector<double>> direction;

    double apply(const LatentPoint& p) const;
};

// Exact W1 between two weighted samples after projecting to the line:
// integral of |F1 - F2| over the merged support.
double wasserstein1_1d(const EmpiricalMeasureQ& e1, const EmpiricalMeasureQ& e2,
                       const Projection& projection = {});

// Energy distance 2 E||X-Y|| - E||X-X'|| - E||Y-Y'|| over weighted atoms.
// Exact when the pair-sum budget allows; otherwise both sides are subsampled
// (seeded, with replacement).
double energy_distance(const EmpiricalMeasureQ& e1, const EmpiricalMeasureQ& e2,
                       std::uint64_t seed = 0, std::int64_t pair_budget = 20000000);

enum class CurveMetric { w1, energy };
std::string to_string(CurveMetric m);

enum class CurveVerdict { converging, plateau, undecided };
std::string to_string(CurveVerdict v);

struct CurveConfig {
    std::vector<std::int64_t> n_grid;  // strictly increasing
    int replicates_M = 1000;           // pushforward sample size
    int repeats_R = 4;                 // independent repeats per grid point
    CurveMetric metric = CurveMetric::w1;
    Projection projection;
    std::uint64_t seed = 0;
    int jobs = 1;
};

struct CurvePoint {
    std::int64_t n = 0;
    double mean_distance = 0.0;
    double std_error = 0.0;
    std::vector<double> repeat_distances;
};

// Weighted least-squares fit of d(n) = floor + c * n^(-gamma) over a small
// gamma grid; the floor's standard error comes from the normal-equation
// inverse.
struct FloorFit {
    double floor = 0.0;
    double floor_std_error = 0.0;
    double coefficient = 0.0;
    double exponent = 0.0;
    double weighted_sse = 0.0;
    std::string method;
};

struct ConvergenceCurve {
    std::string scenario_id;
    std::string metric_name;
    int replicates_M = 0;
    int repeats_R = 0;
    std::vector<CurvePoint> points;
    CurveVerdict verdict = CurveVerdict::undecided;
    FloorFit fit;
    double decay_ratio = 0.0;  // last mean / first mean
    // expected distance between an M-point resample of the reference and the
    // reference itself: no estimate can reliably get closer than this
    double sampling_resolution = 0.0;
    // verdict conventions, echoed so consumers can re-derive the verdict
    double decay_factor = 5.0;
    double floor_sigma = 5.0;
    double zero_sigma = 2.0;
    double resolution_factor = 2.0;
    double zero_distance = 1e-12;

    void write_csv(std::ostream& os) const;  // columns n,M,R,metric,mean_distance,stderr
    nlohmann::json verdict_json() const;
};

// The convergence experiment: for each n, R independent pushforward estimates
// and their distances to the reference; verdict from the decay ratio and the
// fitted floor. Cell seeds derive from (seed, n-index, repeat-index).
ConvergenceCurve convergence_curve(const MixingMeasure& mu, const ModelSpec& model,
                                   const EmpiricalMeasureQ& reference, const CurveConfig& config,
                                   const std::string& scenario_id = "");

}  // namespace lls
