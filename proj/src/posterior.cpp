#include "lls/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "lls/csv.hpp"
#include "lls/parallel.hpp"
#include "lls/rng.hpp"

namespace lls {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

LatentPoint weighted_atom_mean(const MixingMeasure& mu, std::span<const double> posteriors) {
    std::vector<double> coords(static_cast<std::size_t>(mu.atoms[0].point.dim()), 0.0);
    for (std::size_t i = 0; i < mu.atoms.size(); ++i)
        for (int k = 0; k < mu.atoms[i].point.dim(); ++k)
            coords[static_cast<std::size_t>(k)] += posteriors[i] * mu.atoms[i].point[k];
    return LatentPoint(std::move(coords));
}

// Softmax of log w_i + log L_i with -inf entries allowed.
std::vector<double> normalize_log_weights(std::span<const double> logw) {
    double top = kNegInf;
    for (double v : logw) top = std::max(top, v);
    if (top == kNegInf)
        throw zero_evidence_error(
            "posterior: outcome has zero likelihood under every atom of the mixing measure");
    std::vector<double> out(logw.size(), 0.0);
    double norm = 0.0;
    for (std::size_t i = 0; i < logw.size(); ++i) {
        out[i] = logw[i] == kNegInf ? 0.0 : std::exp(logw[i] - top);
        norm += out[i];
    }
    for (double& v : out) v /= norm;
    return out;
}

// Precomputed per-atom tables for the bulk estimator. Sampling rows cover all
// items 1..n; the log table keeps only items whose rows actually vary across
// atoms (uninformative items shift every atom's log-likelihood by the same
// amount and cancel in the normalization).
struct AtomTables {
    std::int64_t n = 0;
    std::size_t atoms = 0;
    std::vector<int> counts;                  // L_j per item
    std::vector<std::size_t> row_offset;      // per item, into sample_rows per atom
    std::size_t row_stride = 0;               // total row storage per atom
    std::vector<double> sample_rows;          // [atom][offset_j + l]
    std::vector<double> atom_weights;
    std::vector<double> log_prior;

    struct InformativeItem {
        std::int64_t item;                    // 1-based j
        std::size_t log_offset;               // into log_rows
        int categories;
    };
    std::vector<InformativeItem> informative;
    std::vector<double> log_rows;             // [log_offset + l * atoms + atom]
};

AtomTables build_tables(const MixingMeasure& mu, const ModelSpec& model, std::int64_t n) {
    AtomTables t;
    t.n = n;
    t.atoms = mu.atoms.size();
    t.counts.resize(static_cast<std::size_t>(n));
    t.row_offset.resize(static_cast<std::size_t>(n));
    std::size_t offset = 0;
    for (std::int64_t j = 1; j <= n; ++j) {
        t.counts[static_cast<std::size_t>(j - 1)] = model.categories(j);
        t.row_offset[static_cast<std::size_t>(j - 1)] = offset;
        offset += static_cast<std::size_t>(model.categories(j));
    }
    t.row_stride = offset;

    t.sample_rows.resize(t.atoms * t.row_stride);
    std::vector<double> row;
    for (std::size_t i = 0; i < t.atoms; ++i) {
        for (std::int64_t j = 1; j <= n; ++j) {
            model.beta_row(mu.atoms[i].point, j, row);
            std::copy(row.begin(), row.end(),
                      t.sample_rows.begin() + static_cast<std::ptrdiff_t>(
                                                  i * t.row_stride +
                                                  t.row_offset[static_cast<std::size_t>(j - 1)]));
        }
        t.atom_weights.push_back(mu.atoms[i].weight);
        t.log_prior.push_back(std::log(mu.atoms[i].weight));
    }

    // items whose rows vary across atoms beyond rounding noise
    for (std::int64_t j = 1; j <= n; ++j) {
        const std::size_t off = t.row_offset[static_cast<std::size_t>(j - 1)];
        const int L = t.counts[static_cast<std::size_t>(j - 1)];
        double max_gap = 0.0;
        for (std::size_t i = 1; i < t.atoms; ++i)
            for (int l = 0; l < L; ++l)
                max_gap = std::max(max_gap,
                                   std::fabs(t.sample_rows[i * t.row_stride + off + l] -
                                             t.sample_rows[off + l]));
        if (t.atoms > 1 && max_gap <= 1e-14) continue;
        AtomTables::InformativeItem item;
        item.item = j;
        item.categories = L;
        item.log_offset = t.log_rows.size();
        t.informative.push_back(item);
        for (int l = 0; l < L; ++l)
            for (std::size_t i = 0; i < t.atoms; ++i) {
                const double p = t.sample_rows[i * t.row_stride + off + l];
                t.log_rows.push_back(p > 0.0 ? std::log(p) : kNegInf);
            }
    }
    return t;
}

// e_n for one replicate drawn inside the bulk loop. Outcomes are drawn for
// every item (the sample_joint contract); the posterior update only visits
// informative items.
LatentPoint bulk_replicate(const AtomTables& t, const MixingMeasure& mu, std::uint64_t seed,
                           std::vector<double>& loglik, std::vector<int>& outcome) {
    Xoshiro256pp rng(seed);
    const int atom = rng.categorical(t.atom_weights);
    Xoshiro256pp item_rng(derive_seed(seed, 1));

    outcome.resize(static_cast<std::size_t>(t.n));
    const double* rows = t.sample_rows.data() + static_cast<std::size_t>(atom) * t.row_stride;
    for (std::int64_t j = 0; j < t.n; ++j) {
        const int L = t.counts[static_cast<std::size_t>(j)];
        const std::span<const double> row(rows + t.row_offset[static_cast<std::size_t>(j)],
                                          static_cast<std::size_t>(L));
        outcome[static_cast<std::size_t>(j)] = item_rng.categorical(row);
    }

    loglik.assign(t.atoms, 0.0);
    for (const auto& item : t.informative) {
        const int l = outcome[static_cast<std::size_t>(item.item - 1)];
        const double* col = t.log_rows.data() + item.log_offset +
                            static_cast<std::size_t>(l) * t.atoms;
        for (std::size_t i = 0; i < t.atoms; ++i) loglik[i] += col[i];
    }
    for (std::size_t i = 0; i < t.atoms; ++i) loglik[i] += t.log_prior[i];
    const auto posteriors = normalize_log_weights(loglik);
    return weighted_atom_mean(mu, posteriors);
}

}  // namespace

PosteriorResult posterior_mean(const MixingMeasure& mu, const ModelSpec& model,
                               std::span<const int> outcomes) {
    if (mu.atoms.empty()) throw std::invalid_argument("posterior_mean: empty mixing measure");
    const std::int64_t n = static_cast<std::int64_t>(outcomes.size());
    for (std::int64_t j = 1; j <= n; ++j) {
        const int a = outcomes[static_cast<std::size_t>(j - 1)];
        if (a < 1 || a > model.categories(j))
            throw std::invalid_argument("posterior_mean: category " + std::to_string(a) +
                                        " out of range at item " + std::to_string(j));
    }

    std::vector<double> log_likelihoods;
    std::vector<double> logw(mu.atoms.size(), 0.0);
    std::vector<double> row;
    for (std::size_t i = 0; i < mu.atoms.size(); ++i) {
        double ll = 0.0;
        for (std::int64_t j = 1; j <= n; ++j) {
            model.beta_row(mu.atoms[i].point, j, row);
            const double p = row[static_cast<std::size_t>(outcomes[static_cast<std::size_t>(j - 1)] - 1)];
            if (p > 0.0) {
                ll += std::log(p);
            } else {
                ll = kNegInf;
                break;
            }
        }
        log_likelihoods.push_back(ll);
        logw[i] = ll == kNegInf ? kNegInf : std::log(mu.atoms[i].weight) + ll;
    }
    auto posteriors = normalize_log_weights(logw);
    LatentPoint point = weighted_atom_mean(mu, posteriors);
    return PosteriorResult{std::move(point), std::move(posteriors), std::move(log_likelihoods), n};
}

EmpiricalMeasureQ EmpiricalMeasureQ::from_mixing(const MixingMeasure& mu) {
    EmpiricalMeasureQ em;
    for (const auto& atom : mu.atoms) {
        em.points.push_back(atom.point);
        em.weights.push_back(atom.weight);
    }
    return em;
}

void EmpiricalMeasureQ::write_csv(std::ostream& os) const {
    os << "# provenance: n=" << provenance.n << ", M=" << provenance.replicates
       << ", seed=" << provenance.seed << "\n";
    const int K = points.empty() ? 0 : points[0].dim();
    for (int k = 0; k < K; ++k) os << "g" << (k + 1) << ",";
    os << "weight\n";
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (int k = 0; k < K; ++k) os << format_double(points[i][k]) << ",";
        os << format_double(weights[i]) << "\n";
    }
}

EmpiricalMeasureQ pushforward_estimate(const MixingMeasure& mu, const ModelSpec& model,
                                       std::int64_t n, int replicates, std::uint64_t seed,
                                       int jobs) {
    if (replicates < 1) throw std::invalid_argument("pushforward_estimate: need replicates >= 1");
    if (n > model.reach(n))
        throw std::out_of_range("pushforward_estimate: n beyond horizon and no generator");
    const AtomTables tables = build_tables(mu, model, n);

    std::vector<std::vector<double>> coord_slots(static_cast<std::size_t>(replicates));
    parallel_for(static_cast<std::size_t>(replicates), jobs, [&](std::size_t r) {
        thread_local std::vector<double> loglik;
        thread_local std::vector<int> outcome;
        const LatentPoint e = bulk_replicate(tables, mu, derive_seed(seed, r), loglik, outcome);
        coord_slots[r].assign(e.coords().begin(), e.coords().end());
    });

    EmpiricalMeasureQ em;
    em.points.reserve(static_cast<std::size_t>(replicates));
    const double w = 1.0 / static_cast<double>(replicates);
    for (auto& coords : coord_slots) {
        em.points.emplace_back(std::move(coords));
        em.weights.push_back(w);
    }
    em.provenance = {n, replicates, seed};
    return em;
}

std::vector<std::pair<std::int64_t, LatentPoint>> individual_trajectory(
    const LatentPoint& g, const MixingMeasure& mu, const ModelSpec& model,
    std::span<const std::int64_t> n_list, std::uint64_t seed) {
    if (n_list.empty()) return {};
    for (std::size_t i = 0; i + 1 < n_list.size(); ++i)
        if (n_list[i] > n_list[i + 1])
            throw std::invalid_argument("individual_trajectory: n_list must be nondecreasing");
    const std::int64_t n_max = n_list.back();
    const auto stream = sample_outcomes(g, n_max, model, seed);

    std::vector<std::pair<std::int64_t, LatentPoint>> trajectory;
    trajectory.reserve(n_list.size());
    for (const std::int64_t n : n_list) {
        const auto prefix = std::span<const int>(stream.values).subspan(0, static_cast<std::size_t>(n));
        trajectory.emplace_back(n, posterior_mean(mu, model, prefix).point);
    }
    return trajectory;
}

}  // namespace lls
