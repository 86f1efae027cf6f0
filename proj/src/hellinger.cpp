#include "lls/hellinger.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "lls/csv.hpp"
#include "lls/parallel.hpp"

namespace lls {

namespace {

bool same_coords(const LatentPoint& a, const LatentPoint& b) {
    if (a.dim() != b.dim()) return false;
    for (int k = 0; k < a.dim(); ++k)
        if (a[k] != b[k]) return false;
    return true;
}

double item_affinity(std::span<const double> r1, std::span<const double> r2) {
    double h = 0.0;
    for (std::size_t l = 0; l < r1.size(); ++l)
        h += std::sqrt(std::max(0.0, r1[l]) * std::max(0.0, r2[l]));
    return std::min(h, 1.0);
}

struct Scan {
    double product = 1.0;
    double log_product = 0.0;
    double sum = 0.0;
    std::optional<std::int64_t> zero_at;
    std::int64_t evaluated = 0;
};

// One pass over items 1..N collecting affinities, the log-domain product and
// the affinity-gap sum. store receives every affinity up to a cap.
Scan scan_pair(const LatentPoint& g1, const LatentPoint& g2, std::int64_t N,
               const ModelSpec& model, std::vector<double>* store,
               std::int64_t store_cap) {
    Scan scan;
    scan.evaluated = model.reach(N);
    std::vector<double> r1, r2;
    for (std::int64_t j = 1; j <= scan.evaluated; ++j) {
        model.beta_row(g1, j, r1);
        model.beta_row(g2, j, r2);
        const double h = item_affinity(r1, r2);
        if (store && static_cast<std::int64_t>(store->size()) < store_cap) store->push_back(h);
        for (std::size_t l = 0; l < r1.size(); ++l) {
            const double d = std::sqrt(std::max(0.0, r1[l])) - std::sqrt(std::max(0.0, r2[l]));
            scan.sum += d * d;
        }
        if (h == 0.0) {
            if (!scan.zero_at) scan.zero_at = j;
        } else if (!scan.zero_at) {
            scan.log_product += std::log(h);
        }
    }
    scan.product = scan.zero_at ? 0.0 : std::exp(scan.log_product);
    return scan;
}

}  // namespace

std::string to_string(OrthoVerdict v) {
    switch (v) {
        case OrthoVerdict::orthogonal_zero_factor: return "orthogonal-zero-factor";
        case OrthoVerdict::orthogonal_by_decay: return "orthogonal-by-decay";
        case OrthoVerdict::non_orthogonal: return "non-orthogonal";
        case OrthoVerdict::undecided: return "undecided";
    }
    return "undecided";
}

double hellinger_item(const LatentPoint& g1, const LatentPoint& g2, std::int64_t j,
                      const ModelSpec& model) {
    std::vector<double> r1, r2;
    model.beta_row(g1, j, r1);
    model.beta_row(g2, j, r2);
    return item_affinity(r1, r2);
}

double hellinger_product(const LatentPoint& g1, const LatentPoint& g2, std::int64_t N,
                         const ModelSpec& model) {
    if (N < 1) throw std::invalid_argument("hellinger_product: N must be >= 1");
    const std::int64_t depth = model.reach(N);
    std::vector<double> r1, r2;
    double log_product = 0.0;
    for (std::int64_t j = 1; j <= depth; ++j) {
        model.beta_row(g1, j, r1);
        model.beta_row(g2, j, r2);
        const double h = item_affinity(r1, r2);
        if (h == 0.0) return 0.0;
        log_product += std::log(h);
    }
    return std::exp(log_product);
}

double hellinger_sum(const LatentPoint& g1, const LatentPoint& g2, std::int64_t N,
                     const ModelSpec& model) {
    if (N < 1) throw std::invalid_argument("hellinger_sum: N must be >= 1");
    const std::int64_t depth = model.reach(N);
    std::vector<double> r1, r2;
    double sum = 0.0;
    for (std::int64_t j = 1; j <= depth; ++j) {
        model.beta_row(g1, j, r1);
        model.beta_row(g2, j, r2);
        for (std::size_t l = 0; l < r1.size(); ++l) {
            const double d = std::sqrt(std::max(0.0, r1[l])) - std::sqrt(std::max(0.0, r2[l]));
            sum += d * d;
        }
    }
    return sum;
}

HellingerReport orthogonality_verdict(const LatentPoint& g1, const LatentPoint& g2,
                                      const ModelSpec& model, const HellingerOptions& opt) {
    if (opt.decay_threshold <= 0.0 || opt.floor_threshold <= 0.0)
        throw std::invalid_argument("orthogonality_verdict: thresholds must be positive");
    HellingerReport report;
    report.g1.assign(g1.coords().begin(), g1.coords().end());
    report.g2.assign(g2.coords().begin(), g2.coords().end());
    report.N = opt.N;
    report.decay_threshold = opt.decay_threshold;
    report.floor_threshold = opt.floor_threshold;

    if (same_coords(g1, g2)) {
        report.evaluated = 0;
        report.product_N = 1.0;
        report.sum_N = 0.0;
        report.verdict = OrthoVerdict::non_orthogonal;
        report.verdict_basis = "identical points: every affinity is 1";
        return report;
    }

    const auto scan = scan_pair(g1, g2, opt.N, model, &report.factors, opt.max_stored_factors);
    report.evaluated = scan.evaluated;
    report.product_N = scan.product;
    report.sum_N = scan.sum;
    report.zero_factor_at = scan.zero_at;

    if (scan.zero_at) {
        report.verdict = OrthoVerdict::orthogonal_zero_factor;
        report.verdict_basis = "zero affinity at item " + std::to_string(*scan.zero_at);
        return report;
    }

    std::optional<TailCertificate> cert;
    if (model.generator()) cert = model.generator()->tail_certificate(g1.coords(), g2.coords());

    if (cert && cert->kind == TailCertificate::Kind::constant_tail &&
        cert->informative_items <= scan.evaluated) {
        // beyond the informative head every factor is exactly 1, so the
        // truncated product is the full infinite product
        if (report.product_N > opt.floor_threshold) {
            report.verdict = OrthoVerdict::non_orthogonal;
            report.verdict_basis = "exact: " + cert->basis + "; product " +
                                   format_double(report.product_N) + " above floor threshold";
            return report;
        }
        if (report.product_N < opt.decay_threshold) {
            report.verdict = OrthoVerdict::orthogonal_by_decay;
            report.verdict_basis = "heuristic: exact finite product " +
                                   format_double(report.product_N) + " below decay threshold";
            return report;
        }
        report.verdict = OrthoVerdict::undecided;
        report.verdict_basis = "exact finite product between decay and floor thresholds";
        return report;
    }

    if (cert && cert->kind == TailCertificate::Kind::divergent_sum) {
        report.verdict = OrthoVerdict::orthogonal_by_decay;
        report.verdict_basis = "analytic: " + cert->basis;
        return report;
    }

    if (report.product_N < opt.decay_threshold) {
        report.verdict = OrthoVerdict::orthogonal_by_decay;
        report.verdict_basis = "heuristic: truncated product " + format_double(report.product_N) +
                               " below decay threshold after " + std::to_string(scan.evaluated) +
                               " items";
        return report;
    }

    report.verdict = OrthoVerdict::undecided;
    report.verdict_basis = "no zero factor, no analytic certificate, product above decay threshold";
    return report;
}

nlohmann::json HellingerReport::to_json() const {
    nlohmann::json doc;
    doc["g1"] = g1;
    doc["g2"] = g2;
    doc["N"] = N;
    doc["evaluated"] = evaluated;
    doc["product_N"] = product_N;
    doc["sum_N"] = sum_N;
    doc["factors_stored"] = factors.size();
    doc["factors"] = factors;
    if (zero_factor_at)
        doc["zero_factor_at"] = *zero_factor_at;
    else
        doc["zero_factor_at"] = nullptr;
    doc["verdict"] = to_string(verdict);
    doc["verdict_basis"] = verdict_basis;
    doc["decay_threshold"] = decay_threshold;
    doc["floor_threshold"] = floor_threshold;
    return doc;
}

std::size_t VerdictMatrix::undecided_offdiagonal() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < grid.size(); ++i)
        for (std::size_t j = i + 1; j < grid.size(); ++j)
            if (at(i, j) == OrthoVerdict::undecided) ++n;
    return n;
}

std::size_t VerdictMatrix::offdiagonal_pairs() const {
    return grid.size() * (grid.size() - 1) / 2;
}

void VerdictMatrix::write_csv(std::ostream& os) const {
    os << "pair";
    for (std::size_t j = 0; j < grid.size(); ++j) os << "," << j;
    os << "\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
        os << i;
        for (std::size_t j = 0; j < grid.size(); ++j) os << "," << to_string(at(i, j));
        os << "\n";
    }
}

nlohmann::json VerdictMatrix::to_json() const {
    nlohmann::json doc;
    doc["grid"] = nlohmann::json::array();
    for (const auto& g : grid)
        doc["grid"].push_back(std::vector<double>(g.coords().begin(), g.coords().end()));
    doc["options"] = {{"N", options.N},
                      {"decay_threshold", options.decay_threshold},
                      {"floor_threshold", options.floor_threshold}};
    doc["pairs"] = nlohmann::json::array();
    for (const auto& r : reports) doc["pairs"].push_back(r.to_json());
    nlohmann::json matrix = nlohmann::json::array();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t j = 0; j < grid.size(); ++j) row.push_back(to_string(at(i, j)));
        matrix.push_back(std::move(row));
    }
    doc["matrix"] = std::move(matrix);
    return doc;
}

VerdictMatrix pairwise_scan(const ModelSpec& model, const std::vector<LatentPoint>& grid,
                            const HellingerOptions& opt, int jobs) {
    VerdictMatrix vm;
    vm.grid = grid;
    vm.options = opt;
    const std::size_t n = grid.size();
    vm.cells.assign(n * n, OrthoVerdict::non_orthogonal);

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    vm.reports.resize(pairs.size());

    parallel_for(pairs.size(), jobs, [&](std::size_t p) {
        const auto [i, j] = pairs[p];
        vm.reports[p] = orthogonality_verdict(grid[i], grid[j], model, opt);
    });
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto [i, j] = pairs[p];
        vm.cells[i * n + j] = vm.reports[p].verdict;
        vm.cells[j * n + i] = vm.reports[p].verdict;
    }
    return vm;
}

InequalityCheck simple_inequality_check(double a, double b) {
    if (a < 0.0 || a > 1.0 || b < 0.0 || b > 1.0)
        throw std::domain_error("simple_inequality_check: arguments must lie in [0,1]");
    InequalityCheck chk;
    const double sa = std::sqrt(a), sb = std::sqrt(b);
    chk.lhs = (1.5 - std::sqrt(2.0)) * (sa - sb) * (sa - sb);
    const double mid = std::sqrt((a + b) / 2.0) - sb;
    chk.rhs = mid * mid;
    chk.holds = chk.lhs <= chk.rhs + 1e-15;
    return chk;
}

MidpointCheck midpoint_divergence_check(const LatentPoint& g1, const LatentPoint& g2,
                                        const ModelSpec& model, std::int64_t N) {
    const LatentPoint mid = midpoint(g1, g2);
    if (!model.membership(mid).in_Q)
        throw std::invalid_argument("midpoint_divergence_check: midpoint outside Q");
    MidpointCheck chk;
    chk.N = N;
    chk.midpoint_sum = hellinger_sum(mid, g2, N, model);
    chk.scaled_pair_sum = (1.5 - std::sqrt(2.0)) * hellinger_sum(g1, g2, N, model);
    chk.holds = chk.midpoint_sum >= chk.scaled_pair_sum - 1e-9;
    return chk;
}

}  // namespace lls
