#include "lls/identify.hpp"

#include <Eigen/Dense>
#include <ostream>
#include <stdexcept>

#include "lls/csv.hpp"

namespace lls {

namespace {

std::vector<double> singular_values_of(const Eigen::MatrixXd& m) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& sv = svd.singularValues();
    return std::vector<double>(sv.data(), sv.data() + sv.size());
}

int rank_from(const std::vector<double>& sv, double rel_tol) {
    if (sv.empty() || sv.front() <= 0.0) return 0;
    int rank = 0;
    for (double s : sv)
        if (s >= rel_tol * sv.front()) ++rank;
    return rank;
}

}  // namespace

CovarianceBlock mixing_covariance(const MixingMeasure& mu, const ModelSpec& model, std::int64_t J) {
    if (J < 1 || J > model.reach(J))
        throw std::invalid_argument("mixing_covariance: J out of range");
    CovarianceBlock block;
    for (std::int64_t j = 1; j <= J; ++j)
        for (int l = 1; l <= model.categories(j); ++l) block.index.emplace_back(j, l);
    const std::size_t D = block.dim();
    const std::size_t A = mu.atoms.size();

    // atom profiles restricted to the index set
    Eigen::MatrixXd profiles(static_cast<Eigen::Index>(A), static_cast<Eigen::Index>(D));
    std::vector<double> row;
    for (std::size_t i = 0; i < A; ++i) {
        std::size_t col = 0;
        for (std::int64_t j = 1; j <= J; ++j) {
            model.beta_row(mu.atoms[i].point, j, row);
            for (double v : row)
                profiles(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col++)) = v;
        }
    }

    Eigen::VectorXd weights(static_cast<Eigen::Index>(A));
    for (std::size_t i = 0; i < A; ++i) weights(static_cast<Eigen::Index>(i)) = mu.atoms[i].weight;

    const Eigen::RowVectorXd mean = weights.transpose() * profiles;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(D),
                                                static_cast<Eigen::Index>(D));
    for (std::size_t i = 0; i < A; ++i) {
        const Eigen::RowVectorXd centered = profiles.row(static_cast<Eigen::Index>(i)) - mean;
        cov.noalias() += weights(static_cast<Eigen::Index>(i)) * centered.transpose() * centered;
    }

    block.values.assign(cov.data(), cov.data() + D * D);  // symmetric, layout moot
    block.profile_singular_values = singular_values_of(profiles);
    return block;
}

void CovarianceBlock::write_csv(std::ostream& os) const {
    for (std::size_t c = 0; c < index.size(); ++c)
        os << (c ? "," : "") << "b" << index[c].first << "_" << index[c].second;
    os << "\n";
    for (std::size_t r = 0; r < dim(); ++r) {
        for (std::size_t c = 0; c < dim(); ++c) os << (c ? "," : "") << format_double(at(r, c));
        os << "\n";
    }
}

RankReport rank_test(const CovarianceBlock& C, int K, double rel_tol) {
    if (C.dim() == 0) throw std::invalid_argument("rank_test: empty covariance block");
    RankReport report;
    report.K = K;
    report.rel_tol = rel_tol;

    Eigen::MatrixXd m(static_cast<Eigen::Index>(C.dim()), static_cast<Eigen::Index>(C.dim()));
    for (std::size_t r = 0; r < C.dim(); ++r)
        for (std::size_t c = 0; c < C.dim(); ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = C.at(r, c);

    report.singular_values = singular_values_of(m);
    report.estimated_rank = rank_from(report.singular_values, rel_tol);
    report.profile_rank = rank_from(C.profile_singular_values, rel_tol);
    report.consistent = report.estimated_rank == K - 1;

    if (report.estimated_rank == 0) {
        report.note = "degenerate: covariance vanishes (single effective atom)";
    } else if (report.consistent) {
        report.note = "centered rank K-1 on the hyperplane; consistent with rank-" +
                      std::to_string(K) + " mixing";
    } else {
        report.note = "centered rank " + std::to_string(report.estimated_rank) +
                      " differs from K-1 = " + std::to_string(K - 1) +
                      "; not consistent with rank-" + std::to_string(K) + " mixing";
    }
    return report;
}

nlohmann::json RankReport::to_json() const {
    nlohmann::json doc;
    doc["estimated_rank"] = estimated_rank;
    doc["singular_values"] = singular_values;
    doc["consistent"] = consistent;
    doc["profile_rank"] = profile_rank;
    doc["K"] = K;
    doc["rel_tol"] = rel_tol;
    doc["note"] = note;
    return doc;
}

}  // namespace lls
