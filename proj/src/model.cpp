#include "lls/model.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "lls/rng.hpp"

namespace lls {

namespace {

std::string item_msg(const char* what, std::int64_t j) {
    return std::string(what) + " at item " + std::to_string(j);
}

// Rank of a dense matrix by Gaussian elimination with partial pivoting.
// Only used for the K x (sum L_j) basis stack at construction time.
int matrix_rank(std::vector<std::vector<double>> m, double tol) {
    const std::size_t rows = m.size();
    if (rows == 0) return 0;
    const std::size_t cols = m[0].size();
    int rank = 0;
    std::size_t row = 0;
    for (std::size_t col = 0; col < cols && row < rows; ++col) {
        std::size_t pivot = row;
        for (std::size_t r = row + 1; r < rows; ++r)
            if (std::fabs(m[r][col]) > std::fabs(m[pivot][col])) pivot = r;
        if (std::fabs(m[pivot][col]) <= tol) continue;
        std::swap(m[pivot], m[row]);
        for (std::size_t r = row + 1; r < rows; ++r) {
            const double f = m[r][col] / m[row][col];
            for (std::size_t c = col; c < cols; ++c) m[r][c] -= f * m[row][c];
        }
        ++row;
        ++rank;
    }
    return rank;
}

}  // namespace

void ItemSpace::validate() const {
    if (horizon < 1) throw std::invalid_argument("item space: horizon must be >= 1");
    if (static_cast<std::int64_t>(counts.size()) != horizon)
        throw std::invalid_argument("item space: counts length must equal horizon");
    for (std::size_t i = 0; i < counts.size(); ++i)
        if (counts[i] < 2)
            throw std::invalid_argument(item_msg("item space: category count must be >= 2",
                                                 static_cast<std::int64_t>(i + 1)));
}

ValidationReport validate_basis_vector(const BasisVector& v, const ItemSpace& items) {
    items.validate();
    if (v.items() != items.horizon)
        throw std::invalid_argument("basis vector: row count " + std::to_string(v.items()) +
                                    " does not match horizon " + std::to_string(items.horizon));
    ValidationReport report;
    for (std::int64_t j = 1; j <= items.horizon; ++j) {
        const auto row = v.row(j);
        if (static_cast<int>(row.size()) != items.counts[static_cast<std::size_t>(j - 1)])
            throw std::invalid_argument(item_msg("basis vector: row length mismatch", j));
        double sum = 0.0;
        for (int l = 0; l < static_cast<int>(row.size()); ++l) {
            if (row[l] < -kRowTol || row[l] > 1.0 + kRowTol) {
                report.violations.push_back(
                    {j, l + 1, RowViolation::Kind::entry_range, row[l]});
            }
            sum += row[l];
        }
        if (std::fabs(sum - 1.0) > kRowTol)
            report.violations.push_back({j, 0, RowViolation::Kind::row_sum, sum});
    }
    report.ok = report.violations.empty();
    return report;
}

LatentPoint::LatentPoint(std::vector<double> coords) : coords_(std::move(coords)) {
    if (coords_.empty()) throw std::invalid_argument("latent point: empty coordinates");
    double sum = 0.0;
    for (double c : coords_) sum += c;
    if (std::fabs(sum - 1.0) > kHyperplaneTol)
        throw std::invalid_argument("latent point: coordinates sum to " + std::to_string(sum) +
                                    ", expected 1");
}

LatentPoint interpolate(const LatentPoint& a, const LatentPoint& b, double t) {
    if (a.dim() != b.dim()) throw std::invalid_argument("interpolate: dimension mismatch");
    std::vector<double> coords(static_cast<std::size_t>(a.dim()));
    for (int k = 0; k < a.dim(); ++k) coords[static_cast<std::size_t>(k)] = (1.0 - t) * a[k] + t * b[k];
    // kill rounding drift off the hyperplane
    double sum = 0.0;
    for (double c : coords) sum += c;
    if (std::fabs(sum - 1.0) > 0 && std::fabs(sum - 1.0) <= 1e-9) coords.back() += 1.0 - sum;
    return LatentPoint(std::move(coords));
}

// ---------------------------------------------------------------------------
// Generator families
// ---------------------------------------------------------------------------

namespace {

class ConstantTailGenerator final : public BasisGenerator {
public:
    ConstantTailGenerator(std::vector<std::vector<std::vector<double>>> head,
                          std::vector<std::vector<double>> tail)
        : head_(std::move(head)), tail_(std::move(tail)) {
        if (head_.size() != tail_.size() || head_.empty())
            throw std::invalid_argument("constant-tail: head/tail basis size mismatch");
        head_items_ = static_cast<std::int64_t>(head_[0].size());
        for (const auto& h : head_)
            if (static_cast<std::int64_t>(h.size()) != head_items_)
                throw std::invalid_argument("constant-tail: ragged head");
        shared_tail_ = true;
        for (std::size_t k = 1; k < tail_.size(); ++k)
            if (tail_[k] != tail_[0]) shared_tail_ = false;
    }

    const std::string& family() const override {
        static const std::string id = "constant-tail";
        return id;
    }

    nlohmann::json params() const override {
        return nlohmann::json{{"head", head_}, {"tail", tail_}};
    }

    int basis_size() const override { return static_cast<int>(head_.size()); }

    int categories(std::int64_t j) const override {
        if (j <= head_items_)
            return static_cast<int>(head_[0][static_cast<std::size_t>(j - 1)].size());
        return static_cast<int>(tail_[0].size());
    }

    void basis_row(int k, std::int64_t j, std::vector<double>& out) const override {
        const auto& src = j <= head_items_
                              ? head_[static_cast<std::size_t>(k)][static_cast<std::size_t>(j - 1)]
                              : tail_[static_cast<std::size_t>(k)];
        out.assign(src.begin(), src.end());
    }

    bool image_in_polytope(std::span<const double> g) const override {
        std::vector<double> row;
        for (std::int64_t j = 1; j <= head_items_ + 1; ++j) {
            row.assign(static_cast<std::size_t>(categories(j)), 0.0);
            for (std::size_t k = 0; k < head_.size(); ++k) {
                std::vector<double> basis;
                basis_row(static_cast<int>(k), j, basis);
                for (std::size_t l = 0; l < row.size(); ++l) row[l] += g[k] * basis[l];
            }
            for (double v : row)
                if (v < -kRowTol || v > 1.0 + kRowTol) return false;
        }
        return true;
    }

    std::optional<TailCertificate> tail_certificate(std::span<const double> g1,
                                                    std::span<const double> g2) const override {
        // Tail row of beta(g) = sum_k g_k tail_k; when all basis vectors share
        // one tail row, the pair's tail affinities are exactly 1.
        const std::size_t L = tail_[0].size();
        std::vector<double> t1(L, 0.0), t2(L, 0.0);
        for (std::size_t k = 0; k < tail_.size(); ++k)
            for (std::size_t l = 0; l < L; ++l) {
                t1[l] += g1[k] * tail_[k][l];
                t2[l] += g2[k] * tail_[k][l];
            }
        if (shared_tail_) {
            TailCertificate cert;
            cert.kind = TailCertificate::Kind::constant_tail;
            cert.informative_items = head_items_;
            cert.basis = "constant-tail: shared tail row, affinity 1 beyond item " +
                         std::to_string(head_items_);
            return cert;
        }
        double max_gap = 0.0;
        for (std::size_t l = 0; l < L; ++l) max_gap = std::max(max_gap, std::fabs(t1[l] - t2[l]));
        if (max_gap <= 1e-14) {
            TailCertificate cert;
            cert.kind = TailCertificate::Kind::constant_tail;
            cert.informative_items = head_items_;
            cert.basis = "constant-tail: tail rows of the pair coincide";
            return cert;
        }
        // Distinct constant tail rows: every tail item contributes the same
        // positive affinity-gap term, certainly >= c/j.
        double term = 0.0;
        for (std::size_t l = 0; l < L; ++l) {
            const double d = std::sqrt(std::max(0.0, t1[l])) - std::sqrt(std::max(0.0, t2[l]));
            term += d * d;
        }
        TailCertificate cert;
        cert.kind = TailCertificate::Kind::divergent_sum;
        cert.per_item_coefficient = term;
        cert.basis = "constant-tail: distinct tail rows, constant per-item gap " +
                     std::to_string(term);
        return cert;
    }

private:
    std::vector<std::vector<std::vector<double>>> head_;  // [k][j][l]
    std::vector<std::vector<double>> tail_;               // [k][l]
    std::int64_t head_items_ = 0;
    bool shared_tail_ = true;
};

// Binary rows a_k + b_k / sqrt(j). Valid for every j iff a_k in [0,1] and
// a_k + b_k in [0,1] (the row value moves monotonically from a_k+b_k at j=1
// toward a_k). "sqrt-decay" is the a_k = 1/2, b_k = c_k/2 sub-family.
class AffineInvSqrtGenerator final : public BasisGenerator {
public:
    AffineInvSqrtGenerator(std::string family_id, std::vector<double> base, std::vector<double> coef)
        : family_id_(std::move(family_id)), base_(std::move(base)), coef_(std::move(coef)) {
        if (base_.size() != coef_.size() || base_.empty())
            throw std::invalid_argument(family_id_ + ": base/coef size mismatch");
        for (std::size_t k = 0; k < base_.size(); ++k) {
            if (base_[k] < -kRowTol || base_[k] > 1.0 + kRowTol ||
                base_[k] + coef_[k] < -kRowTol || base_[k] + coef_[k] > 1.0 + kRowTol)
                throw std::invalid_argument(family_id_ + ": basis vector " + std::to_string(k + 1) +
                                            " leaves [0,1]");
        }
    }

    const std::string& family() const override { return family_id_; }

    nlohmann::json params() const override {
        if (family_id_ == "sqrt-decay") {
            std::vector<double> c(coef_.size());
            for (std::size_t k = 0; k < coef_.size(); ++k) c[k] = 2.0 * coef_[k];
            return nlohmann::json{{"coef", c}};
        }
        return nlohmann::json{{"base", base_}, {"coef", coef_}};
    }

    int basis_size() const override { return static_cast<int>(base_.size()); }
    int categories(std::int64_t) const override { return 2; }

    void basis_row(int k, std::int64_t j, std::vector<double>& out) const override {
        const double p = base_[static_cast<std::size_t>(k)] +
                         coef_[static_cast<std::size_t>(k)] / std::sqrt(static_cast<double>(j));
        out.assign(2, 0.0);
        out[0] = p;
        out[1] = 1.0 - p;
    }

    bool image_in_polytope(std::span<const double> g) const override {
        double A = 0.0, B = 0.0;
        for (std::size_t k = 0; k < base_.size(); ++k) {
            A += g[k] * base_[k];
            B += g[k] * coef_[k];
        }
        const auto ok = [](double v) { return v >= -kRowTol && v <= 1.0 + kRowTol; };
        return ok(A) && ok(A + B);
    }

    std::optional<TailCertificate> tail_certificate(std::span<const double> g1,
                                                    std::span<const double> g2) const override {
        double dA = 0.0, dB = 0.0;
        for (std::size_t k = 0; k < base_.size(); ++k) {
            dA += (g1[k] - g2[k]) * base_[k];
            dB += (g1[k] - g2[k]) * coef_[k];
        }
        TailCertificate cert;
        if (std::fabs(dA) > 1e-14) {
            // Rows stay separated in the limit; terms are bounded below by a
            // constant, which certainly dominates c/j.
            cert.kind = TailCertificate::Kind::divergent_sum;
            cert.per_item_coefficient = dA * dA / 2.0;
            cert.basis = "affine-inv-sqrt: limiting rows differ by " + std::to_string(dA);
            return cert;
        }
        if (std::fabs(dB) > 1e-14) {
            // |sqrt p - sqrt p'| >= |p - p'| / 2 on [0,1], and the same on the
            // complement side, so term_j >= (dB)^2 / (2 j).
            cert.kind = TailCertificate::Kind::divergent_sum;
            cert.per_item_coefficient = dB * dB / 2.0;
            cert.basis = "affine-inv-sqrt: termwise bound (" + std::to_string(dB * dB / 2.0) +
                         ")/j from row gap " + std::to_string(dB) + "/sqrt(j)";
            return cert;
        }
        cert.kind = TailCertificate::Kind::constant_tail;
        cert.informative_items = 0;
        cert.basis = "affine-inv-sqrt: identical image profiles";
        return cert;
    }

private:
    std::string family_id_;
    std::vector<double> base_;
    std::vector<double> coef_;
};

// Two binary basis vectors with hash-generated rows, separated by at least
// `separation` at every item and kept `margin` away from {0,1}. Membership is
// restricted to the coordinate simplex: rows range densely over the allowed
// band, so any g outside it eventually produces an invalid row.
class SeededBinaryGenerator final : public BasisGenerator {
public:
    SeededBinaryGenerator(std::uint64_t seed, double separation, double margin)
        : seed_(seed), separation_(separation), margin_(margin) {
        if (separation_ <= 0.0 || margin_ < 0.0 || 2.0 * margin_ + separation_ >= 1.0)
            throw std::invalid_argument("seeded-binary: need 2*margin + separation < 1");
    }

    const std::string& family() const override {
        static const std::string id = "seeded-binary";
        return id;
    }

    nlohmann::json params() const override {
        return nlohmann::json{{"seed", seed_}, {"separation", separation_}, {"margin", margin_}};
    }

    int basis_size() const override { return 2; }
    int categories(std::int64_t) const override { return 2; }

    void basis_row(int k, std::int64_t j, std::vector<double>& out) const override {
        const auto [u, v] = rows_at(j);
        const double p = k == 0 ? u : v;
        out.assign(2, 0.0);
        out[0] = p;
        out[1] = 1.0 - p;
    }

    bool image_in_polytope(std::span<const double> g) const override {
        return g[0] >= -kRowTol && g[0] <= 1.0 + kRowTol && g[1] >= -kRowTol &&
               g[1] <= 1.0 + kRowTol;
    }

    std::optional<TailCertificate> tail_certificate(std::span<const double> g1,
                                                    std::span<const double> g2) const override {
        const double dg = g1[0] - g2[0];
        TailCertificate cert;
        if (std::fabs(dg) <= 1e-14) {
            cert.kind = TailCertificate::Kind::constant_tail;
            cert.informative_items = 0;
            cert.basis = "seeded-binary: identical image profiles";
            return cert;
        }
        // |p_j(g1) - p_j(g2)| = |dg| * |u_j - v_j| >= |dg| * separation.
        const double gap = std::fabs(dg) * separation_;
        cert.kind = TailCertificate::Kind::divergent_sum;
        cert.per_item_coefficient = gap * gap / 2.0;
        cert.basis = "seeded-binary: per-item row gap >= " + std::to_string(gap);
        return cert;
    }

private:
    std::pair<double, double> rows_at(std::int64_t j) const {
        const double band = 1.0 - 2.0 * margin_ - separation_;
        const double r1 = to_unit(mix64(derive_seed(seed_, static_cast<std::uint64_t>(j) * 2)));
        const double r2 = to_unit(mix64(derive_seed(seed_, static_cast<std::uint64_t>(j) * 2 + 1)));
        double u = margin_ + r1 * band;
        double v = u + separation_ + r2 * (1.0 - margin_ - separation_ - u);
        if ((mix64(derive_seed(seed_, 0x5157ull + static_cast<std::uint64_t>(j))) & 1ull) != 0)
            std::swap(u, v);
        return {u, v};
    }
    static double to_unit(std::uint64_t x) { return static_cast<double>(x >> 11) * 0x1.0p-53; }

    std::uint64_t seed_;
    double separation_;
    double margin_;
};

}  // namespace

std::shared_ptr<const BasisGenerator> make_generator(const std::string& family,
                                                     const nlohmann::json& params) {
    if (family == "constant-tail") {
        return std::make_shared<ConstantTailGenerator>(
            params.at("head").get<std::vector<std::vector<std::vector<double>>>>(),
            params.at("tail").get<std::vector<std::vector<double>>>());
    }
    if (family == "sqrt-decay") {
        auto c = params.at("coef").get<std::vector<double>>();
        std::vector<double> base(c.size(), 0.5), coef(c.size());
        for (std::size_t k = 0; k < c.size(); ++k) coef[k] = c[k] / 2.0;
        return std::make_shared<AffineInvSqrtGenerator>("sqrt-decay", std::move(base),
                                                        std::move(coef));
    }
    if (family == "affine-inv-sqrt") {
        return std::make_shared<AffineInvSqrtGenerator>(
            "affine-inv-sqrt", params.at("base").get<std::vector<double>>(),
            params.at("coef").get<std::vector<double>>());
    }
    if (family == "seeded-binary") {
        return std::make_shared<SeededBinaryGenerator>(params.at("seed").get<std::uint64_t>(),
                                                       params.at("separation").get<double>(),
                                                       params.at("margin").get<double>());
    }
    throw std::invalid_argument("unknown generator family: " + family);
}

// ---------------------------------------------------------------------------
// ModelSpec
// ---------------------------------------------------------------------------

ModelSpec::ModelSpec(std::vector<BasisVector> basis, ItemSpace items,
                     std::shared_ptr<const BasisGenerator> generator)
    : basis_(std::move(basis)), items_(std::move(items)), generator_(std::move(generator)) {
    items_.validate();
    if (basis_.empty()) {
        if (!generator_) throw std::invalid_argument("model: empty basis and no generator");
        // tabulate the generator over the horizon
        basis_.reserve(static_cast<std::size_t>(generator_->basis_size()));
        std::vector<double> row;
        for (int k = 0; k < generator_->basis_size(); ++k) {
            std::vector<std::vector<double>> rows;
            rows.reserve(static_cast<std::size_t>(items_.horizon));
            for (std::int64_t j = 1; j <= items_.horizon; ++j) {
                generator_->basis_row(k, j, row);
                rows.push_back(row);
            }
            basis_.emplace_back(std::move(rows));
        }
    }
    for (const auto& v : basis_) {
        const auto report = validate_basis_vector(v, items_);
        if (!report.ok)
            throw std::invalid_argument("model: basis vector violates probability constraints");
    }
    if (generator_) {
        if (generator_->basis_size() != latent_dim())
            throw std::invalid_argument("model: generator basis size differs from K");
        std::vector<double> row;
        for (int k = 0; k < latent_dim(); ++k)
            for (std::int64_t j = 1; j <= items_.horizon; ++j) {
                if (generator_->categories(j) != items_.counts[static_cast<std::size_t>(j - 1)])
                    throw std::invalid_argument("model: generator category count mismatch");
                generator_->basis_row(k, j, row);
                const auto tab = basis_[static_cast<std::size_t>(k)].row(j);
                for (std::size_t l = 0; l < row.size(); ++l)
                    if (std::fabs(row[l] - tab[l]) > 1e-12)
                        throw std::invalid_argument(
                            item_msg("model: generator disagrees with tabulated basis", j));
            }
    }
    // linear independence of the stacked basis rows over the horizon
    std::vector<std::vector<double>> stacked;
    stacked.reserve(basis_.size());
    for (const auto& v : basis_) {
        std::vector<double> flat;
        for (std::int64_t j = 1; j <= items_.horizon; ++j) {
            const auto row = v.row(j);
            flat.insert(flat.end(), row.begin(), row.end());
        }
        stacked.push_back(std::move(flat));
    }
    if (matrix_rank(stacked, 1e-10) != latent_dim())
        throw std::invalid_argument(
            "model: basis vectors are linearly dependent over the tabulated horizon");
}

int ModelSpec::categories(std::int64_t j) const {
    if (j < 1) throw std::out_of_range("item index must be >= 1");
    if (j <= items_.horizon) return items_.counts[static_cast<std::size_t>(j - 1)];
    if (!generator_)
        throw std::out_of_range("item " + std::to_string(j) + " beyond horizon " +
                                std::to_string(items_.horizon) + " and no generator present");
    return generator_->categories(j);
}

void ModelSpec::beta_row(const LatentPoint& g, std::int64_t j, std::vector<double>& out) const {
    if (g.dim() != latent_dim()) throw std::invalid_argument("beta_row: latent dimension mismatch");
    const int L = categories(j);
    out.assign(static_cast<std::size_t>(L), 0.0);
    if (j <= items_.horizon) {
        for (int k = 0; k < latent_dim(); ++k) {
            const auto row = basis_[static_cast<std::size_t>(k)].row(j);
            const double gk = g[k];
            for (int l = 0; l < L; ++l) out[static_cast<std::size_t>(l)] += gk * row[static_cast<std::size_t>(l)];
        }
    } else {
        std::vector<double> row;
        for (int k = 0; k < latent_dim(); ++k) {
            generator_->basis_row(k, j, row);
            const double gk = g[k];
            for (int l = 0; l < L; ++l) out[static_cast<std::size_t>(l)] += gk * row[static_cast<std::size_t>(l)];
        }
    }
}

std::vector<double> ModelSpec::beta_row(const LatentPoint& g, std::int64_t j) const {
    std::vector<double> out;
    beta_row(g, j, out);
    return out;
}

MembershipResult ModelSpec::membership(const LatentPoint& g) const {
    if (g.dim() != latent_dim())
        throw std::invalid_argument("membership: latent dimension mismatch");
    std::vector<double> row;
    for (std::int64_t j = 1; j <= items_.horizon; ++j) {
        beta_row(g, j, row);
        for (std::size_t l = 0; l < row.size(); ++l)
            if (row[l] < -kRowTol || row[l] > 1.0 + kRowTol)
                return {false, j, static_cast<int>(l + 1)};
    }
    if (generator_ && !generator_->image_in_polytope(g.coords())) return {false, 0, 0};
    return {true, 0, 0};
}

nlohmann::json ModelSpec::to_json() const {
    nlohmann::json doc;
    doc["K"] = latent_dim();
    doc["counts"] = items_.counts;
    doc["horizon"] = items_.horizon;
    std::vector<std::vector<std::vector<double>>> basis;
    basis.reserve(basis_.size());
    for (const auto& v : basis_) basis.push_back(v.rows());
    doc["basis"] = basis;
    if (generator_)
        doc["generator"] = nlohmann::json{{"family", generator_->family()},
                                          {"params", generator_->params()}};
    else
        doc["generator"] = nullptr;
    return doc;
}

ModelSpec ModelSpec::from_json(const nlohmann::json& doc) {
    ItemSpace items;
    items.counts = doc.at("counts").get<std::vector<int>>();
    items.horizon = doc.at("horizon").get<std::int64_t>();
    const int K = doc.at("K").get<int>();
    std::vector<BasisVector> basis;
    for (const auto& rows : doc.at("basis"))
        basis.emplace_back(rows.get<std::vector<std::vector<double>>>());
    if (!basis.empty() && static_cast<int>(basis.size()) != K)
        throw std::invalid_argument("model json: basis size differs from K");
    std::shared_ptr<const BasisGenerator> gen;
    if (doc.contains("generator") && !doc.at("generator").is_null()) {
        const auto& g = doc.at("generator");
        gen = make_generator(g.at("family").get<std::string>(), g.at("params"));
    }
    if (basis.empty() && !gen) throw std::invalid_argument("model json: no basis and no generator");
    ModelSpec model(std::move(basis), std::move(items), std::move(gen));
    if (model.latent_dim() != K)
        throw std::invalid_argument("model json: K differs from the basis size");
    return model;
}

}  // namespace lls
