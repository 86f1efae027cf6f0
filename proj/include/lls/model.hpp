#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

// Conventions used across the library: item indices j are 1-based, matching
// the file formats; a single referenced category l is 1-based; probability
// rows are plain arrays indexed 0..L_j-1 (row[l-1] is the probability of
// category l).

namespace lls {

inline constexpr double kHyperplaneTol = 1e-12;
inline constexpr double kRowTol = 1e-12;

// The tabulated item range: per-item category counts plus the truncation
// horizon. Items beyond the horizon exist only when the model carries a
// closed-form generator.
struct ItemSpace {
    std::vector<int> counts;   // L_j for j = 1..horizon, each >= 2
    std::int64_t horizon = 0;  // number of tabulated items

    void validate() const;  // throws std::invalid_argument
};

// One basis vector: a probability row per item.
class BasisVector {
public:
    BasisVector() = default;
    explicit BasisVector(std::vector<std::vector<double>> rows) : rows_(std::move(rows)) {}

    std::int64_t items() const { return static_cast<std::int64_t>(rows_.size()); }
    std::span<const double> row(std::int64_t j) const { return rows_.at(static_cast<std::size_t>(j - 1)); }
    const std::vector<std::vector<double>>& rows() const { return rows_; }

private:
    std::vector<std::vector<double>> rows_;
};

struct RowViolation {
    enum class Kind { entry_range, row_sum };
    std::int64_t item = 0;  // j, 1-based
    int category = 0;       // l, 1-based; 0 for row-level violations
    Kind kind = Kind::entry_range;
    double value = 0.0;
};

struct ValidationReport {
    bool ok = true;
    std::vector<RowViolation> violations;
};

// Checks entry ranges and row sums against the item space. Structural
// mismatches (wrong number of rows / row lengths) throw; value-level
// violations are reported.
ValidationReport validate_basis_vector(const BasisVector& v, const ItemSpace& items);

// A point on the hyperplane sum_k g_k = 1. Coordinates may be negative;
// whether the image profile is valid is a ModelSpec question.
class LatentPoint {
public:
    explicit LatentPoint(std::vector<double> coords);  // throws off the hyperplane

    std::span<const double> coords() const { return coords_; }
    int dim() const { return static_cast<int>(coords_.size()); }
    double operator[](int k) const { return coords_[static_cast<std::size_t>(k)]; }

    friend bool operator==(const LatentPoint& a, const LatentPoint& b) { return a.coords_ == b.coords_; }

private:
    std::vector<double> coords_;
};

// t in [0,1] -> (1-t) a + t b; stays on the hyperplane by construction.
LatentPoint interpolate(const LatentPoint& a, const LatentPoint& b, double t);
inline LatentPoint midpoint(const LatentPoint& a, const LatentPoint& b) { return interpolate(a, b, 0.5); }

// What a generator family can certify about the Hellinger tail of a pair of
// latent points without evaluating infinitely many items.
struct TailCertificate {
    enum class Kind {
        constant_tail,  // h_j = 1 exactly for every j > informative_items
        divergent_sum,  // affinity-gap terms obey term_j >= per_item_coefficient / j
    };
    Kind kind = Kind::constant_tail;
    std::int64_t informative_items = 0;
    double per_item_coefficient = 0.0;
    std::string basis;  // human-readable rule, echoed into reports
};

// Closed-form item families. A generator produces basis rows for arbitrary
// item indices, decides membership of the image profile over the whole
// infinite item sequence, and (when possible) certifies tail behavior.
class BasisGenerator {
public:
    virtual ~BasisGenerator() = default;

    virtual const std::string& family() const = 0;
    virtual nlohmann::json params() const = 0;
    virtual int basis_size() const = 0;
    virtual int categories(std::int64_t j) const = 0;
    virtual void basis_row(int k, std::int64_t j, std::vector<double>& out) const = 0;

    // True iff beta(g) is a valid probability row for every item j >= 1.
    virtual bool image_in_polytope(std::span<const double> g) const = 0;

    virtual std::optional<TailCertificate> tail_certificate(std::span<const double> g1,
                                                            std::span<const double> g2) const = 0;
};

// Families: "constant-tail" (tabulated head rows, fixed tail row per basis
// vector), "sqrt-decay" (binary rows 1/2 +- c_k/(2 sqrt j)), "affine-inv-sqrt"
// (binary rows a_k + b_k/sqrt j) and "seeded-binary" (hash-generated binary
// rows with a guaranteed per-item separation).
std::shared_ptr<const BasisGenerator> make_generator(const std::string& family,
                                                     const nlohmann::json& params);

struct MembershipResult {
    bool in_Q = true;
    std::int64_t item = 0;  // first violating item; 0 = violation beyond tabulation
    int category = 0;       // first violating category (1-based)
};

// K basis vectors, the item space, and an optional generator. Construction
// validates the basis rows, checks linear independence of the stacked rows
// over the tabulated horizon, and (when a generator is present) checks that
// generated rows agree with the tabulation.
class ModelSpec {
public:
    ModelSpec(std::vector<BasisVector> basis, ItemSpace items,
              std::shared_ptr<const BasisGenerator> generator = nullptr);

    int latent_dim() const { return static_cast<int>(basis_.size()); }
    const ItemSpace& items() const { return items_; }
    std::int64_t horizon() const { return items_.horizon; }
    bool unbounded() const { return generator_ != nullptr; }
    const BasisGenerator* generator() const { return generator_.get(); }
    const std::vector<BasisVector>& basis() const { return basis_; }

    // Largest item index operations may touch given a requested depth.
    std::int64_t reach(std::int64_t wanted) const {
        return unbounded() ? wanted : std::min(wanted, items_.horizon);
    }

    int categories(std::int64_t j) const;  // throws std::out_of_range beyond reach

    // Row of beta(g) = sum_k g_k lambda^k at item j. The out overload reuses
    // the buffer for hot loops.
    void beta_row(const LatentPoint& g, std::int64_t j, std::vector<double>& out) const;
    std::vector<double> beta_row(const LatentPoint& g, std::int64_t j) const;

    // Membership of g in Q, i.e. validity of the image profile. Tabulated
    // items are scanned (giving the first violating (j,l)); with a generator
    // the family's closed-form bound covers the rest of the sequence. Without
    // a generator the answer is necessarily horizon-limited.
    MembershipResult membership(const LatentPoint& g) const;

    nlohmann::json to_json() const;
    static ModelSpec from_json(const nlohmann::json& doc);

private:
    std::vector<BasisVector> basis_;
    ItemSpace items_;
    std::shared_ptr<const BasisGenerator> generator_;
};

}  // namespace lls
