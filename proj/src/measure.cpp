#include "lls/measure.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "lls/csv.hpp"
#include "lls/rng.hpp"

namespace lls {

Cylinder::Cylinder(std::vector<std::pair<std::int64_t, int>> assignments)
    : assignments_(std::move(assignments)) {
    std::sort(assignments_.begin(), assignments_.end());
    for (std::size_t i = 0; i + 1 < assignments_.size(); ++i)
        if (assignments_[i].first == assignments_[i + 1].first)
            throw std::invalid_argument("cylinder: duplicate item index " +
                                        std::to_string(assignments_[i].first));
    for (const auto& [j, l] : assignments_) {
        if (j < 1) throw std::invalid_argument("cylinder: item index must be >= 1");
        if (l < 1) throw std::invalid_argument("cylinder: category must be >= 1");
    }
}

void MixingMeasure::validate(const ModelSpec& model) const {
    if (atoms.empty()) throw std::invalid_argument("mixing measure: no atoms");
    double sum = 0.0;
    for (const auto& atom : atoms) {
        if (atom.weight <= 0.0) throw std::invalid_argument("mixing measure: weight must be > 0");
        sum += atom.weight;
        if (!model.membership(atom.point).in_Q)
            throw std::invalid_argument("mixing measure: atom outside Q");
    }
    if (std::fabs(sum - 1.0) > kRowTol)
        throw std::invalid_argument("mixing measure: weights sum to " + std::to_string(sum));
}

LatentPoint MixingMeasure::mean() const {
    if (atoms.empty()) throw std::invalid_argument("mixing measure: no atoms");
    std::vector<double> coords(static_cast<std::size_t>(atoms[0].point.dim()), 0.0);
    for (const auto& atom : atoms)
        for (int k = 0; k < atom.point.dim(); ++k)
            coords[static_cast<std::size_t>(k)] += atom.weight * atom.point[k];
    return LatentPoint(std::move(coords));
}

nlohmann::json MixingMeasure::to_json() const {
    nlohmann::json doc;
    doc["atoms"] = nlohmann::json::array();
    for (const auto& atom : atoms) {
        nlohmann::json a;
        a["g"] = std::vector<double>(atom.point.coords().begin(), atom.point.coords().end());
        a["w"] = atom.weight;
        doc["atoms"].push_back(std::move(a));
    }
    doc["kind"] = kind == Kind::discrete ? "discrete" : "quadrature";
    return doc;
}

MixingMeasure MixingMeasure::from_json(const nlohmann::json& doc) {
    MixingMeasure mu;
    const std::string kind = doc.at("kind").get<std::string>();
    if (kind == "discrete")
        mu.kind = Kind::discrete;
    else if (kind == "quadrature")
        mu.kind = Kind::quadrature;
    else
        throw std::invalid_argument("mixing measure json: unknown kind '" + kind + "'");
    for (const auto& a : doc.at("atoms"))
        mu.atoms.push_back({LatentPoint(a.at("g").get<std::vector<double>>()),
                            a.at("w").get<double>()});
    return mu;
}

void write_outcomes_csv(std::ostream& os, std::span<const OutcomeSequence> sequences) {
    std::size_t n = 0;
    for (const auto& s : sequences) n = std::max(n, s.values.size());
    for (std::size_t i = 0; i < n; ++i) os << (i ? "," : "") << "a" << (i + 1);
    os << "\n";
    for (const auto& s : sequences) {
        for (std::size_t i = 0; i < s.values.size(); ++i)
            os << (i ? "," : "") << s.values[i];
        os << "\n";
    }
}

std::vector<OutcomeSequence> read_outcomes_csv(std::istream& is) {
    std::vector<OutcomeSequence> out;
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (first) {
            first = false;
            if (line.find('a') != std::string::npos) continue;  // header row
        }
        OutcomeSequence seq;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            if (cell.empty()) continue;
            seq.values.push_back(std::stoi(cell));
        }
        if (!seq.values.empty()) out.push_back(std::move(seq));
    }
    return out;
}

double cylinder_prob(const LatentPoint& g, const Cylinder& c, const ModelSpec& model) {
    double prob = 1.0;
    std::vector<double> row;
    for (const auto& [j, l] : c.assignments()) {
        if (l > model.categories(j))
            throw std::invalid_argument("cylinder: category " + std::to_string(l) +
                                        " out of range at item " + std::to_string(j));
        model.beta_row(g, j, row);
        prob *= row[static_cast<std::size_t>(l - 1)];
    }
    return prob;
}

double mixture_cylinder_prob(const MixingMeasure& mu, const Cylinder& c, const ModelSpec& model) {
    double prob = 0.0;
    for (const auto& atom : mu.atoms) prob += atom.weight * cylinder_prob(atom.point, c, model);
    return prob;
}

OutcomeSequence sample_outcomes(const LatentPoint& g, std::int64_t n, const ModelSpec& model,
                                std::uint64_t seed) {
    if (n > model.reach(n))
        throw std::out_of_range("sample_outcomes: " + std::to_string(n) +
                                " items requested beyond horizon");
    Xoshiro256pp rng(seed);
    OutcomeSequence seq;
    seq.values.reserve(static_cast<std::size_t>(n));
    std::vector<double> row;
    for (std::int64_t j = 1; j <= n; ++j) {
        model.beta_row(g, j, row);
        seq.values.push_back(rng.categorical(row) + 1);
    }
    return seq;
}

JointDraw sample_joint(const MixingMeasure& mu, std::int64_t n, const ModelSpec& model,
                       std::uint64_t seed) {
    Xoshiro256pp rng(seed);
    std::vector<double> weights;
    weights.reserve(mu.atoms.size());
    for (const auto& atom : mu.atoms) weights.push_back(atom.weight);
    const int idx = rng.categorical(weights);
    const auto& point = mu.atoms[static_cast<std::size_t>(idx)].point;
    // separate stream for the outcomes so atom choice and item draws never alias
    auto outcomes = sample_outcomes(point, n, model, derive_seed(seed, 1));
    return {static_cast<std::size_t>(idx), point, std::move(outcomes)};
}

std::int64_t outcome_space_size(const ModelSpec& model, std::int64_t n) {
    std::int64_t size = 1;
    for (std::int64_t j = 1; j <= n; ++j) {
        const std::int64_t L = model.categories(j);
        if (size > (std::int64_t{1} << 62) / L) return -1;  // overflow sentinel
        size *= L;
    }
    return size;
}

void for_each_outcome(const ModelSpec& model, std::int64_t n,
                      const std::function<void(std::span<const int>)>& visit) {
    std::vector<int> tuple(static_cast<std::size_t>(n), 1);
    if (n == 0) {
        visit(tuple);
        return;
    }
    while (true) {
        visit(tuple);
        std::int64_t j = n - 1;
        while (j >= 0) {
            if (tuple[static_cast<std::size_t>(j)] < model.categories(j + 1)) {
                ++tuple[static_cast<std::size_t>(j)];
                break;
            }
            tuple[static_cast<std::size_t>(j)] = 1;
            --j;
        }
        if (j < 0) break;
    }
}

RobbinsCheck finite_robbins_identity(const std::function<double(std::span<const int>)>& f,
                                     std::int64_t n, const MixingMeasure& mu,
                                     const ModelSpec& model, std::int64_t enumeration_budget) {
    const std::int64_t size = outcome_space_size(model, n);
    if (size < 0 || size > enumeration_budget)
        throw std::invalid_argument("finite_robbins_identity: outcome space exceeds budget of " +
                                    std::to_string(enumeration_budget) + " tuples");

    // per-atom tables of row probabilities for items 1..n
    const std::size_t A = mu.atoms.size();
    std::vector<std::vector<std::vector<double>>> rows(A);
    for (std::size_t i = 0; i < A; ++i) {
        rows[i].resize(static_cast<std::size_t>(n));
        for (std::int64_t j = 1; j <= n; ++j)
            model.beta_row(mu.atoms[i].point, j, rows[i][static_cast<std::size_t>(j - 1)]);
    }

    double lhs = 0.0;
    std::vector<double> per_atom(A, 0.0);
    for_each_outcome(model, n, [&](std::span<const int> a) {
        const double fv = f(a);
        if (fv < 0.0) throw std::invalid_argument("finite_robbins_identity: f must be nonnegative");
        double mix = 0.0;
        for (std::size_t i = 0; i < A; ++i) {
            double p = 1.0;
            for (std::int64_t j = 0; j < n; ++j)
                p *= rows[i][static_cast<std::size_t>(j)]
                         [static_cast<std::size_t>(a[static_cast<std::size_t>(j)] - 1)];
            mix += mu.atoms[i].weight * p;
            per_atom[i] += fv * p;
        }
        lhs += fv * mix;
    });
    double rhs = 0.0;
    for (std::size_t i = 0; i < A; ++i) rhs += mu.atoms[i].weight * per_atom[i];
    return {lhs, rhs, std::fabs(lhs - rhs)};
}

}  // namespace lls
