#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ot/metric_space.hpp"
#include "ot/rational.hpp"

namespace ot {

/// A nonnegative measure on a finite metric space, one exact rational weight
/// per point. Weight vectors are index-aligned with the space's labels.
class DiscreteMeasure {
public:
    DiscreteMeasure(SpacePtr space, std::vector<Rational> weights)
        : space_(std::move(space)), weights_(std::move(weights)) {
        if (!space_) throw err::invalid_argument("measure needs a space");
        if (static_cast<int>(weights_.size()) != space_->size()) {
            throw err::invalid_argument("weight count does not match space size");
        }
        for (const auto& w : weights_) {
            if (w < 0) throw err::invalid_argument("negative weight in measure");
            total_ += w;
        }
    }

    const SpacePtr& space() const noexcept { return space_; }
    int size() const noexcept { return static_cast<int>(weights_.size()); }
    const Rational& weight(int i) const { return weights_.at(static_cast<std::size_t>(i)); }
    const std::vector<Rational>& weights() const noexcept { return weights_; }
    const Rational& total_mass() const noexcept { return total_; }
    bool is_probability() const noexcept { return total_ == 1; }

    std::vector<int> support() const {
        std::vector<int> s;
        for (int i = 0; i < size(); ++i) {
            if (weights_[static_cast<std::size_t>(i)] > 0) s.push_back(i);
        }
        return s;
    }

    /// Exact equality of weights on structurally identical spaces. Measures on
    /// label-permuted copies of a space compare equal through canonical keys
    /// instead (see canonicalize_measure_key).
    bool equals(const DiscreteMeasure& other) const {
        return same_space(space_, other.space_) && weights_ == other.weights_;
    }

private:
    SpacePtr space_;
    std::vector<Rational> weights_;
    Rational total_ = 0;
};

/// A total map between the points of two finite spaces, stored as the target
/// index of each source point.
class PointMap {
public:
    PointMap(SpacePtr source, SpacePtr target, std::vector<int> assignment)
        : source_(std::move(source)), target_(std::move(target)), assignment_(std::move(assignment)) {
        if (!source_ || !target_) throw err::invalid_argument("point map needs source and target spaces");
        if (static_cast<int>(assignment_.size()) != source_->size()) {
            throw err::invalid_argument("point map must assign every source point");
        }
        for (int v : assignment_) {
            if (v < 0 || v >= target_->size()) throw err::invalid_argument("point map image out of range");
        }
    }

    const SpacePtr& source() const noexcept { return source_; }
    const SpacePtr& target() const noexcept { return target_; }
    int apply(int i) const { return assignment_.at(static_cast<std::size_t>(i)); }
    const std::vector<int>& assignment() const noexcept { return assignment_; }

    bool is_bijection() const {
        if (source_->size() != target_->size()) return false;
        return detail::is_permutation_vector(assignment_, target_->size());
    }

    /// Inverse of a bijective map.
    PointMap inverse() const {
        if (!is_bijection()) throw err::invalid_argument("point map is not a bijection");
        std::vector<int> inv(assignment_.size());
        for (int i = 0; i < static_cast<int>(assignment_.size()); ++i) {
            inv[static_cast<std::size_t>(assignment_[static_cast<std::size_t>(i)])] = i;
        }
        return PointMap(target_, source_, std::move(inv));
    }

private:
    SpacePtr source_;
    SpacePtr target_;
    std::vector<int> assignment_;
};

/// (outer . inner)(x) = outer(inner(x)); inner's target must be outer's source.
inline PointMap compose(const PointMap& outer, const PointMap& inner) {
    if (!same_space(inner.target(), outer.source())) {
        throw err::invalid_argument("composed maps do not chain");
    }
    std::vector<int> a;
    a.reserve(inner.assignment().size());
    for (int v : inner.assignment()) a.push_back(outer.apply(v));
    return PointMap(inner.source(), outer.target(), std::move(a));
}

namespace detail {

inline std::string hex_double(double x) {
    const auto bits = std::bit_cast<std::uint64_t>(x);
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(bits));
    return std::string(buf);
}

} // namespace detail

/// Canonical identity of a measure, independent of the internal label order:
/// a fingerprint of the space geometry (labels sorted, distances re-indexed
/// accordingly) followed by label=weight pairs in sorted label order, weights
/// in lowest terms. Two measures get the same key iff they agree as maps
/// label -> weight on isometrically identified spaces.
inline std::string canonicalize_measure_key(const DiscreteMeasure& m) {
    const FiniteMetricSpace& X = *m.space();
    std::vector<int> order(static_cast<std::size_t>(X.size()));
    for (int i = 0; i < X.size(); ++i) order[static_cast<std::size_t>(i)] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) { return X.label(a) < X.label(b); });
    std::string key = "space[";
    for (std::size_t r = 0; r < order.size(); ++r) {
        if (r) key += ';';
        key += X.label(order[r]);
    }
    key += '|';
    for (std::size_t r = 0; r < order.size(); ++r) {
        for (std::size_t c = 0; c < order.size(); ++c) {
            key += detail::hex_double(X.dist(order[r], order[c]));
        }
    }
    key += "]weights[";
    for (std::size_t r = 0; r < order.size(); ++r) {
        if (r) key += ';';
        key += X.label(order[r]);
        key += '=';
        key += to_string(m.weight(order[r]));
    }
    key += ']';
    return key;
}

/// A finitely supported measure whose atoms are themselves measures on a
/// common target space. Construction merges equal atoms (canonical-key
/// identity), drops zero weights and orders atoms by key, so equal families
/// compare equal structurally.
class MeasureOverMeasures {
public:
    struct Atom {
        DiscreteMeasure measure;
        Rational weight;
        std::string key;
    };

    static MeasureOverMeasures from_atoms(const std::vector<std::pair<DiscreteMeasure, Rational>>& atoms) {
        if (atoms.empty()) throw err::invalid_argument("measure over measures needs at least one atom");
        const SpacePtr& T = atoms.front().first.space();
        std::map<std::string, std::pair<const DiscreteMeasure*, Rational>> merged;
        for (const auto& [measure, weight] : atoms) {
            if (!same_space(measure.space(), T)) {
                throw err::invalid_argument("atoms live on different target spaces");
            }
            if (weight < 0) throw err::invalid_argument("negative atom weight");
            auto key = canonicalize_measure_key(measure);
            auto it = merged.find(key);
            if (it == merged.end()) {
                merged.emplace(std::move(key), std::make_pair(&measure, weight));
            } else {
                it->second.second += weight;
            }
        }
        MeasureOverMeasures L;
        for (const auto& [key, entry] : merged) {
            if (entry.second == 0) continue;
            L.atoms_.push_back({*entry.first, entry.second, key});
            L.total_ += entry.second;
        }
        if (L.atoms_.empty()) throw err::invalid_argument("measure over measures has zero total weight");
        return L;
    }

    const std::vector<Atom>& atoms() const noexcept { return atoms_; }
    int atom_count() const noexcept { return static_cast<int>(atoms_.size()); }
    const Rational& total_weight() const noexcept { return total_; }
    bool is_probability_distribution() const noexcept { return total_ == 1; }
    const SpacePtr& target_space() const { return atoms_.front().measure.space(); }

    bool operator==(const MeasureOverMeasures& other) const {
        if (atoms_.size() != other.atoms_.size()) return false;
        for (std::size_t i = 0; i < atoms_.size(); ++i) {
            if (atoms_[i].key != other.atoms_[i].key || atoms_[i].weight != other.atoms_[i].weight) return false;
        }
        return true;
    }
    bool operator!=(const MeasureOverMeasures& other) const { return !(*this == other); }

private:
    MeasureOverMeasures() = default;
    std::vector<Atom> atoms_;
    Rational total_ = 0;
};

/// Image measure T#m: mass of each target point is the exact sum over its
/// preimage.
inline DiscreteMeasure pushforward(const DiscreteMeasure& m, const PointMap& T) {
    if (!same_space(m.space(), T.source())) {
        throw err::invalid_argument("measure and map disagree on the source space");
    }
    std::vector<Rational> w(static_cast<std::size_t>(T.target()->size()), Rational(0));
    for (int i = 0; i < m.size(); ++i) {
        w[static_cast<std::size_t>(T.apply(i))] += m.weight(i);
    }
    return DiscreteMeasure(T.target(), std::move(w));
}

/// Mixture of the atoms: sum of weight_a * a over the family. For a transport
/// class this is the measure the class targets.
inline DiscreteMeasure barycenter_of_classes(const MeasureOverMeasures& L) {
    const SpacePtr& T = L.target_space();
    std::vector<Rational> w(static_cast<std::size_t>(T->size()), Rational(0));
    for (const auto& atom : L.atoms()) {
        for (int j = 0; j < atom.measure.size(); ++j) {
            w[static_cast<std::size_t>(j)] += atom.weight * atom.measure.weight(j);
        }
    }
    return DiscreteMeasure(T, std::move(w));
}

/// m restricted to a set of point indices; weights elsewhere drop to zero.
inline DiscreteMeasure restrict_measure(const DiscreteMeasure& m, const std::vector<int>& indices) {
    std::vector<Rational> w(static_cast<std::size_t>(m.size()), Rational(0));
    for (int i : indices) w.at(static_cast<std::size_t>(i)) = m.weight(i);
    return DiscreteMeasure(m.space(), std::move(w));
}

inline constexpr long kLatticeDenominator = 1000000;

/// Pushes every support point of m to the first lattice point within eps
/// (lattice list order), then snaps the aggregated weights to denominator
/// <= 10^6: each weight is rounded down to k/10^6 and the lost mass is added
/// back onto the largest atom, so the total is preserved exactly. Support
/// points farther than eps from every lattice point raise coverage-failure.
inline DiscreteMeasure dirac_lattice_approx(const DiscreteMeasure& m, const std::vector<int>& lattice,
                                            double eps) {
    if (lattice.empty()) throw err::invalid_argument("lattice is empty");
    if (!(eps >= 0.0)) throw err::invalid_parameter("eps must be nonnegative");
    const FiniteMetricSpace& X = *m.space();
    for (int q : lattice) {
        if (q < 0 || q >= X.size()) throw err::invalid_argument("lattice point index out of range");
    }
    std::vector<Rational> agg(lattice.size(), Rational(0));
    for (int i : m.support()) {
        int hit = -1;
        for (std::size_t q = 0; q < lattice.size(); ++q) {
            if (X.dist(i, lattice[q]) <= eps) {
                hit = static_cast<int>(q);
                break;
            }
        }
        if (hit < 0) {
            throw err::coverage_failure("support point '" + X.label(i) + "' is not within eps of the lattice");
        }
        agg[static_cast<std::size_t>(hit)] += m.weight(i);
    }
    // Snap to the 10^-6 grid from below; the deficit lands on the heaviest
    // atom (ties: heavier pre-snap weight, then earlier lattice position).
    std::vector<Rational> snapped(lattice.size());
    Rational snapped_total = 0;
    for (std::size_t q = 0; q < lattice.size(); ++q) {
        const Rational scaled = agg[q] * kLatticeDenominator;
        const BigInt k = numerator(scaled) / denominator(scaled);
        snapped[q] = Rational(k, BigInt(kLatticeDenominator));
        snapped_total += snapped[q];
    }
    const Rational deficit = m.total_mass() - snapped_total;
    if (deficit > 0) {
        std::size_t best = 0;
        for (std::size_t q = 1; q < lattice.size(); ++q) {
            if (snapped[q] > snapped[best] || (snapped[q] == snapped[best] && agg[q] > agg[best])) best = q;
        }
        snapped[best] += deficit;
    }
    std::vector<Rational> w(static_cast<std::size_t>(X.size()), Rational(0));
    for (std::size_t q = 0; q < lattice.size(); ++q) {
        w[static_cast<std::size_t>(lattice[q])] += snapped[q];
    }
    return DiscreteMeasure(m.space(), std::move(w));
}

} // namespace ot
