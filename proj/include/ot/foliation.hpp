#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ot/disintegration.hpp"
#include "ot/parallel.hpp"
#include "ot/solver.hpp"

namespace ot {

/// A foliated metric measure space: a partitioned base space, a probability
/// on it, and one conditional probability per positive-mass class, supported
/// inside that class and reassembling to the base measure exactly.
class FoliatedSpace {
public:
    FoliatedSpace(SpacePtr base, DiscreteMeasure mu, QuotientSpace quotient,
                  std::map<int, DiscreteMeasure> conditionals)
        : base_(std::move(base)), mu_(std::move(mu)), quotient_(std::move(quotient)),
          conditionals_(std::move(conditionals)) {
        if (!same_space(base_, quotient_.base()) || !same_space(mu_.space(), base_)) {
            throw err::invalid_argument("foliation pieces disagree on the base space");
        }
        if (!mu_.is_probability()) throw err::invalid_argument("foliated space needs a probability measure");
        quotient_mass_.assign(static_cast<std::size_t>(quotient_.class_count()), Rational(0));
        for (int x = 0; x < base_->size(); ++x) {
            quotient_mass_[static_cast<std::size_t>(quotient_.class_of(x))] += mu_.weight(x);
        }
        std::vector<Rational> reassembled(static_cast<std::size_t>(base_->size()), Rational(0));
        for (int k = 0; k < quotient_.class_count(); ++k) {
            const Rational& nu_k = quotient_mass_[static_cast<std::size_t>(k)];
            if (nu_k == 0) continue;
            auto it = conditionals_.find(k);
            if (it == conditionals_.end()) {
                throw err::missing_conditional("no conditional on class " + quotient_.class_id(k));
            }
            const DiscreteMeasure& cond = it->second;
            if (!same_space(cond.space(), base_)) {
                throw err::invalid_argument("conditional on class " + quotient_.class_id(k) +
                                            " lives off the base space");
            }
            if (!cond.is_probability()) {
                throw err::invalid_argument("conditional on class " + quotient_.class_id(k) +
                                            " is not a probability");
            }
            for (int x : cond.support()) {
                if (quotient_.class_of(x) != k) {
                    throw err::invalid_argument("conditional on class " + quotient_.class_id(k) +
                                                " charges a point outside its fibre");
                }
                reassembled[static_cast<std::size_t>(x)] += nu_k * cond.weight(x);
            }
        }
        for (int x = 0; x < base_->size(); ++x) {
            if (reassembled[static_cast<std::size_t>(x)] != mu_.weight(x)) {
                throw err::invalid_argument("conditionals do not reassemble to the base measure at '" +
                                            base_->label(x) + "'");
            }
        }
    }

    /// The canonical foliation of (base, mu) over a partition: conditionals
    /// are the normalized restrictions of mu to the classes.
    static FoliatedSpace canonical(SpacePtr base, DiscreteMeasure mu, QuotientSpace quotient) {
        std::map<int, DiscreteMeasure> conditionals;
        std::vector<Rational> mass(static_cast<std::size_t>(quotient.class_count()), Rational(0));
        for (int x = 0; x < base->size(); ++x) {
            mass[static_cast<std::size_t>(quotient.class_of(x))] += mu.weight(x);
        }
        for (int k = 0; k < quotient.class_count(); ++k) {
            if (mass[static_cast<std::size_t>(k)] == 0) continue;
            std::vector<Rational> w(static_cast<std::size_t>(base->size()), Rational(0));
            for (int x : quotient.class_members(k)) {
                w[static_cast<std::size_t>(x)] = mu.weight(x) / mass[static_cast<std::size_t>(k)];
            }
            conditionals.emplace(k, DiscreteMeasure(base, std::move(w)));
        }
        return FoliatedSpace(base, std::move(mu), std::move(quotient), std::move(conditionals));
    }

    const SpacePtr& base() const noexcept { return base_; }
    const DiscreteMeasure& measure() const noexcept { return mu_; }
    const QuotientSpace& quotient() const noexcept { return quotient_; }
    const Rational& quotient_mass(int k) const { return quotient_mass_.at(static_cast<std::size_t>(k)); }

    bool has_conditional(int k) const { return conditionals_.count(k) > 0; }
    const DiscreteMeasure& conditional(int k) const {
        auto it = conditionals_.find(k);
        if (it == conditionals_.end()) {
            throw err::missing_conditional("no conditional on class " + quotient_.class_id(k));
        }
        return it->second;
    }

private:
    SpacePtr base_;
    DiscreteMeasure mu_;
    QuotientSpace quotient_;
    std::map<int, DiscreteMeasure> conditionals_;
    std::vector<Rational> quotient_mass_;
};

struct MetricFoliationViolation {
    int class_from, class_to;
    int point; // member of class_from
    double point_to_class, class_to_class;
};

struct MetricFoliationReport {
    bool pass = false;
    double max_deviation = 0.0;
    std::vector<MetricFoliationViolation> violations;
};

inline constexpr double kMetricFoliationTol = 1e-12;

/// A partition is a metric foliation when every point of a class sits at the
/// same distance from any other class: d(x, F') = d(F, F') for all x in F.
inline MetricFoliationReport check_metric_foliation(const QuotientSpace& Q,
                                                    double tol = kMetricFoliationTol) {
    MetricFoliationReport out;
    for (int k = 0; k < Q.class_count(); ++k) {
        for (int l = 0; l < Q.class_count(); ++l) {
            if (k == l) continue;
            for (int x : Q.class_members(k)) {
                const double dx = Q.point_to_class(x, l);
                const double dev = std::abs(dx - Q.dstar(k, l));
                out.max_deviation = std::max(out.max_deviation, dev);
                if (dev > tol) out.violations.push_back({k, l, x, dx, Q.dstar(k, l)});
            }
        }
    }
    out.pass = out.violations.empty();
    return out;
}

struct MmfPair {
    int class_a, class_b;
    double w2, dstar;
};

struct MmfReport {
    bool pass = false;
    double max_deviation = 0.0;
    std::vector<MmfPair> pairs;      // every checked pair
    std::vector<MmfPair> violations; // pairs beyond the tolerance
};

inline constexpr double kMmfTol = 1e-9;

/// Metric measure foliation check: between any two positive-mass classes, the
/// quadratic Wasserstein distance of the conditionals (base metric restricted
/// to the union of their supports) must equal the quotient distance d*.
inline MmfReport check_mmf(const FoliatedSpace& F, double tol = kMmfTol) {
    const QuotientSpace& Q = F.quotient();
    std::vector<std::pair<int, int>> pairs;
    for (int k = 0; k < Q.class_count(); ++k) {
        if (F.quotient_mass(k) == 0) continue;
        for (int l = k + 1; l < Q.class_count(); ++l) {
            if (F.quotient_mass(l) == 0) continue;
            pairs.emplace_back(k, l);
        }
    }
    std::vector<double> w2(pairs.size(), 0.0);
    parallel_for(pairs.size(), [&](std::size_t p) {
        w2[p] = w2_on_supports(F.conditional(pairs[p].first), F.conditional(pairs[p].second)).w2;
    });
    MmfReport out;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto [k, l] = pairs[p];
        const MmfPair row{k, l, w2[p], Q.dstar(k, l)};
        out.pairs.push_back(row);
        const double dev = std::abs(row.w2 - row.dstar);
        out.max_deviation = std::max(out.max_deviation, dev);
        if (dev > tol) out.violations.push_back(row);
    }
    out.pass = out.violations.empty();
    return out;
}

struct ModulusRow {
    double y, y_prime;
    double w2;       // W_2 between the conditionals at y and y'
    double dy;       // |y - y'|
};

/// Pairwise table of W_2 between the members of a parametrized family of
/// probabilities on one space, against the parameter gaps. The table is the
/// raw material for continuity-of-disintegration diagnostics.
inline std::vector<ModulusRow> continuity_modulus(const std::vector<std::pair<double, DiscreteMeasure>>& family) {
    if (family.size() < 2) throw err::invalid_argument("continuity modulus needs at least two members");
    const SpacePtr& X = family.front().second.space();
    for (const auto& [y, m] : family) {
        if (!std::isfinite(y)) throw err::invalid_argument("non-finite family parameter");
        if (!same_space(m.space(), X)) throw err::invalid_argument("family members live on different spaces");
        if (!m.is_probability()) throw err::invalid_argument("family members must be probabilities");
    }
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < family.size(); ++i) {
        for (std::size_t j = i + 1; j < family.size(); ++j) pairs.emplace_back(i, j);
    }
    std::vector<ModulusRow> rows(pairs.size());
    parallel_for(pairs.size(), [&](std::size_t p) {
        const auto [i, j] = pairs[p];
        rows[p] = {family[i].first, family[j].first,
                   w2_on_supports(family[i].second, family[j].second).w2,
                   std::abs(family[i].first - family[j].first)};
    });
    return rows;
}

struct CounterexampleFamily {
    SpacePtr space; // the dyadic grid j/(2n), j = 0..2n, with |a-b| distances
    std::vector<std::pair<double, DiscreteMeasure>> family; // y = i/n, i = 1..n
    int n = 0;
};

/// The doubling-map family: y(x) = 2x maps [0, 1/2) onto [0, 1), every fibre
/// below 1 is a single point x = y/2, and the fibre over 1 is the whole
/// interval [1/2, 1]. Discretized on the grid j/(2n): the conditional at
/// y = i/n is the Dirac at i/(2n) for i < n and the uniform measure on the
/// n+1 grid points of [1/2, 1] for i = n. The family is wildly discontinuous
/// at y = 1: W_2 between nearby Diracs shrinks like |y - y'|/2, while W_2
/// to the fibre over 1 stays bounded away from zero.
inline CounterexampleFamily build_counterexample(int n) {
    if (n < 4) throw err::invalid_parameter("counterexample grid needs n >= 4");
    const int points = 2 * n + 1;
    std::vector<std::string> labels;
    std::vector<std::vector<double>> coords;
    labels.reserve(static_cast<std::size_t>(points));
    for (int j = 0; j < points; ++j) {
        labels.push_back("g" + std::to_string(j));
        coords.push_back({static_cast<double>(j) / static_cast<double>(2 * n)});
    }
    std::vector<std::vector<double>> d(static_cast<std::size_t>(points),
                                       std::vector<double>(static_cast<std::size_t>(points), 0.0));
    for (int a = 0; a < points; ++a) {
        for (int b = 0; b < points; ++b) {
            d[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = std::abs(coords[static_cast<std::size_t>(a)][0] - coords[static_cast<std::size_t>(b)][0]);
        }
    }
    CounterexampleFamily out;
    out.space = make_space(std::move(labels), d);
    out.n = n;
    for (int i = 1; i < n; ++i) {
        std::vector<Rational> w(static_cast<std::size_t>(points), Rational(0));
        w[static_cast<std::size_t>(i)] = 1; // grid point i/(2n) = (i/n)/2
        out.family.emplace_back(static_cast<double>(i) / static_cast<double>(n),
                                DiscreteMeasure(out.space, std::move(w)));
    }
    std::vector<Rational> w(static_cast<std::size_t>(points), Rational(0));
    for (int j = n; j <= 2 * n; ++j) w[static_cast<std::size_t>(j)] = Rational(1, n + 1);
    out.family.emplace_back(1.0, DiscreteMeasure(out.space, std::move(w)));
    return out;
}

struct BijectiveDiracViolation {
    int target_point;
    std::string detail;
};

struct BijectiveDiracReport {
    bool pass = false;
    std::vector<BijectiveDiracViolation> violations;
};

/// For a bijective map pi, disintegrating mu along pi (through the
/// deterministic plan mu (x) delta_{pi(x)}) must return the Dirac family
/// y -> delta_{pi^{-1}(y)} over the pushforward marginal.
inline BijectiveDiracReport check_bijective_dirac(const PointMap& pi, const DiscreteMeasure& mu) {
    if (!pi.is_bijection()) throw err::invalid_argument("map is not a bijection");
    if (!same_space(mu.space(), pi.source())) {
        throw err::invalid_argument("measure and map disagree on the source space");
    }
    const TransportPlan plan = reassemble(mu, dirac_disintegration(pi, mu));
    auto [nu, g] = disintegrate(plan, Axis::Second);
    const PointMap inv = pi.inverse();
    BijectiveDiracReport out;
    for (int y : nu.support()) {
        const DiscreteMeasure& cond = g.conditional(y);
        bool ok = true;
        for (int x = 0; x < cond.size(); ++x) {
            const Rational want = (x == inv.apply(y)) ? Rational(1) : Rational(0);
            if (cond.weight(x) != want) {
                ok = false;
                break;
            }
        }
        if (!ok) {
            out.violations.push_back({y, "conditional at '" + nu.space()->label(y) + "' is not the expected Dirac"});
        }
    }
    out.pass = out.violations.empty();
    return out;
}

/// Partition of an l^q product space into the fibres {a} x B, one class per
/// point of A, in A's label order. Class labels follow lq_product's "(a,b)".
inline std::vector<std::vector<std::string>> fibre_partition(const FiniteMetricSpace& A,
                                                             const FiniteMetricSpace& B) {
    std::vector<std::vector<std::string>> classes;
    classes.reserve(static_cast<std::size_t>(A.size()));
    for (int i = 0; i < A.size(); ++i) {
        std::vector<std::string> members;
        members.reserve(static_cast<std::size_t>(B.size()));
        for (int j = 0; j < B.size(); ++j) {
            members.push_back("(" + A.label(i) + "," + B.label(j) + ")");
        }
        classes.push_back(std::move(members));
    }
    return classes;
}

/// Product measure mA (x) mB on the l^q product space of their bases.
inline DiscreteMeasure product_measure(const SpacePtr& product_space, const DiscreteMeasure& mA,
                                       const DiscreteMeasure& mB) {
    if (product_space->size() != mA.size() * mB.size()) {
        throw err::invalid_argument("product space size does not match factor measures");
    }
    std::vector<Rational> w;
    w.reserve(static_cast<std::size_t>(product_space->size()));
    for (int i = 0; i < mA.size(); ++i) {
        for (int j = 0; j < mB.size(); ++j) w.push_back(mA.weight(i) * mB.weight(j));
    }
    return DiscreteMeasure(product_space, std::move(w));
}

} // namespace ot
