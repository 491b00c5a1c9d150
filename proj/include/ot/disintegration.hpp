#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ot/solver.hpp"

namespace ot {

enum class Axis { First, Second };

/// A measurable family x -> eta_x of measures on a target space, defined on a
/// subset of the base points. Families produced by disintegration carry exact
/// probability conditionals; the uniqueness diagnostics also accept general
/// nonnegative families (scaled rows), so the probability constraint is a
/// construction-time choice.
class DisintegrationMap {
public:
    static DisintegrationMap probability_family(SpacePtr base, SpacePtr target,
                                                std::map<int, DiscreteMeasure> conditionals) {
        DisintegrationMap f(std::move(base), std::move(target), std::move(conditionals));
        for (const auto& [x, cond] : f.conditionals_) {
            if (!cond.is_probability()) {
                throw err::invalid_argument("conditional at '" + f.base_->label(x) + "' is not a probability");
            }
        }
        f.probability_family_ = true;
        return f;
    }

    static DisintegrationMap nonnegative_family(SpacePtr base, SpacePtr target,
                                                std::map<int, DiscreteMeasure> conditionals) {
        return DisintegrationMap(std::move(base), std::move(target), std::move(conditionals));
    }

    const SpacePtr& base() const noexcept { return base_; }
    const SpacePtr& target() const noexcept { return target_; }
    bool is_probability_family() const noexcept { return probability_family_; }

    bool defined_at(int x) const { return conditionals_.count(x) > 0; }

    const DiscreteMeasure& conditional(int x) const {
        auto it = conditionals_.find(x);
        if (it == conditionals_.end()) {
            throw err::missing_conditional("no conditional at '" + base_->label(x) + "'");
        }
        return it->second;
    }

    /// Points with a conditional attached, ascending.
    std::vector<int> domain() const {
        std::vector<int> d;
        d.reserve(conditionals_.size());
        for (const auto& [x, cond] : conditionals_) d.push_back(x);
        return d;
    }

private:
    DisintegrationMap(SpacePtr base, SpacePtr target, std::map<int, DiscreteMeasure> conditionals)
        : base_(std::move(base)), target_(std::move(target)), conditionals_(std::move(conditionals)) {
        if (!base_ || !target_) throw err::invalid_argument("disintegration map needs base and target spaces");
        for (const auto& [x, cond] : conditionals_) {
            if (x < 0 || x >= base_->size()) throw err::invalid_argument("conditional index out of range");
            if (!same_space(cond.space(), target_)) {
                throw err::invalid_argument("conditional lives on the wrong target space");
            }
        }
    }

    SpacePtr base_;
    SpacePtr target_;
    std::map<int, DiscreteMeasure> conditionals_;
    bool probability_family_ = false;
};

/// Splits a plan into (marginal along the axis, conditional family): for the
/// first axis, gamma = mu (x) f with f_x = row_x / mu(x). Rows of zero mass
/// have no conditional; everything is exact rational arithmetic.
inline std::pair<DiscreteMeasure, DisintegrationMap> disintegrate(const TransportPlan& gamma, Axis axis) {
    if (axis == Axis::Second) {
        auto [marginal, f] = disintegrate(gamma.transposed(), Axis::First);
        return {std::move(marginal), std::move(f)};
    }
    DiscreteMeasure marginal = gamma.row_marginal();
    std::map<int, DiscreteMeasure> conditionals;
    for (int i = 0; i < gamma.rows(); ++i) {
        const Rational& mass = marginal.weight(i);
        if (mass == 0) continue;
        std::vector<Rational> row(static_cast<std::size_t>(gamma.cols()));
        for (int j = 0; j < gamma.cols(); ++j) row[static_cast<std::size_t>(j)] = gamma.mass(i, j) / mass;
        conditionals.emplace(i, DiscreteMeasure(gamma.col_space(), std::move(row)));
    }
    auto f = DisintegrationMap::probability_family(gamma.row_space(), gamma.col_space(), std::move(conditionals));
    return {std::move(marginal), std::move(f)};
}

/// Rebuilds the plan mu (x) f, i.e. gamma(x, y) = mu(x) f_x(y). Every support
/// point of mu must carry a conditional.
inline TransportPlan reassemble(const DiscreteMeasure& mu, const DisintegrationMap& f) {
    if (!same_space(mu.space(), f.base())) {
        throw err::invalid_argument("marginal and conditional family disagree on the base space");
    }
    const int n = f.target()->size();
    std::vector<Rational> masses(static_cast<std::size_t>(mu.size()) * static_cast<std::size_t>(n), Rational(0));
    for (int x : mu.support()) {
        if (!f.defined_at(x)) {
            throw err::missing_conditional("marginal charges '" + mu.space()->label(x) +
                                           "' but the family has no conditional there");
        }
        const DiscreteMeasure& cond = f.conditional(x);
        for (int y = 0; y < n; ++y) {
            masses[static_cast<std::size_t>(x) * static_cast<std::size_t>(n) + static_cast<std::size_t>(y)] =
                mu.weight(x) * cond.weight(y);
        }
    }
    return TransportPlan(mu.space(), f.target(), std::move(masses));
}

/// The disintegration induced by a deterministic map: x -> delta_{T(x)}.
/// Conditionals are attached at every source point, so any measure dominated
/// by the source space reassembles against it.
inline DisintegrationMap dirac_disintegration(const PointMap& T, const DiscreteMeasure& mu) {
    if (!same_space(mu.space(), T.source())) {
        throw err::invalid_argument("measure and map disagree on the source space");
    }
    std::map<int, DiscreteMeasure> conditionals;
    const int n = T.target()->size();
    for (int x = 0; x < T.source()->size(); ++x) {
        std::vector<Rational> w(static_cast<std::size_t>(n), Rational(0));
        w[static_cast<std::size_t>(T.apply(x))] = 1;
        conditionals.emplace(x, DiscreteMeasure(T.target(), std::move(w)));
    }
    return DisintegrationMap::probability_family(T.source(), T.target(), std::move(conditionals));
}

struct UniquenessViolation {
    std::string where;   // point or pair the check failed at
    std::string detail;
};

/// Report of the scaled-disintegration check: nu (x) eta reproduces gamma iff
/// nu restricted to the family's domain is absolutely continuous w.r.t. the
/// first marginal mu and the density rescales eta to the canonical
/// conditionals. Densities are reported per support point of mu.
struct UniquenessReport {
    bool reassembles = false;          // nu (x) eta == gamma
    bool absolutely_continuous = false; // nu|_C << mu on the domain C of eta
    bool density_rescales = false;      // (nu|_C / mu)(x) eta_x == gamma_x
    bool pass = false;
    std::map<int, Rational> density;    // x -> nu(x)/mu(x) on supp(mu)
    std::vector<UniquenessViolation> violations;
};

/// Checks whether (nu, eta) is the gamma disintegration in disguise: the pair
/// must reproduce gamma exactly, and then nu|_C << mu with density rescaling
/// eta_x to the canonical conditional gamma_x. C is the set of points where
/// eta carries positive mass.
inline UniquenessReport check_uniqueness_abs_continuity(const TransportPlan& gamma, const DiscreteMeasure& nu,
                                                        const DisintegrationMap& eta) {
    if (!same_space(nu.space(), eta.base()) || !same_space(gamma.row_space(), eta.base()) ||
        !same_space(gamma.col_space(), eta.target())) {
        throw err::invalid_argument("plan, measure and family must share spaces");
    }
    UniquenessReport out;
    const FiniteMetricSpace& X = *eta.base();
    const DiscreteMeasure mu = gamma.row_marginal();

    // (a) nu (x) eta == gamma, entrywise.
    out.reassembles = true;
    for (int x = 0; x < gamma.rows(); ++x) {
        const bool defined = eta.defined_at(x);
        for (int y = 0; y < gamma.cols(); ++y) {
            const Rational lhs = (defined && nu.weight(x) != 0) ? nu.weight(x) * eta.conditional(x).weight(y)
                                                                : Rational(0);
            if (lhs != gamma.mass(x, y)) {
                out.reassembles = false;
                out.violations.push_back({"(" + X.label(x) + "," + gamma.col_space()->label(y) + ")",
                                          "nu (x) eta = " + to_string(lhs) + " but plan mass is " +
                                              to_string(gamma.mass(x, y))});
            }
        }
    }

    // C: points where eta carries positive mass.
    std::vector<int> C;
    for (int x : eta.domain()) {
        if (eta.conditional(x).total_mass() > 0) C.push_back(x);
    }

    // (b) nu|_C << mu.
    out.absolutely_continuous = true;
    for (int x : C) {
        if (mu.weight(x) == 0 && nu.weight(x) != 0) {
            out.absolutely_continuous = false;
            out.violations.push_back({X.label(x), "nu charges a mu-null point inside C"});
        }
    }

    // (c) the density rescales eta to the canonical conditionals.
    out.density_rescales = true;
    for (int x : mu.support()) {
        const bool in_C = std::find(C.begin(), C.end(), x) != C.end();
        const Rational nu_C_x = in_C ? nu.weight(x) : Rational(0);
        out.density[x] = nu_C_x / mu.weight(x);
        for (int y = 0; y < gamma.cols(); ++y) {
            const Rational lhs = in_C ? nu_C_x * eta.conditional(x).weight(y) : Rational(0);
            if (lhs != gamma.mass(x, y)) {
                out.density_rescales = false;
                out.violations.push_back({"(" + X.label(x) + "," + gamma.col_space()->label(y) + ")",
                                          "density-scaled conditional misses the plan row"});
                break;
            }
        }
    }

    out.pass = out.reassembles && out.absolutely_continuous && out.density_rescales;
    return out;
}

} // namespace ot
