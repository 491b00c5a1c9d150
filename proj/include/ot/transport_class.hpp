#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ot/disintegration.hpp"

namespace ot {

/// Image of mu under a conditional family, as a measure over measures:
/// Lambda = sum over supp(mu) of mu(x) delta_{f_x}. Equal conditionals merge
/// exactly, so the atoms are the distinct conditionals.
inline MeasureOverMeasures pushforward_map(const DisintegrationMap& f, const DiscreteMeasure& mu) {
    if (!same_space(mu.space(), f.base())) {
        throw err::invalid_argument("measure and family disagree on the base space");
    }
    std::vector<std::pair<DiscreteMeasure, Rational>> atoms;
    for (int x : mu.support()) {
        if (!f.defined_at(x)) {
            throw err::missing_conditional("measure charges '" + mu.space()->label(x) +
                                           "' but the family has no conditional there");
        }
        atoms.emplace_back(f.conditional(x), mu.weight(x));
    }
    return MeasureOverMeasures::from_atoms(atoms);
}

/// The transport class of a plan: its first marginal together with the
/// distribution of its conditionals.
struct TransportClass {
    MeasureOverMeasures lambda;
    DiscreteMeasure mu;
};

inline TransportClass transport_class_of(const TransportPlan& gamma) {
    auto [mu, f] = disintegrate(gamma, Axis::First);
    auto lambda = pushforward_map(f, mu);
    return TransportClass{std::move(lambda), std::move(mu)};
}

/// Two plans with the same first marginal lie in the same transport class iff
/// the pushforwards of their disintegration maps agree as measures over
/// measures. Comparing plans with different first marginals is a category
/// error and is rejected.
inline bool equivalent_by_disintegration(const TransportPlan& gamma, const TransportPlan& eta) {
    if (!same_space(gamma.row_space(), eta.row_space()) || !same_space(gamma.col_space(), eta.col_space())) {
        throw err::invalid_comparison("plans live on different spaces");
    }
    const DiscreteMeasure mu_g = gamma.row_marginal();
    const DiscreteMeasure mu_e = eta.row_marginal();
    if (!mu_g.equals(mu_e)) {
        throw err::invalid_comparison("plans have different first marginals");
    }
    return transport_class_of(gamma).lambda == transport_class_of(eta).lambda;
}

/// Dirac special case: the classes of x -> delta_{T(x)} and x -> delta_{S(x)}
/// coincide iff the image measures T#mu and S#mu coincide.
inline bool check_dirac_equivalence(const PointMap& T, const PointMap& S, const DiscreteMeasure& mu) {
    if (!same_space(T.source(), S.source()) || !same_space(T.target(), S.target())) {
        throw err::invalid_comparison("maps live on different spaces");
    }
    const auto lambda_T = pushforward_map(dirac_disintegration(T, mu), mu);
    const auto lambda_S = pushforward_map(dirac_disintegration(S, mu), mu);
    return lambda_T == lambda_S;
}

/// A class Lambda targets nu when its barycenter is nu: integrating the
/// identity over Lambda yields the second marginal every member plan shares.
inline bool lambda_consistent(const MeasureOverMeasures& L, const DiscreteMeasure& nu) {
    if (!same_space(L.target_space(), nu.space())) {
        throw err::invalid_argument("class and target measure live on different spaces");
    }
    return barycenter_of_classes(L).equals(nu);
}

/// Exact cost of sending x to the measure lam: integral of c(x, .) d lam.
inline Rational abstract_cost_exact(int x, const DiscreteMeasure& lam, const CostMatrix& c) {
    if (x < 0 || x >= c.rows()) throw err::invalid_argument("point index out of range for the cost matrix");
    if (lam.size() != c.cols()) throw err::invalid_argument("measure size does not match cost columns");
    Rational total = 0;
    for (int y = 0; y < lam.size(); ++y) {
        if (lam.weight(y) != 0) total += rational_from_double(c.at(x, y)) * lam.weight(y);
    }
    return total;
}

inline double abstract_cost(int x, const DiscreteMeasure& lam, const CostMatrix& c) {
    return to_double(abstract_cost_exact(x, lam, c));
}

inline constexpr int kMkSupportCap = 12;
inline constexpr long kMkNodeBudget = 20000000;

struct MkClassSolution {
    DisintegrationMap assignment; // supp(mu) -> atoms of Lambda
    Rational cost_exact;
    double cost = 0.0;
    Rational relaxation_exact;   // exact LP lower bound, never above cost_exact
    double relaxation_bound = 0.0;
    long nodes_explored = 0;
};

/// Minimum-cost member of the transport class described by (mu, Lambda):
/// finds a map f from supp(mu) into the atoms of Lambda whose pushforward is
/// exactly Lambda and whose abstract cost sum mu(x) ctilde(x, f(x)) is
/// minimal. Solved by depth-first branch and bound over atom assignments with
/// exact rational costs; the reported lower bound is the Kantorovich
/// relaxation between mu and the atom weights, solved with exact rational
/// costs so bound <= optimum holds exactly.
///
/// The search is exponential in |supp(mu)|, which is capped (default 12);
/// larger supports or an exhausted node budget raise resource-limit.
inline MkClassSolution solve_mk_in_class(const CostMatrix& c, const DiscreteMeasure& mu,
                                         const MeasureOverMeasures& L, int support_cap = kMkSupportCap,
                                         long node_budget = kMkNodeBudget) {
    if (mu.size() != c.rows()) throw err::invalid_argument("measure size does not match cost rows");
    if (L.target_space()->size() != c.cols()) {
        throw err::invalid_argument("class target size does not match cost columns");
    }
    if (L.total_weight() != mu.total_mass()) {
        throw err::infeasible_class("atom weights and mu carry different total mass");
    }
    const std::vector<int> S = mu.support();
    if (S.empty()) throw err::invalid_argument("mu has empty support");
    if (static_cast<int>(S.size()) > support_cap) {
        throw err::resource_limit("support size " + std::to_string(S.size()) + " exceeds the search cap " +
                                  std::to_string(support_cap));
    }
    const auto& atoms = L.atoms();
    const int A = static_cast<int>(atoms.size());

    // Exact abstract costs: unit[s][a] = ctilde(x_s, atom_a), and the
    // objective contribution ct[s][a] = mu(x_s) * unit[s][a].
    std::vector<std::vector<Rational>> unit(S.size(), std::vector<Rational>(static_cast<std::size_t>(A)));
    std::vector<std::vector<Rational>> ct(S.size(), std::vector<Rational>(static_cast<std::size_t>(A)));
    for (std::size_t s = 0; s < S.size(); ++s) {
        for (int a = 0; a < A; ++a) {
            unit[s][static_cast<std::size_t>(a)] =
                abstract_cost_exact(S[s], atoms[static_cast<std::size_t>(a)].measure, c);
            ct[s][static_cast<std::size_t>(a)] = mu.weight(S[s]) * unit[s][static_cast<std::size_t>(a)];
        }
    }
    // Admissible lower bound for pruning: each remaining point takes its
    // cheapest atom, capacities ignored.
    std::vector<Rational> suffix(S.size() + 1, Rational(0));
    for (std::size_t s = S.size(); s-- > 0;) {
        Rational best = ct[s][0];
        for (int a = 1; a < A; ++a) best = std::min(best, ct[s][static_cast<std::size_t>(a)]);
        suffix[s] = suffix[s + 1] + best;
    }

    std::vector<Rational> remaining;
    remaining.reserve(static_cast<std::size_t>(A));
    for (const auto& atom : atoms) remaining.push_back(atom.weight);

    std::vector<int> pick(S.size(), -1), best_pick;
    std::optional<Rational> best_cost;
    long nodes = 0;

    auto dfs = [&](auto&& self, std::size_t s, const Rational& acc) -> void {
        if (++nodes > node_budget) {
            throw err::resource_limit("class search exhausted its node budget");
        }
        if (best_cost && acc + suffix[s] >= *best_cost) return;
        if (s == S.size()) {
            best_cost = acc;
            best_pick = pick;
            return;
        }
        const Rational& need = mu.weight(S[s]);
        for (int a = 0; a < A; ++a) {
            if (remaining[static_cast<std::size_t>(a)] < need) continue;
            remaining[static_cast<std::size_t>(a)] -= need;
            pick[s] = a;
            self(self, s + 1, acc + ct[s][static_cast<std::size_t>(a)]);
            remaining[static_cast<std::size_t>(a)] += need;
        }
        pick[s] = -1;
    };
    dfs(dfs, 0, Rational(0));

    if (!best_cost) {
        throw err::infeasible_class("no assignment of atoms reproduces the class weights exactly");
    }

    std::map<int, DiscreteMeasure> conditionals;
    for (std::size_t s = 0; s < S.size(); ++s) {
        conditionals.emplace(S[s], atoms[static_cast<std::size_t>(best_pick[s])].measure);
    }
    auto assignment =
        DisintegrationMap::probability_family(mu.space(), L.target_space(), std::move(conditionals));

    // Kantorovich relaxation between mu|supp and the atom weights, with exact
    // rational costs: any feasible map is a feasible relaxation plan, so this
    // bound can never exceed the optimum.
    std::vector<Rational> supply;
    supply.reserve(S.size());
    for (int x : S) supply.push_back(mu.weight(x));
    auto relax = simplex::solve<Rational>(supply, remaining /* == atom weights again */, [&](int i, int j) {
        return unit[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    });
    Rational relax_cost = 0;
    for (std::size_t i = 0; i < S.size(); ++i) {
        for (int a = 0; a < A; ++a) {
            const Rational& f = relax.flow[i * static_cast<std::size_t>(A) + static_cast<std::size_t>(a)];
            if (f != 0) relax_cost += f * unit[i][static_cast<std::size_t>(a)];
        }
    }

    MkClassSolution out{std::move(assignment), *best_cost,           to_double(*best_cost),
                        relax_cost,            to_double(relax_cost), nodes};
    return out;
}

/// Diagnostic distance between two transport classes targeting the same
/// space: W_1 between the atom distributions, with W_1 between atoms as the
/// ground cost.
inline double class_distance(const MeasureOverMeasures& A, const MeasureOverMeasures& B) {
    if (!same_space(A.target_space(), B.target_space())) {
        throw err::invalid_comparison("classes target different spaces");
    }
    if (A.total_weight() != B.total_weight()) {
        throw err::invalid_comparison("classes carry different total weight");
    }
    const int m = A.atom_count(), n = B.atom_count();
    std::vector<double> ground(static_cast<std::size_t>(m) * static_cast<std::size_t>(n));
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            ground[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)] =
                wasserstein(A.atoms()[static_cast<std::size_t>(i)].measure,
                            B.atoms()[static_cast<std::size_t>(j)].measure, 1.0);
        }
    }
    std::vector<Rational> wa, wb;
    for (const auto& atom : A.atoms()) wa.push_back(atom.weight);
    for (const auto& atom : B.atoms()) wb.push_back(atom.weight);
    auto res = simplex::solve<double>(wa, wb, [&](int i, int j) {
        return ground[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)];
    });
    Rational total = 0;
    for (std::size_t i = 0; i < wa.size(); ++i) {
        for (std::size_t j = 0; j < wb.size(); ++j) {
            const Rational& f = res.flow[i * wb.size() + j];
            if (f != 0) total += f * rational_from_double(ground[i * wb.size() + j]);
        }
    }
    return to_double(total);
}

} // namespace ot
