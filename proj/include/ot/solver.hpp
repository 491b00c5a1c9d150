#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "ot/measures.hpp"

namespace ot {

/// Dense nonnegative cost matrix, row-major. Costs are floats by design;
/// exactness lives in the masses, and reported plan costs are recomputed as
/// sum(flow * exact rational image of the float cost).
class CostMatrix {
public:
    CostMatrix(int rows, int cols, std::vector<double> values)
        : rows_(rows), cols_(cols), v_(std::move(values)) {
        if (rows_ <= 0 || cols_ <= 0) throw err::invalid_argument("cost matrix must be nonempty");
        if (v_.size() != static_cast<std::size_t>(rows_) * static_cast<std::size_t>(cols_)) {
            throw err::invalid_argument("cost matrix entry count mismatch");
        }
        for (double c : v_) {
            if (!std::isfinite(c) || c < 0.0) throw err::invalid_argument("cost entries must be nonnegative finite");
        }
    }

    int rows() const noexcept { return rows_; }
    int cols() const noexcept { return cols_; }
    double at(int i, int j) const {
        return v_[static_cast<std::size_t>(i) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(j)];
    }
    const std::vector<double>& values() const noexcept { return v_; }

private:
    int rows_, cols_;
    std::vector<double> v_;
};

inline double power_cost(double d, double p) {
    if (p == 1.0) return d;
    if (p == 2.0) return d * d;
    return std::pow(d, p);
}

/// Cost d(x,y)^p on a single space (rows and columns both index its points).
inline CostMatrix cost_from_distance(const FiniteMetricSpace& X, double p) {
    const int n = X.size();
    std::vector<double> v(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            v[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)] =
                power_cost(X.dist(i, j), p);
        }
    }
    return CostMatrix(n, n, std::move(v));
}

struct PlanEntry {
    int row, col;
    Rational mass;
};

/// A coupling between measures on two finite spaces: exact rational mass per
/// (row point, column point) pair. Marginals are exact sums.
class TransportPlan {
public:
    TransportPlan(SpacePtr row_space, SpacePtr col_space, std::vector<Rational> masses)
        : row_space_(std::move(row_space)), col_space_(std::move(col_space)), masses_(std::move(masses)) {
        if (!row_space_ || !col_space_) throw err::invalid_argument("plan needs row and column spaces");
        if (masses_.size() != static_cast<std::size_t>(row_space_->size()) * static_cast<std::size_t>(col_space_->size())) {
            throw err::invalid_argument("plan entry count mismatch");
        }
        for (const auto& m : masses_) {
            if (m < 0) throw err::invalid_argument("negative mass in plan");
        }
    }

    const SpacePtr& row_space() const noexcept { return row_space_; }
    const SpacePtr& col_space() const noexcept { return col_space_; }
    int rows() const noexcept { return row_space_->size(); }
    int cols() const noexcept { return col_space_->size(); }

    const Rational& mass(int i, int j) const {
        return masses_[static_cast<std::size_t>(i) * static_cast<std::size_t>(cols()) + static_cast<std::size_t>(j)];
    }
    const std::vector<Rational>& masses() const noexcept { return masses_; }

    DiscreteMeasure row_marginal() const {
        std::vector<Rational> w(static_cast<std::size_t>(rows()), Rational(0));
        for (int i = 0; i < rows(); ++i) {
            for (int j = 0; j < cols(); ++j) w[static_cast<std::size_t>(i)] += mass(i, j);
        }
        return DiscreteMeasure(row_space_, std::move(w));
    }

    DiscreteMeasure col_marginal() const {
        std::vector<Rational> w(static_cast<std::size_t>(cols()), Rational(0));
        for (int i = 0; i < rows(); ++i) {
            for (int j = 0; j < cols(); ++j) w[static_cast<std::size_t>(j)] += mass(i, j);
        }
        return DiscreteMeasure(col_space_, std::move(w));
    }

    Rational total_mass() const {
        Rational t = 0;
        for (const auto& m : masses_) t += m;
        return t;
    }

    /// Support entries in row-major order.
    std::vector<PlanEntry> entries() const {
        std::vector<PlanEntry> e;
        for (int i = 0; i < rows(); ++i) {
            for (int j = 0; j < cols(); ++j) {
                if (mass(i, j) > 0) e.push_back({i, j, mass(i, j)});
            }
        }
        return e;
    }

    TransportPlan transposed() const {
        std::vector<Rational> t(masses_.size());
        for (int i = 0; i < rows(); ++i) {
            for (int j = 0; j < cols(); ++j) {
                t[static_cast<std::size_t>(j) * static_cast<std::size_t>(rows()) + static_cast<std::size_t>(i)] = mass(i, j);
            }
        }
        return TransportPlan(col_space_, row_space_, std::move(t));
    }

    bool equals(const TransportPlan& other) const {
        return same_space(row_space_, other.row_space_) && same_space(col_space_, other.col_space_) &&
               masses_ == other.masses_;
    }

private:
    SpacePtr row_space_, col_space_;
    std::vector<Rational> masses_;
};

/// mu (x) nu, the product coupling.
inline TransportPlan product_plan(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    std::vector<Rational> m;
    m.reserve(static_cast<std::size_t>(mu.size()) * static_cast<std::size_t>(nu.size()));
    for (int i = 0; i < mu.size(); ++i) {
        for (int j = 0; j < nu.size(); ++j) m.push_back(mu.weight(i) * nu.weight(j));
    }
    return TransportPlan(mu.space(), nu.space(), std::move(m));
}

/// Exact cost of a plan against a float cost matrix: every float is promoted
/// to the dyadic rational it denotes, so the sum is exact and distributive.
inline Rational plan_cost_exact(const TransportPlan& plan, const CostMatrix& c) {
    if (plan.rows() != c.rows() || plan.cols() != c.cols()) {
        throw err::invalid_argument("plan and cost matrix dimensions differ");
    }
    Rational total = 0;
    for (int i = 0; i < plan.rows(); ++i) {
        for (int j = 0; j < plan.cols(); ++j) {
            const Rational& m = plan.mass(i, j);
            if (m != 0) total += m * rational_from_double(c.at(i, j));
        }
    }
    return total;
}

namespace simplex {

/// Solution of min sum c_ij x_ij over the transportation polytope
/// U(supply, demand): exact flows plus the final tree potentials.
template <class CostT>
struct Result {
    std::vector<Rational> flow; // row-major m*n
    std::vector<CostT> u, v;    // row / column potentials, u[0] == 0
    int iterations = 0;
};

/// Primal network simplex specialized to the bipartite transportation
/// problem. Costs are a template parameter: double for user-facing solves,
/// Rational when a downstream bound must be exact. Determinism is part of the
/// contract:
///   - initial basis: northwest corner (m+n-1 arcs, degenerate zeros kept),
///   - entering arc: first row-major arc with reduced cost below the
///     threshold (-1e-12 for double costs, exact < 0 for rational costs),
///   - leaving arc: exact rational min-ratio, ties broken by lexicographic
///     (row, col) order.
/// The entering/leaving pair is Bland's rule, so cycling cannot occur and the
/// run is identical for identical inputs.
template <class CostT, class CostFn>
Result<CostT> solve(const std::vector<Rational>& supply, const std::vector<Rational>& demand, CostFn&& cost) {
    const int m = static_cast<int>(supply.size());
    const int n = static_cast<int>(demand.size());
    Result<CostT> res;
    res.flow.assign(static_cast<std::size_t>(m) * static_cast<std::size_t>(n), Rational(0));
    auto flow_at = [&](int i, int j) -> Rational& {
        return res.flow[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)];
    };

    // Northwest corner start: walks from (0,0) to (m-1,n-1) advancing one
    // index per step, which yields exactly m+n-1 basic arcs.
    std::vector<std::pair<int, int>> basis;
    basis.reserve(static_cast<std::size_t>(m + n - 1));
    {
        std::vector<Rational> ra = supply, rb = demand;
        int i = 0, j = 0;
        for (;;) {
            const Rational q = std::min(ra[static_cast<std::size_t>(i)], rb[static_cast<std::size_t>(j)]);
            flow_at(i, j) = q;
            ra[static_cast<std::size_t>(i)] -= q;
            rb[static_cast<std::size_t>(j)] -= q;
            basis.emplace_back(i, j);
            if (i == m - 1 && j == n - 1) break;
            if (ra[static_cast<std::size_t>(i)] == 0 && i + 1 < m) {
                ++i;
            } else {
                ++j;
            }
        }
    }

    // Nodes 0..m-1 are rows, m..m+n-1 are columns.
    const int N = m + n;
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(N)); // indices into basis
    auto rebuild_adj = [&]() {
        for (auto& a : adj) a.clear();
        for (std::size_t b = 0; b < basis.size(); ++b) {
            adj[static_cast<std::size_t>(basis[b].first)].push_back(static_cast<int>(b));
            adj[static_cast<std::size_t>(m + basis[b].second)].push_back(static_cast<int>(b));
        }
    };

    std::vector<CostT> u(static_cast<std::size_t>(m)), v(static_cast<std::size_t>(n));
    auto compute_potentials = [&]() {
        rebuild_adj();
        std::vector<char> done(static_cast<std::size_t>(N), 0);
        std::deque<int> queue;
        u[0] = CostT(0);
        done[0] = 1;
        queue.push_back(0);
        while (!queue.empty()) {
            const int node = queue.front();
            queue.pop_front();
            for (int b : adj[static_cast<std::size_t>(node)]) {
                const int r = basis[static_cast<std::size_t>(b)].first;
                const int c = m + basis[static_cast<std::size_t>(b)].second;
                const int other = (node == r) ? c : r;
                if (done[static_cast<std::size_t>(other)]) continue;
                const CostT cij = cost(basis[static_cast<std::size_t>(b)].first, basis[static_cast<std::size_t>(b)].second);
                if (other == c) {
                    v[static_cast<std::size_t>(c - m)] = cij - u[static_cast<std::size_t>(r)];
                } else {
                    u[static_cast<std::size_t>(r)] = cij - v[static_cast<std::size_t>(c - m)];
                }
                done[static_cast<std::size_t>(other)] = 1;
                queue.push_back(other);
            }
        }
    };

    const CostT enter_threshold = [] {
        if constexpr (std::is_same_v<CostT, double>) {
            return -1e-12;
        } else {
            return CostT(0);
        }
    }();

    const int iteration_cap = 10000 + 200 * N;
    for (;;) {
        if (res.iterations > iteration_cap) {
            throw err::resource_limit("transportation simplex exceeded its pivot budget");
        }
        compute_potentials();

        int ei = -1, ej = -1;
        for (int i = 0; i < m && ei < 0; ++i) {
            for (int j = 0; j < n; ++j) {
                const CostT reduced = cost(i, j) - u[static_cast<std::size_t>(i)] - v[static_cast<std::size_t>(j)];
                if (reduced < enter_threshold) {
                    // Skip arcs already basic (their reduced cost is exactly
                    // zero with rational costs but may hit float noise).
                    bool basic = false;
                    for (const auto& [bi, bj] : basis) {
                        if (bi == i && bj == j) {
                            basic = true;
                            break;
                        }
                    }
                    if (!basic) {
                        ei = i;
                        ej = j;
                        break;
                    }
                }
            }
        }
        if (ei < 0) break; // optimal

        // Unique tree path from row node ei to column node m+ej.
        std::vector<int> parent_node(static_cast<std::size_t>(N), -1);
        std::vector<int> parent_arc(static_cast<std::size_t>(N), -1);
        {
            std::deque<int> queue;
            std::vector<char> seen(static_cast<std::size_t>(N), 0);
            queue.push_back(ei);
            seen[static_cast<std::size_t>(ei)] = 1;
            while (!queue.empty()) {
                const int node = queue.front();
                queue.pop_front();
                if (node == m + ej) break;
                for (int b : adj[static_cast<std::size_t>(node)]) {
                    const int r = basis[static_cast<std::size_t>(b)].first;
                    const int c = m + basis[static_cast<std::size_t>(b)].second;
                    const int other = (node == r) ? c : r;
                    if (seen[static_cast<std::size_t>(other)]) continue;
                    seen[static_cast<std::size_t>(other)] = 1;
                    parent_node[static_cast<std::size_t>(other)] = node;
                    parent_arc[static_cast<std::size_t>(other)] = b;
                    queue.push_back(other);
                }
            }
        }

        // Walk back from the column node; path arcs alternate -,+ starting
        // with - at the entering row (flow conservation around the cycle).
        std::vector<int> path_arcs;
        for (int node = m + ej; node != ei; node = parent_node[static_cast<std::size_t>(node)]) {
            path_arcs.push_back(parent_arc[static_cast<std::size_t>(node)]);
        }
        std::reverse(path_arcs.begin(), path_arcs.end());

        Rational delta(-1);
        int leave_pos = -1;
        for (std::size_t k = 0; k < path_arcs.size(); ++k) {
            if (k % 2 != 0) continue; // only arcs that lose flow
            const auto& [bi, bj] = basis[static_cast<std::size_t>(path_arcs[k])];
            const Rational& f = flow_at(bi, bj);
            const bool better =
                delta < 0 || f < delta ||
                (f == delta && std::make_pair(bi, bj) <
                                   std::make_pair(basis[static_cast<std::size_t>(path_arcs[static_cast<std::size_t>(leave_pos)])].first,
                                                  basis[static_cast<std::size_t>(path_arcs[static_cast<std::size_t>(leave_pos)])].second));
            if (better) {
                delta = f;
                leave_pos = static_cast<int>(k);
            }
        }

        flow_at(ei, ej) += delta;
        for (std::size_t k = 0; k < path_arcs.size(); ++k) {
            const auto& [bi, bj] = basis[static_cast<std::size_t>(path_arcs[k])];
            if (k % 2 == 0) {
                flow_at(bi, bj) -= delta;
            } else {
                flow_at(bi, bj) += delta;
            }
        }
        basis[static_cast<std::size_t>(path_arcs[static_cast<std::size_t>(leave_pos)])] = {ei, ej};
        ++res.iterations;
    }

    res.u = std::move(u);
    res.v = std::move(v);
    return res;
}

} // namespace simplex

struct SolveReport {
    TransportPlan plan;
    Rational cost_exact;
    double cost = 0.0;
    std::vector<double> row_potentials, col_potentials;
    int iterations = 0;
    std::string status; // "optimal"
};

/// Exact optimal coupling between mu and nu for the given cost. Requires
/// exactly equal total masses; the returned plan is a vertex of the
/// transportation polytope with rational entries, and cost_exact is its
/// exact cost against the float matrix.
inline SolveReport solve_kantorovich(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostMatrix& c) {
    if (mu.size() != c.rows() || nu.size() != c.cols()) {
        throw err::invalid_argument("measures and cost matrix dimensions differ");
    }
    if (mu.total_mass() != nu.total_mass()) {
        throw err::infeasible("total masses differ; the transportation polytope is empty");
    }
    auto res = simplex::solve<double>(mu.weights(), nu.weights(),
                                      [&](int i, int j) { return c.at(i, j); });
    TransportPlan plan(mu.space(), nu.space(), std::move(res.flow));
    Rational exact = plan_cost_exact(plan, c);
    SolveReport report{std::move(plan), exact, to_double(exact), std::move(res.u), std::move(res.v),
                       res.iterations, "optimal"};
    return report;
}

/// W_p(mu, nu) on a common space, p >= 1. The solve is canonicalized on the
/// lexicographically smaller weight vector so W_p(mu,nu) and W_p(nu,mu) are
/// bitwise identical.
inline double wasserstein(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p = 2.0) {
    if (!std::isfinite(p) || p < 1.0) throw err::invalid_parameter("wasserstein order must satisfy p >= 1");
    if (!same_space(mu.space(), nu.space())) {
        throw err::invalid_argument("wasserstein distance needs both measures on one space");
    }
    if (!mu.is_probability() || !nu.is_probability()) {
        throw err::invalid_argument("wasserstein distance is defined for probability measures");
    }
    const DiscreteMeasure* a = &mu;
    const DiscreteMeasure* b = &nu;
    if (std::lexicographical_compare(nu.weights().begin(), nu.weights().end(), mu.weights().begin(),
                                     mu.weights().end())) {
        std::swap(a, b);
    }
    const CostMatrix c = cost_from_distance(*mu.space(), p);
    const SolveReport report = solve_kantorovich(*a, *b, c);
    if (p == 1.0) return report.cost;
    if (p == 2.0) return std::sqrt(report.cost);
    return std::pow(report.cost, 1.0 / p);
}

struct W1DualReport {
    std::vector<double> potential; // one value per point, 1-Lipschitz
    double primal_value = 0.0;
    double dual_value = 0.0;
    double duality_gap = 0.0;
    double max_lip_violation = 0.0;
    bool lip_feasible = false;
};

/// Kantorovich-Rubinstein certificate for W_1: a 1-Lipschitz potential phi
/// with sum phi d(mu - nu) equal to the primal value. phi is read off the
/// final simplex potentials via phi_i = min_j (d(i,j) - v_j), which is a
/// c-transform and thus 1-Lipschitz up to float noise.
inline W1DualReport w1_dual(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    if (!same_space(mu.space(), nu.space())) {
        throw err::invalid_argument("dual potentials need both measures on one space");
    }
    if (!mu.is_probability() || !nu.is_probability()) {
        throw err::invalid_argument("dual potentials are defined for probability measures");
    }
    const FiniteMetricSpace& X = *mu.space();
    const CostMatrix c = cost_from_distance(X, 1.0);
    const SolveReport report = solve_kantorovich(mu, nu, c);

    W1DualReport out;
    out.primal_value = report.cost;
    out.potential.resize(static_cast<std::size_t>(X.size()));
    for (int i = 0; i < X.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (int j = 0; j < X.size(); ++j) {
            best = std::min(best, X.dist(i, j) - report.col_potentials[static_cast<std::size_t>(j)]);
        }
        out.potential[static_cast<std::size_t>(i)] = best;
    }
    double dual = 0.0;
    for (int i = 0; i < X.size(); ++i) {
        dual += out.potential[static_cast<std::size_t>(i)] * to_double(mu.weight(i) - nu.weight(i));
    }
    out.dual_value = dual;
    out.duality_gap = std::abs(out.primal_value - out.dual_value);
    for (int a = 0; a < X.size(); ++a) {
        for (int b = 0; b < X.size(); ++b) {
            const double gap = std::abs(out.potential[static_cast<std::size_t>(a)] -
                                        out.potential[static_cast<std::size_t>(b)]) -
                               X.dist(a, b);
            out.max_lip_violation = std::max(out.max_lip_violation, gap);
        }
    }
    out.lip_feasible = out.max_lip_violation <= 1e-12;
    return out;
}

struct MarginalViolation {
    int index;
    Rational expected, actual;
};

struct PlanVerifyReport {
    bool spaces_match = false;
    bool pass = false;
    std::vector<MarginalViolation> row_violations, col_violations;
};

/// Diagnostic: does the plan couple mu and nu exactly? Never throws; shape
/// mismatches simply fail the report.
inline PlanVerifyReport verify_plan(const TransportPlan& plan, const DiscreteMeasure& mu,
                                    const DiscreteMeasure& nu) {
    PlanVerifyReport out;
    out.spaces_match = same_space(plan.row_space(), mu.space()) && same_space(plan.col_space(), nu.space());
    if (!out.spaces_match) return out;
    const DiscreteMeasure rows = plan.row_marginal();
    const DiscreteMeasure cols = plan.col_marginal();
    for (int i = 0; i < mu.size(); ++i) {
        if (rows.weight(i) != mu.weight(i)) out.row_violations.push_back({i, mu.weight(i), rows.weight(i)});
    }
    for (int j = 0; j < nu.size(); ++j) {
        if (cols.weight(j) != nu.weight(j)) out.col_violations.push_back({j, nu.weight(j), cols.weight(j)});
    }
    out.pass = out.row_violations.empty() && out.col_violations.empty();
    return out;
}

struct SparseEntry {
    int row, col; // indices into the common space
    Rational mass;
};

struct W2Result {
    double w2 = 0.0;
    Rational cost_exact;
    std::vector<SparseEntry> entries; // optimal coupling on the union of supports
};

/// W_2 between probabilities on one space, solved on the supports only; the
/// metric is the base-space metric restricted to the union of supports.
/// Useful when measures live on a large ambient space but touch few points.
inline W2Result w2_on_supports(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    if (!same_space(mu.space(), nu.space())) {
        throw err::invalid_argument("w2 needs both measures on one space");
    }
    if (!mu.is_probability() || !nu.is_probability()) {
        throw err::invalid_argument("w2 is defined for probability measures");
    }
    const FiniteMetricSpace& X = *mu.space();
    const std::vector<int> sa = mu.support();
    const std::vector<int> sb = nu.support();
    std::vector<Rational> a, b;
    a.reserve(sa.size());
    b.reserve(sb.size());
    for (int i : sa) a.push_back(mu.weight(i));
    for (int j : sb) b.push_back(nu.weight(j));
    auto res = simplex::solve<double>(a, b, [&](int i, int j) {
        const double d = X.dist(sa[static_cast<std::size_t>(i)], sb[static_cast<std::size_t>(j)]);
        return d * d;
    });
    W2Result out;
    for (std::size_t i = 0; i < sa.size(); ++i) {
        for (std::size_t j = 0; j < sb.size(); ++j) {
            const Rational& f = res.flow[i * sb.size() + j];
            if (f != 0) {
                out.entries.push_back({sa[i], sb[j], f});
                const double d = X.dist(sa[i], sb[j]);
                out.cost_exact += f * rational_from_double(d * d);
            }
        }
    }
    out.w2 = std::sqrt(to_double(out.cost_exact));
    return out;
}

} // namespace ot
