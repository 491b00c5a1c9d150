#pragma once

// Seeded instance generators shared by the unit suite and the acceptance
// binary. Everything is deterministic in the seed; masses are small exact
// rationals so hand-checkable failures reproduce verbatim.

#include <algorithm>
#include <random>
#include <vector>

#include "ot/measures.hpp"
#include "ot/solver.hpp"

namespace testutil {

using ot::DiscreteMeasure;
using ot::Rational;
using ot::SpacePtr;

using Rng = std::mt19937_64;

inline int pick(Rng& rng, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

/// Nonnegative rational weights k_i / den with at least one positive entry.
inline std::vector<Rational> random_weights(Rng& rng, int n, int max_num = 9, int den = 12) {
    std::vector<Rational> w(static_cast<std::size_t>(n));
    bool any = false;
    for (auto& x : w) {
        const int k = pick(rng, 0, max_num);
        x = Rational(k, den);
        any = any || k > 0;
    }
    if (!any) w[static_cast<std::size_t>(pick(rng, 0, n - 1))] = Rational(1, den);
    return w;
}

/// Strictly positive probability vector with denominator = n * max.
inline std::vector<Rational> random_probability(Rng& rng, int n, int max_num = 9) {
    std::vector<Rational> w(static_cast<std::size_t>(n));
    Rational total = 0;
    for (auto& x : w) {
        x = Rational(pick(rng, 1, max_num));
        total += x;
    }
    for (auto& x : w) x /= total;
    return w;
}

/// Points on the dyadic line grid j/64, pairwise distinct, metric |a-b|.
/// Dyadic coordinates keep downstream arithmetic (midpoints, squares)
/// exactly representable.
inline SpacePtr line_space(Rng& rng, int n, const std::string& prefix = "x") {
    std::vector<int> grid(129);
    for (int j = 0; j <= 128; ++j) grid[static_cast<std::size_t>(j)] = j;
    std::shuffle(grid.begin(), grid.end(), rng);
    std::vector<double> coords;
    for (int i = 0; i < n; ++i) coords.push_back(grid[static_cast<std::size_t>(i)] / 64.0);
    std::sort(coords.begin(), coords.end());
    std::vector<std::string> labels;
    std::vector<std::vector<double>> d(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n)));
    for (int i = 0; i < n; ++i) {
        labels.push_back(prefix + std::to_string(i));
        for (int j = 0; j < n; ++j) d[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = std::abs(coords[static_cast<std::size_t>(i)] - coords[static_cast<std::size_t>(j)]);
    }
    return ot::make_space(std::move(labels), d);
}

/// Random metric by min-plus closure of a random symmetric matrix; triangle
/// holds exactly for the closed matrix.
inline SpacePtr random_metric_space(Rng& rng, int n, const std::string& prefix = "x") {
    std::vector<std::vector<double>> d(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n), 0.0));
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double v = pick(rng, 8, 64) / 16.0; // [0.5, 4] on a 1/16 grid
            d[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = v;
            d[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = v;
        }
    }
    for (int k = 0; k < n; ++k) {
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                d[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                    std::min(d[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)],
                             d[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] +
                                 d[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)]);
            }
        }
    }
    std::vector<std::string> labels;
    for (int i = 0; i < n; ++i) labels.push_back(prefix + std::to_string(i));
    return ot::make_space(std::move(labels), d);
}

/// A dense rational plan; its own marginals define a feasible (mu, nu) pair.
inline ot::TransportPlan random_plan(Rng& rng, const SpacePtr& X, const SpacePtr& Y, int max_num = 6,
                                     int den = 24) {
    std::vector<Rational> m(static_cast<std::size_t>(X->size()) * static_cast<std::size_t>(Y->size()));
    bool any = false;
    for (auto& x : m) {
        const int k = pick(rng, 0, max_num);
        x = Rational(k, den);
        any = any || k > 0;
    }
    if (!any) m[0] = Rational(1, den);
    return ot::TransportPlan(X, Y, std::move(m));
}

/// Feasible transport instance: equal-mass (mu, nu) built as the marginals
/// of a hidden random plan.
struct Instance {
    SpacePtr X, Y;
    DiscreteMeasure mu, nu;
};

inline Instance random_instance(Rng& rng, int m, int n) {
    SpacePtr X = line_space(rng, m, "x");
    SpacePtr Y = line_space(rng, n, "y");
    const ot::TransportPlan hidden = random_plan(rng, X, Y);
    return Instance{X, Y, hidden.row_marginal(), hidden.col_marginal()};
}

/// Random cost matrix on a 1/8 grid, nonnegative.
inline ot::CostMatrix random_cost(Rng& rng, int rows, int cols) {
    std::vector<double> v(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
    for (auto& x : v) x = pick(rng, 0, 40) / 8.0;
    return ot::CostMatrix(rows, cols, std::move(v));
}

} // namespace testutil
