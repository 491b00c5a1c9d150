#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ot/parallel.hpp"
#include "ot/solver.hpp"

namespace ot {

/// A coupling of three finite spaces: exact rational mass per point triple.
class Coupling3 {
public:
    Coupling3(SpacePtr s1, SpacePtr s2, SpacePtr s3, std::vector<Rational> masses)
        : s1_(std::move(s1)), s2_(std::move(s2)), s3_(std::move(s3)), masses_(std::move(masses)) {
        if (!s1_ || !s2_ || !s3_) throw err::invalid_argument("triple coupling needs three spaces");
        const std::size_t want = static_cast<std::size_t>(s1_->size()) * static_cast<std::size_t>(s2_->size()) *
                                 static_cast<std::size_t>(s3_->size());
        if (masses_.size() != want) throw err::invalid_argument("triple coupling entry count mismatch");
        for (const auto& m : masses_) {
            if (m < 0) throw err::invalid_argument("negative mass in triple coupling");
        }
    }

    const SpacePtr& space1() const noexcept { return s1_; }
    const SpacePtr& space2() const noexcept { return s2_; }
    const SpacePtr& space3() const noexcept { return s3_; }

    const Rational& mass(int i, int j, int l) const {
        return masses_[(static_cast<std::size_t>(i) * static_cast<std::size_t>(s2_->size()) +
                        static_cast<std::size_t>(j)) *
                           static_cast<std::size_t>(s3_->size()) +
                       static_cast<std::size_t>(l)];
    }

    TransportPlan marginal12() const {
        std::vector<Rational> m(static_cast<std::size_t>(s1_->size()) * static_cast<std::size_t>(s2_->size()),
                                Rational(0));
        for (int i = 0; i < s1_->size(); ++i) {
            for (int j = 0; j < s2_->size(); ++j) {
                Rational t = 0;
                for (int l = 0; l < s3_->size(); ++l) t += mass(i, j, l);
                m[static_cast<std::size_t>(i) * static_cast<std::size_t>(s2_->size()) + static_cast<std::size_t>(j)] = t;
            }
        }
        return TransportPlan(s1_, s2_, std::move(m));
    }

    TransportPlan marginal23() const {
        std::vector<Rational> m(static_cast<std::size_t>(s2_->size()) * static_cast<std::size_t>(s3_->size()),
                                Rational(0));
        for (int j = 0; j < s2_->size(); ++j) {
            for (int l = 0; l < s3_->size(); ++l) {
                Rational t = 0;
                for (int i = 0; i < s1_->size(); ++i) t += mass(i, j, l);
                m[static_cast<std::size_t>(j) * static_cast<std::size_t>(s3_->size()) + static_cast<std::size_t>(l)] = t;
            }
        }
        return TransportPlan(s2_, s3_, std::move(m));
    }

    TransportPlan marginal13() const {
        std::vector<Rational> m(static_cast<std::size_t>(s1_->size()) * static_cast<std::size_t>(s3_->size()),
                                Rational(0));
        for (int i = 0; i < s1_->size(); ++i) {
            for (int l = 0; l < s3_->size(); ++l) {
                Rational t = 0;
                for (int j = 0; j < s2_->size(); ++j) t += mass(i, j, l);
                m[static_cast<std::size_t>(i) * static_cast<std::size_t>(s3_->size()) + static_cast<std::size_t>(l)] = t;
            }
        }
        return TransportPlan(s1_, s3_, std::move(m));
    }

private:
    SpacePtr s1_, s2_, s3_;
    std::vector<Rational> masses_;
};

/// Gluing Lemma, finite form: couples gamma12 and gamma23 along their common
/// middle marginal by conditional independence,
/// m(x,y,z) = gamma12(x,y) gamma23(y,z) / mu2(y). The middle marginals must
/// agree exactly.
inline Coupling3 glue(const TransportPlan& gamma12, const TransportPlan& gamma23) {
    if (!same_space(gamma12.col_space(), gamma23.row_space())) {
        throw err::glue_mismatch("middle spaces differ");
    }
    const DiscreteMeasure mid_left = gamma12.col_marginal();
    const DiscreteMeasure mid_right = gamma23.row_marginal();
    if (!mid_left.equals(mid_right)) {
        throw err::glue_mismatch("middle marginals differ; the plans do not share a coupling point");
    }
    const int n1 = gamma12.rows(), n2 = gamma12.cols(), n3 = gamma23.cols();
    std::vector<Rational> masses(static_cast<std::size_t>(n1) * static_cast<std::size_t>(n2) *
                                     static_cast<std::size_t>(n3),
                                 Rational(0));
    for (int j = 0; j < n2; ++j) {
        const Rational& mj = mid_left.weight(j);
        if (mj == 0) continue;
        for (int i = 0; i < n1; ++i) {
            const Rational& a = gamma12.mass(i, j);
            if (a == 0) continue;
            for (int l = 0; l < n3; ++l) {
                const Rational& b = gamma23.mass(j, l);
                if (b == 0) continue;
                masses[(static_cast<std::size_t>(i) * static_cast<std::size_t>(n2) + static_cast<std::size_t>(j)) *
                           static_cast<std::size_t>(n3) +
                       static_cast<std::size_t>(l)] = a * b / mj;
            }
        }
    }
    return Coupling3(gamma12.row_space(), gamma12.col_space(), gamma23.col_space(), std::move(masses));
}

struct CloudMeasure {
    PointedEuclideanCloud cloud;
    DiscreteMeasure measure;
};

namespace detail {

/// Grows a cloud by registering points, merging bitwise-equal coordinates
/// with existing ones. Coordinates of displaced points are computed in exact
/// rational arithmetic and rounded once to double.
class CloudGrower {
public:
    explicit CloudGrower(const PointedEuclideanCloud& base) : base_(base) {}

    int index_of(const std::vector<double>& coords) {
        if (auto hit = base_.find_point(coords)) return *hit;
        auto it = pending_index_.find(coords);
        if (it != pending_index_.end()) return it->second;
        const int idx = base_.size() + static_cast<int>(pending_.size());
        pending_index_.emplace(coords, idx);
        pending_.push_back(coords);
        return idx;
    }

    int grown_size() const { return base_.size() + static_cast<int>(pending_.size()); }

    PointedEuclideanCloud grown() const {
        if (pending_.empty()) return base_;
        PointedEuclideanCloud out = base_;
        int counter = base_.size();
        for (const auto& coords : pending_) {
            std::string label = "p" + std::to_string(counter++);
            while (out.space()->has_label(label)) label = "p" + std::to_string(counter++);
            out = out.with_point_appended(coords, std::move(label));
        }
        return out;
    }

private:
    const PointedEuclideanCloud& base_;
    std::vector<std::vector<double>> pending_;
    std::map<std::vector<double>, int> pending_index_;
};

inline std::vector<double> displace_coords(const std::vector<double>& x, const std::vector<double>& z,
                                           const Rational& t) {
    std::vector<double> out(x.size());
    const Rational s = Rational(1) - t;
    for (std::size_t c = 0; c < x.size(); ++c) {
        out[c] = to_double(s * rational_from_double(x[c]) + t * rational_from_double(z[c]));
    }
    return out;
}

} // namespace detail

/// One displacement step: pushes an optimal quadratic-cost coupling of
/// (mu0, mu1) forward under (x,z) -> (1-t)x + t z. The returned cloud is the
/// input cloud plus any new intermediate points (exact coordinate dedup).
inline CloudMeasure mccann_step(const PointedEuclideanCloud& cloud, const DiscreteMeasure& mu0,
                                const DiscreteMeasure& mu1, const Rational& t) {
    if (!same_space(mu0.space(), cloud.space()) || !same_space(mu1.space(), cloud.space())) {
        throw err::invalid_argument("measures must live on the cloud");
    }
    if (t < 0 || t > 1) throw err::invalid_parameter("interpolation time must lie in [0,1]");
    const W2Result opt = w2_on_supports(mu0, mu1);
    detail::CloudGrower grower(cloud);
    std::vector<std::pair<int, Rational>> hits;
    for (const auto& e : opt.entries) {
        const auto coords = detail::displace_coords(cloud.point(e.row), cloud.point(e.col), t);
        hits.emplace_back(grower.index_of(coords), e.mass);
    }
    PointedEuclideanCloud grown = grower.grown();
    std::vector<Rational> w(static_cast<std::size_t>(grown.size()), Rational(0));
    for (const auto& [idx, mass] : hits) w[static_cast<std::size_t>(idx)] += mass;
    DiscreteMeasure m(grown.space(), std::move(w));
    return CloudMeasure{std::move(grown), std::move(m)};
}

struct Trajectory {
    std::vector<int> points; // one cloud index per stored time
    Rational weight;
};

inline constexpr int kDefaultDepthCap = 6;
inline constexpr long kDefaultTrajectoryCap = 200000;

struct InterpolationConfig {
    int depth_cap = kDefaultDepthCap;
    long trajectory_cap = kDefaultTrajectoryCap;
};

/// A discrete displacement interpolation: measures indexed by the dyadic grid
/// i/2^k on one common cloud, couplings between consecutive times, and the
/// induced law on piecewise-linear trajectories.
class InterpolationPath {
public:
    InterpolationPath(PointedEuclideanCloud cloud, std::vector<Rational> times,
                      std::vector<DiscreteMeasure> measures, std::vector<std::vector<SparseEntry>> couplings,
                      std::vector<Trajectory> trajectories)
        : cloud_(std::move(cloud)), times_(std::move(times)), measures_(std::move(measures)),
          couplings_(std::move(couplings)), trajectories_(std::move(trajectories)) {}

    const PointedEuclideanCloud& cloud() const noexcept { return cloud_; }
    const std::vector<Rational>& times() const noexcept { return times_; }
    int steps() const noexcept { return static_cast<int>(times_.size()); }
    const DiscreteMeasure& measure(int i) const { return measures_.at(static_cast<std::size_t>(i)); }
    const std::vector<DiscreteMeasure>& measures() const noexcept { return measures_; }

    /// Coupling between times i and i+1 (sparse, global cloud indices).
    const std::vector<SparseEntry>& coupling(int i) const { return couplings_.at(static_cast<std::size_t>(i)); }
    const std::vector<std::vector<SparseEntry>>& couplings() const noexcept { return couplings_; }

    /// The same coupling as a dense plan on the cloud's space.
    TransportPlan coupling_plan(int i) const {
        const std::size_t n = static_cast<std::size_t>(cloud_.size());
        std::vector<Rational> masses(n * n, Rational(0));
        for (const auto& e : coupling(i)) {
            masses[static_cast<std::size_t>(e.row) * n + static_cast<std::size_t>(e.col)] += e.mass;
        }
        return TransportPlan(cloud_.space(), cloud_.space(), std::move(masses));
    }

    const std::vector<Trajectory>& trajectories() const noexcept { return trajectories_; }

    /// Law of the evaluation at time index i, read off the trajectories; by
    /// construction it equals measure(i) exactly.
    DiscreteMeasure evaluation_law(int i) const {
        std::vector<Rational> w(static_cast<std::size_t>(cloud_.size()), Rational(0));
        for (const auto& tr : trajectories_) {
            w[static_cast<std::size_t>(tr.points.at(static_cast<std::size_t>(i)))] += tr.weight;
        }
        return DiscreteMeasure(cloud_.space(), std::move(w));
    }

private:
    PointedEuclideanCloud cloud_;
    std::vector<Rational> times_;
    std::vector<DiscreteMeasure> measures_;
    std::vector<std::vector<SparseEntry>> couplings_;
    std::vector<Trajectory> trajectories_;
};

/// Dyadic displacement interpolation of depth k between two probabilities on
/// one cloud. Level by level, each interval (s,t) gets the midpoint
/// pushforward of an optimal quadratic coupling of (mu_s, mu_t); the two
/// halves of that coupling, (x, mid) and (mid, z), become the consecutive
/// couplings of the refined grid, and the trajectory law is their gluing by
/// conditional independence along all shared marginals. All masses stay
/// exact; only coordinates and costs are floats.
inline InterpolationPath dyadic_interpolation(const PointedEuclideanCloud& cloud, const DiscreteMeasure& mu0,
                                              const DiscreteMeasure& mu1, int k,
                                              const InterpolationConfig& config = {}) {
    if (!same_space(mu0.space(), cloud.space()) || !same_space(mu1.space(), cloud.space())) {
        throw err::invalid_argument("measures must live on the cloud");
    }
    if (!mu0.is_probability() || !mu1.is_probability()) {
        throw err::invalid_argument("interpolation endpoints must be probabilities");
    }
    if (k < 1) throw err::invalid_parameter("interpolation depth must be at least 1");
    if (k > config.depth_cap) {
        throw err::resource_limit("interpolation depth " + std::to_string(k) + " exceeds the cap " +
                                  std::to_string(config.depth_cap));
    }

    PointedEuclideanCloud W = cloud;
    std::vector<Rational> times{Rational(0), Rational(1)};
    std::vector<std::vector<Rational>> weights{mu0.weights(), mu1.weights()}; // index-aligned with W

    // couplings[i] couples times[i] and times[i+1]; rebuilt every level.
    std::vector<std::vector<SparseEntry>> couplings;

    for (int level = 1; level <= k; ++level) {
        const std::size_t intervals = times.size() - 1;

        // Phase 1: optimal couplings on the frozen cloud, independent solves.
        std::vector<W2Result> solved(intervals);
        {
            std::vector<DiscreteMeasure> hosted;
            hosted.reserve(times.size());
            for (const auto& w : weights) hosted.emplace_back(W.space(), w);
            parallel_for(intervals, [&](std::size_t i) {
                solved[i] = w2_on_supports(hosted[i], hosted[i + 1]);
            });
        }

        // Phase 2: register midpoints in interval order, split each coupling
        // into its (left, mid) and (mid, right) halves.
        detail::CloudGrower grower(W);
        const Rational half(1, 2);
        std::vector<int> mid_of; // per entry per interval, flattened
        std::vector<std::size_t> offsets(intervals + 1, 0);
        for (std::size_t i = 0; i < intervals; ++i) {
            for (const auto& e : solved[i].entries) {
                const auto coords = detail::displace_coords(W.point(e.row), W.point(e.col), half);
                mid_of.push_back(grower.index_of(coords));
            }
            offsets[i + 1] = mid_of.size();
        }
        PointedEuclideanCloud grownW = grower.grown();
        const std::size_t newsize = static_cast<std::size_t>(grownW.size());

        std::vector<Rational> new_times;
        std::vector<std::vector<Rational>> new_weights;
        std::vector<std::vector<SparseEntry>> new_couplings;
        for (std::size_t i = 0; i < intervals; ++i) {
            std::vector<Rational> mid_weights(newsize, Rational(0));
            std::vector<SparseEntry> left, right;
            std::map<std::pair<int, int>, Rational> left_acc, right_acc;
            for (std::size_t e = 0; e < solved[i].entries.size(); ++e) {
                const SparseEntry& ent = solved[i].entries[e];
                const int mid = mid_of[offsets[i] + e];
                mid_weights[static_cast<std::size_t>(mid)] += ent.mass;
                left_acc[{ent.row, mid}] += ent.mass;
                right_acc[{mid, ent.col}] += ent.mass;
            }
            for (const auto& [key, mass] : left_acc) left.push_back({key.first, key.second, mass});
            for (const auto& [key, mass] : right_acc) right.push_back({key.first, key.second, mass});

            new_times.push_back(times[i]);
            auto wl = weights[i];
            wl.resize(newsize, Rational(0));
            new_weights.push_back(std::move(wl));
            new_couplings.push_back(std::move(left));

            new_times.push_back((times[i] + times[i + 1]) * half);
            new_weights.push_back(std::move(mid_weights));
            new_couplings.push_back(std::move(right));
        }
        new_times.push_back(times.back());
        auto wlast = weights.back();
        wlast.resize(newsize, Rational(0));
        new_weights.push_back(std::move(wlast));

        W = std::move(grownW);
        times = std::move(new_times);
        weights = std::move(new_weights);
        couplings = std::move(new_couplings);
    }

    std::vector<DiscreteMeasure> measures;
    measures.reserve(times.size());
    for (auto& w : weights) measures.emplace_back(W.space(), std::move(w));

    // Trajectory law: Markov chain through the consecutive couplings. The
    // kernel out of x at step i is coupling_i(x, .) / mu_i(x).
    std::vector<Trajectory> trajectories;
    {
        const std::size_t T = times.size();
        std::vector<std::map<int, std::vector<std::pair<int, Rational>>>> kernel(couplings.size());
        for (std::size_t i = 0; i < couplings.size(); ++i) {
            for (const auto& e : couplings[i]) kernel[i][e.row].emplace_back(e.col, e.mass);
        }
        struct Frame {
            std::vector<int> path;
            Rational weight;
        };
        std::vector<Frame> stack;
        for (int x : measures[0].support()) {
            stack.push_back({{x}, measures[0].weight(x)});
        }
        // Depth-first in reverse so the output is ordered by first support
        // point, then successive choices.
        std::reverse(stack.begin(), stack.end());
        while (!stack.empty()) {
            Frame f = std::move(stack.back());
            stack.pop_back();
            if (f.path.size() == T) {
                trajectories.push_back({std::move(f.path), std::move(f.weight)});
                if (static_cast<long>(trajectories.size()) > config.trajectory_cap) {
                    throw err::resource_limit("trajectory count exceeds the cap " +
                                              std::to_string(config.trajectory_cap));
                }
                continue;
            }
            const std::size_t i = f.path.size() - 1;
            const int x = f.path.back();
            auto it = kernel[i].find(x);
            if (it == kernel[i].end()) continue; // unreachable: marginals match
            const Rational& mass_x = measures[i].weight(x);
            const auto& outs = it->second;
            for (std::size_t o = outs.size(); o-- > 0;) {
                Frame g;
                g.path = f.path;
                g.path.push_back(outs[o].first);
                g.weight = f.weight * outs[o].second / mass_x;
                stack.push_back(std::move(g));
            }
        }
    }

    return InterpolationPath(std::move(W), std::move(times), std::move(measures), std::move(couplings),
                             std::move(trajectories));
}

struct SpeedViolation {
    int i, j;       // time indices
    double got, want;
};

struct AdditivityViolation {
    int i, j, l;    // time indices
    double lhs, rhs;
};

struct ConstantSpeedReport {
    bool pass = false;
    double w2_endpoints = 0.0;
    double max_speed_deviation = 0.0;
    double max_additivity_deviation = 0.0;
    std::vector<SpeedViolation> speed_violations;
    std::vector<AdditivityViolation> additivity_violations;
};

inline constexpr double kConstantSpeedTol = 1e-7;

/// Geodesic diagnostics along a path: W_2(mu_s, mu_t) must equal
/// (t - s) W_2(mu_0, mu_1) for every stored pair, and the rescaled costs
/// C(s,t) = W_2(mu_s, mu_t)^2 / (t - s) must add along triples.
inline ConstantSpeedReport check_constant_speed(const InterpolationPath& path,
                                                double tol = kConstantSpeedTol) {
    const int T = path.steps();
    std::vector<double> w2(static_cast<std::size_t>(T) * static_cast<std::size_t>(T), 0.0);
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < T; ++i) {
        for (int j = i + 1; j < T; ++j) pairs.emplace_back(i, j);
    }
    parallel_for(pairs.size(), [&](std::size_t p) {
        const auto [i, j] = pairs[p];
        const double d = w2_on_supports(path.measure(i), path.measure(j)).w2;
        w2[static_cast<std::size_t>(i) * static_cast<std::size_t>(T) + static_cast<std::size_t>(j)] = d;
    });
    auto at = [&](int i, int j) {
        return w2[static_cast<std::size_t>(i) * static_cast<std::size_t>(T) + static_cast<std::size_t>(j)];
    };

    ConstantSpeedReport out;
    out.w2_endpoints = at(0, T - 1);
    for (const auto& [i, j] : pairs) {
        const double want = to_double(path.times()[static_cast<std::size_t>(j)] -
                                      path.times()[static_cast<std::size_t>(i)]) *
                            out.w2_endpoints;
        const double dev = std::abs(at(i, j) - want);
        out.max_speed_deviation = std::max(out.max_speed_deviation, dev);
        if (dev > tol) out.speed_violations.push_back({i, j, at(i, j), want});
    }
    auto cost = [&](int i, int j) {
        const double dt = to_double(path.times()[static_cast<std::size_t>(j)] -
                                    path.times()[static_cast<std::size_t>(i)]);
        return at(i, j) * at(i, j) / dt;
    };
    for (int i = 0; i < T; ++i) {
        for (int j = i + 1; j < T; ++j) {
            for (int l = j + 1; l < T; ++l) {
                const double lhs = cost(i, j) + cost(j, l);
                const double rhs = cost(i, l);
                const double dev = std::abs(lhs - rhs);
                out.max_additivity_deviation = std::max(out.max_additivity_deviation, dev);
                if (dev > tol) out.additivity_violations.push_back({i, j, l, lhs, rhs});
            }
        }
    }
    out.pass = out.speed_violations.empty() && out.additivity_violations.empty();
    return out;
}

struct CyclicalViolation {
    std::size_t entry_a, entry_b; // indices into the plan's support entries
    double direct, swapped;
};

struct CyclicalMonotonicityReport {
    bool pass = false;
    long pairs_checked = 0;
    std::vector<CyclicalViolation> violations;
};

inline constexpr double kCyclicalTol = 1e-12;

/// Two-point cyclical monotonicity of a plan's support: for support pairs
/// (x,y), (x',y'), swapping targets may not lower the cost by more than the
/// tolerance. Checks all pairs by default; a positive sample budget draws
/// pairs with the seeded generator instead.
inline CyclicalMonotonicityReport check_cyclical_monotonicity(const TransportPlan& gamma, const CostMatrix& c,
                                                              long sample_pairs = 0,
                                                              std::uint64_t seed = 0) {
    if (gamma.rows() != c.rows() || gamma.cols() != c.cols()) {
        throw err::invalid_argument("plan and cost matrix dimensions differ");
    }
    const auto entries = gamma.entries();
    const std::size_t s = entries.size();
    CyclicalMonotonicityReport out;
    auto check_pair = [&](std::size_t a, std::size_t b) {
        const double direct = c.at(entries[a].row, entries[a].col) + c.at(entries[b].row, entries[b].col);
        const double swapped = c.at(entries[a].row, entries[b].col) + c.at(entries[b].row, entries[a].col);
        ++out.pairs_checked;
        if (direct > swapped + kCyclicalTol) out.violations.push_back({a, b, direct, swapped});
    };
    const long all_pairs = static_cast<long>(s * (s - 1) / 2);
    if (sample_pairs <= 0 || sample_pairs >= all_pairs) {
        for (std::size_t a = 0; a < s; ++a) {
            for (std::size_t b = a + 1; b < s; ++b) check_pair(a, b);
        }
    } else {
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<std::size_t> pick(0, s - 1);
        long drawn = 0;
        while (drawn < sample_pairs) {
            const std::size_t a = pick(rng), b = pick(rng);
            if (a == b) continue;
            check_pair(std::min(a, b), std::max(a, b));
            ++drawn;
        }
    }
    out.pass = out.violations.empty();
    return out;
}

} // namespace ot
