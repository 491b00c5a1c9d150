#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ot/interpolation.hpp"
#include "oracles.hpp"
#include "testutil.hpp"

using namespace ot;

namespace {

/// Segment cloud 0, 1, 3, 4 with mu0 on the outer pair, mu1 on the inner.
struct SegmentSetup {
    PointedEuclideanCloud cloud;
    DiscreteMeasure mu0, mu1;
};

SegmentSetup segment_setup() {
    PointedEuclideanCloud cloud({{0.0}, {1.0}, {3.0}, {4.0}}, {"p0", "p1", "p2", "p3"});
    DiscreteMeasure mu0(cloud.space(), {Rational(1, 2), Rational(0), Rational(0), Rational(1, 2)});
    DiscreteMeasure mu1(cloud.space(), {Rational(0), Rational(1, 2), Rational(1, 2), Rational(0)});
    return {std::move(cloud), std::move(mu0), std::move(mu1)};
}

/// Dense plan built from a sparse trajectory slice: mass at (points[i], points[j]).
TransportPlan trajectory_coupling(const InterpolationPath& path, int i, int j) {
    const std::size_t n = static_cast<std::size_t>(path.cloud().size());
    std::vector<Rational> m(n * n, Rational(0));
    for (const auto& tr : path.trajectories()) {
        const std::size_t a = static_cast<std::size_t>(tr.points.at(static_cast<std::size_t>(i)));
        const std::size_t b = static_cast<std::size_t>(tr.points.at(static_cast<std::size_t>(j)));
        m[a * n + b] += tr.weight;
    }
    return TransportPlan(path.cloud().space(), path.cloud().space(), std::move(m));
}

} // namespace

TEST_CASE("gluing couples plans by conditional independence", "[interpolation]") {
    auto X = make_space({"a", "b"}, {{0, 1}, {1, 0}});
    SECTION("diagonal couplings glue to the diagonal triple") {
        TransportPlan diag(X, X, {Rational(1, 2), Rational(0), Rational(0), Rational(1, 2)});
        Coupling3 m = glue(diag, diag);
        CHECK(m.mass(0, 0, 0) == Rational(1, 2));
        CHECK(m.mass(1, 1, 1) == Rational(1, 2));
        CHECK(m.mass(0, 0, 1) == Rational(0));
        CHECK(m.mass(0, 1, 1) == Rational(0));
    }
    SECTION("product couplings glue to the triple product") {
        DiscreteMeasure m1(X, {Rational(1, 4), Rational(3, 4)});
        DiscreteMeasure m2(X, {Rational(1, 2), Rational(1, 2)});
        DiscreteMeasure m3(X, {Rational(1, 3), Rational(2, 3)});
        Coupling3 m = glue(product_plan(m1, m2), product_plan(m2, m3));
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) {
                for (int l = 0; l < 2; ++l) {
                    CHECK(m.mass(i, j, l) == m1.weight(i) * m2.weight(j) * m3.weight(l));
                }
            }
        }
    }
    SECTION("mismatched middles are rejected") {
        TransportPlan left(X, X, {Rational(1, 2), Rational(0), Rational(0), Rational(1, 2)});
        // first marginal (1/4, 3/4) does not match left's middle (1/2, 1/2)
        TransportPlan right(X, X, {Rational(1, 4), Rational(0), Rational(1, 4), Rational(1, 2)});
        try {
            glue(left, right);
            FAIL("expected glue-mismatch");
        } catch (const Error& e) {
            CHECK(e.kind() == "glue-mismatch");
            CHECK(e.exit_code() == 2);
        }
    }
    SECTION("both two-sided marginals are exact on random pairs") {
        testutil::Rng rng(163);
        for (int trial = 0; trial < 40; ++trial) {
            auto A = testutil::random_metric_space(rng, testutil::pick(rng, 2, 4), "a");
            auto B = testutil::random_metric_space(rng, testutil::pick(rng, 2, 4), "b");
            auto C = testutil::random_metric_space(rng, testutil::pick(rng, 2, 4), "c");
            TransportPlan g12 = testutil::random_plan(rng, A, B);
            // build g23 with first marginal exactly the middle of g12
            DiscreteMeasure mid = g12.col_marginal();
            std::map<int, DiscreteMeasure> cond;
            for (int y : mid.support()) {
                cond.emplace(y, DiscreteMeasure(C, testutil::random_probability(rng, C->size())));
            }
            auto f = DisintegrationMap::probability_family(B, C, std::move(cond));
            TransportPlan g23 = reassemble(mid, f);

            Coupling3 m = glue(g12, g23);
            REQUIRE(m.marginal12().equals(g12));
            REQUIRE(m.marginal23().equals(g23));
            CHECK(m.marginal13().total_mass() == g12.total_mass());
        }
    }
}

TEST_CASE("a single displacement step pushes the optimal coupling", "[interpolation]") {
    SECTION("the endpoints are fixed points of the step") {
        auto s = segment_setup();
        CloudMeasure at0 = mccann_step(s.cloud, s.mu0, s.mu1, Rational(0));
        CHECK(at0.measure.weights() == s.mu0.weights());
        CloudMeasure at1 = mccann_step(s.cloud, s.mu0, s.mu1, Rational(1));
        CHECK(at1.measure.weights() == s.mu1.weights());
    }
    SECTION("Dirac to Dirac lands on the exact midpoint") {
        PointedEuclideanCloud cloud({{0.0}, {1.0}}, {"a", "b"});
        DiscreteMeasure d0(cloud.space(), {Rational(1), Rational(0)});
        DiscreteMeasure d1(cloud.space(), {Rational(0), Rational(1)});
        CloudMeasure mid = mccann_step(cloud, d0, d1, Rational(1, 2));
        REQUIRE(mid.cloud.size() == 3);
        auto idx = mid.cloud.find_point({0.5});
        REQUIRE(idx.has_value());
        CHECK(mid.measure.weight(*idx) == Rational(1));
    }
    SECTION("the crossing pair matches monotonically, not across") {
        auto s = segment_setup();
        CloudMeasure mid = mccann_step(s.cloud, s.mu0, s.mu1, Rational(1, 2));
        auto lo = mid.cloud.find_point({0.5});
        auto hi = mid.cloud.find_point({3.5});
        REQUIRE(lo.has_value());
        REQUIRE(hi.has_value());
        CHECK(mid.measure.weight(*lo) == Rational(1, 2));
        CHECK(mid.measure.weight(*hi) == Rational(1, 2));
        CHECK(mid.measure.total_mass() == Rational(1));
    }
    SECTION("times outside the unit interval are rejected") {
        auto s = segment_setup();
        CHECK_THROWS_AS(mccann_step(s.cloud, s.mu0, s.mu1, Rational(-1, 4)), Error);
        CHECK_THROWS_AS(mccann_step(s.cloud, s.mu0, s.mu1, Rational(5, 4)), Error);
    }
}

TEST_CASE("dyadic interpolation builds exact measures on the dyadic grid", "[interpolation]") {
    SECTION("equal endpoints give a constant path") {
        auto s = segment_setup();
        InterpolationPath path = dyadic_interpolation(s.cloud, s.mu0, s.mu0, 2);
        REQUIRE(path.steps() == 5);
        for (int i = 0; i < path.steps(); ++i) {
            for (int p = 0; p < s.cloud.size(); ++p) {
                CHECK(path.measure(i).weight(p) == s.mu0.weight(p));
            }
        }
        for (const auto& tr : path.trajectories()) {
            for (std::size_t i = 1; i < tr.points.size(); ++i) CHECK(tr.points[i] == tr.points[0]);
        }
    }
    SECTION("Dirac endpoints ride one straight trajectory") {
        PointedEuclideanCloud cloud({{0.0}, {1.0}}, {"a", "b"});
        DiscreteMeasure d0(cloud.space(), {Rational(1), Rational(0)});
        DiscreteMeasure d1(cloud.space(), {Rational(0), Rational(1)});
        InterpolationPath path = dyadic_interpolation(cloud, d0, d1, 3);
        REQUIRE(path.steps() == 9);
        REQUIRE(path.trajectories().size() == 1);
        CHECK(path.trajectories().front().weight == Rational(1));
        for (int i = 0; i < 9; ++i) {
            const double t = i / 8.0;
            auto idx = path.cloud().find_point({t});
            REQUIRE(idx.has_value());
            CHECK(path.measure(i).weight(*idx) == Rational(1));
        }
    }
    SECTION("the crossing pair interpolates through the expected atoms") {
        auto s = segment_setup();
        InterpolationPath path = dyadic_interpolation(s.cloud, s.mu0, s.mu1, 2);
        REQUIRE(path.steps() == 5);
        CHECK(path.times()[1] == Rational(1, 4));
        struct Want {
            int step;
            double lo, hi;
        };
        for (const auto& w : {Want{1, 0.25, 3.75}, Want{2, 0.5, 3.5}, Want{3, 0.75, 3.25}}) {
            auto lo = path.cloud().find_point({w.lo});
            auto hi = path.cloud().find_point({w.hi});
            REQUIRE(lo.has_value());
            REQUIRE(hi.has_value());
            CHECK(path.measure(w.step).weight(*lo) == Rational(1, 2));
            CHECK(path.measure(w.step).weight(*hi) == Rational(1, 2));
        }
    }
    SECTION("depth caps and bad depths raise the right errors") {
        auto s = segment_setup();
        CHECK_THROWS_AS(dyadic_interpolation(s.cloud, s.mu0, s.mu1, 0), Error);
        try {
            dyadic_interpolation(s.cloud, s.mu0, s.mu1, 7);
            FAIL("expected resource-limit");
        } catch (const Error& e) {
            CHECK(e.kind() == "resource-limit");
            CHECK(e.exit_code() == 4);
        }
        InterpolationConfig tight;
        tight.depth_cap = 1;
        CHECK_THROWS_AS(dyadic_interpolation(s.cloud, s.mu0, s.mu1, 2, tight), Error);
        InterpolationConfig tiny;
        tiny.trajectory_cap = 1;
        CHECK_THROWS_AS(dyadic_interpolation(s.cloud, s.mu0, s.mu1, 2, tiny), Error);
    }
}

TEST_CASE("trajectory laws evaluate to the stored measures", "[interpolation]") {
    testutil::Rng rng(271);
    for (int trial = 0; trial < 12; ++trial) {
        // dyadic line cloud: distinct grid points j/16, masses in eighths
        const int n = testutil::pick(rng, 2, 4);
        std::vector<std::vector<double>> pts;
        std::vector<int> grid{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
        std::shuffle(grid.begin(), grid.end(), rng);
        std::vector<std::string> labels;
        for (int i = 0; i < n; ++i) {
            pts.push_back({grid[static_cast<std::size_t>(i)] / 4.0});
            labels.push_back("g" + std::to_string(i));
        }
        PointedEuclideanCloud cloud(pts, labels);
        DiscreteMeasure a(cloud.space(), testutil::random_probability(rng, n));
        DiscreteMeasure b(cloud.space(), testutil::random_probability(rng, n));
        const int k = testutil::pick(rng, 1, 3);
        InterpolationPath path = dyadic_interpolation(cloud, a, b, k);

        Rational weight_total = 0;
        for (const auto& tr : path.trajectories()) weight_total += tr.weight;
        REQUIRE(weight_total == Rational(1));

        for (int i = 0; i < path.steps(); ++i) {
            REQUIRE(path.evaluation_law(i).equals(path.measure(i)));
        }
        // consecutive couplings have the stored measures as exact marginals
        for (int i = 0; i + 1 < path.steps(); ++i) {
            TransportPlan g = path.coupling_plan(i);
            CHECK(g.row_marginal().weights() == path.measure(i).weights());
            CHECK(g.col_marginal().weights() == path.measure(i + 1).weights());
        }
    }
}

TEST_CASE("couplings read off the trajectory law are optimal", "[interpolation]") {
    testutil::Rng rng(839);
    int oracle_checks = 0;
    for (int trial = 0; trial < 10; ++trial) {
        const int n = testutil::pick(rng, 2, 3);
        std::vector<std::vector<double>> pts;
        std::vector<int> grid{0, 1, 2, 3, 4, 5, 6, 7};
        std::shuffle(grid.begin(), grid.end(), rng);
        std::vector<std::string> labels;
        for (int i = 0; i < n; ++i) {
            pts.push_back({grid[static_cast<std::size_t>(i)] / 2.0});
            labels.push_back("g" + std::to_string(i));
        }
        PointedEuclideanCloud cloud(pts, labels);
        DiscreteMeasure a(cloud.space(), testutil::random_probability(rng, n));
        DiscreteMeasure b(cloud.space(), testutil::random_probability(rng, n));
        InterpolationPath path = dyadic_interpolation(cloud, a, b, 2);
        const FiniteMetricSpace& S = *path.cloud().space();

        for (int i = 0; i < path.steps(); ++i) {
            for (int j = i + 1; j < path.steps(); ++j) {
                TransportPlan g = trajectory_coupling(path, i, j);
                // exact cost of the trajectory coupling under d^2
                Rational traj_cost = 0;
                for (const auto& e : g.entries()) {
                    const double d = S.dist(e.row, e.col);
                    traj_cost += e.mass * rational_from_double(d * d);
                }
                const DiscreteMeasure mi = path.measure(i);
                const DiscreteMeasure mj = path.measure(j);
                const std::vector<int> si = mi.support();
                const std::vector<int> sj = mj.support();
                if (si.size() <= 4 && sj.size() <= 4) {
                    // small instance: exhaustive vertex enumeration
                    std::vector<Rational> supply, demand;
                    for (int p : si) supply.push_back(mi.weight(p));
                    for (int q : sj) demand.push_back(mj.weight(q));
                    const Rational best = oracle::transport_min_cost(supply, demand, [&](int r, int c) {
                        const double d =
                            S.dist(si[static_cast<std::size_t>(r)], sj[static_cast<std::size_t>(c)]);
                        return rational_from_double(d * d);
                    });
                    REQUIRE(traj_cost == best);
                    ++oracle_checks;
                } else {
                    // larger supports: the simplex value is the reference
                    REQUIRE(traj_cost == w2_on_supports(mi, mj).cost_exact);
                }
            }
        }
    }
    CHECK(oracle_checks > 20); // the oracle branch actually exercised
}

TEST_CASE("trajectories traverse straight segments with additive cost", "[interpolation]") {
    auto s = segment_setup();
    InterpolationPath path = dyadic_interpolation(s.cloud, s.mu0, s.mu1, 3);
    const auto& times = path.times();
    const FiniteMetricSpace& S = *path.cloud().space();
    for (const auto& tr : path.trajectories()) {
        const int T = static_cast<int>(tr.points.size());
        for (int i = 0; i < T; ++i) {
            for (int j = i + 1; j < T; ++j) {
                for (int l = j + 1; l < T; ++l) {
                    auto seg_cost = [&](int u, int v) {
                        const double d = S.dist(tr.points[static_cast<std::size_t>(u)],
                                                tr.points[static_cast<std::size_t>(v)]);
                        return d * d / to_double(times[static_cast<std::size_t>(v)] -
                                                 times[static_cast<std::size_t>(u)]);
                    };
                    CHECK(std::abs(seg_cost(i, j) + seg_cost(j, l) - seg_cost(i, l)) < 1e-9);
                }
            }
        }
    }
}

TEST_CASE("constant speed holds along dyadic paths", "[interpolation]") {
    SECTION("a Dirac pair is exactly constant speed") {
        PointedEuclideanCloud cloud({{0.0}, {1.0}}, {"a", "b"});
        DiscreteMeasure d0(cloud.space(), {Rational(1), Rational(0)});
        DiscreteMeasure d1(cloud.space(), {Rational(0), Rational(1)});
        InterpolationPath path = dyadic_interpolation(cloud, d0, d1, 2);
        ConstantSpeedReport r = check_constant_speed(path);
        REQUIRE(r.pass);
        CHECK(std::abs(r.w2_endpoints - 1.0) < 1e-12);
        CHECK(r.max_speed_deviation <= kConstantSpeedTol);
    }
    SECTION("the crossing pair passes at several depths") {
        auto s = segment_setup();
        for (int k : {2, 3}) {
            InterpolationPath path = dyadic_interpolation(s.cloud, s.mu0, s.mu1, k);
            ConstantSpeedReport r = check_constant_speed(path);
            REQUIRE(r.pass);
            CHECK(std::abs(r.w2_endpoints - 1.0) < 1e-12);
        }
    }
    SECTION("a corrupted frame is located") {
        auto s = segment_setup();
        InterpolationPath path = dyadic_interpolation(s.cloud, s.mu0, s.mu1, 2);
        std::vector<DiscreteMeasure> frames = path.measures();
        frames[2] = frames[0]; // midpoint replaced by the start
        InterpolationPath broken(path.cloud(), path.times(), std::move(frames), path.couplings(),
                                 path.trajectories());
        ConstantSpeedReport r = check_constant_speed(broken);
        REQUIRE_FALSE(r.pass);
        REQUIRE_FALSE(r.speed_violations.empty());
        bool mentions_corrupted = false;
        for (const auto& v : r.speed_violations) {
            if (v.i == 2 || v.j == 2) mentions_corrupted = true;
        }
        CHECK(mentions_corrupted);
    }
}

TEST_CASE("two-point cyclical monotonicity certifies optimality", "[interpolation]") {
    PointedEuclideanCloud cloud({{0.0}, {1.0}, {2.0}, {3.0}}, {"a", "b", "c", "d"});
    auto S = cloud.space();
    const CostMatrix c2 = cost_from_distance(*S, 2.0);
    DiscreteMeasure lo(S, {Rational(1, 2), Rational(1, 2), Rational(0), Rational(0)});
    DiscreteMeasure hi(S, {Rational(0), Rational(0), Rational(1, 2), Rational(1, 2)});

    SECTION("the monotone matching passes") {
        std::vector<Rational> m(16, Rational(0));
        m[0 * 4 + 2] = Rational(1, 2); // a -> c
        m[1 * 4 + 3] = Rational(1, 2); // b -> d
        TransportPlan mono(S, S, std::move(m));
        CyclicalMonotonicityReport r = check_cyclical_monotonicity(mono, c2);
        CHECK(r.pass);
        CHECK(r.pairs_checked == 1);
    }
    SECTION("the crossing matching fails with the exchange pair") {
        std::vector<Rational> m(16, Rational(0));
        m[0 * 4 + 3] = Rational(1, 2); // a -> d
        m[1 * 4 + 2] = Rational(1, 2); // b -> c
        TransportPlan cross(S, S, std::move(m));
        CyclicalMonotonicityReport r = check_cyclical_monotonicity(cross, c2);
        REQUIRE_FALSE(r.pass);
        REQUIRE(r.violations.size() == 1);
        // direct 9 + 1 = 10 versus swapped 4 + 4 = 8
        CHECK(r.violations[0].direct == 10.0);
        CHECK(r.violations[0].swapped == 8.0);
    }
    SECTION("solver outputs always pass") {
        testutil::Rng rng(443);
        for (int trial = 0; trial < 30; ++trial) {
            const int n = testutil::pick(rng, 2, 6);
            auto X = testutil::random_metric_space(rng, n, "x");
            DiscreteMeasure a(X, testutil::random_probability(rng, n));
            DiscreteMeasure b(X, testutil::random_probability(rng, n));
            const CostMatrix c = cost_from_distance(*X, 2.0);
            SolveReport sol = solve_kantorovich(a, b, c);
            CHECK(check_cyclical_monotonicity(sol.plan, c).pass);
        }
    }
    SECTION("sampling is deterministic under a fixed seed") {
        testutil::Rng rng(17);
        auto X = testutil::random_metric_space(rng, 6, "x");
        DiscreteMeasure a(X, testutil::random_probability(rng, 6));
        DiscreteMeasure b(X, testutil::random_probability(rng, 6));
        const CostMatrix c = cost_from_distance(*X, 2.0);
        SolveReport sol = solve_kantorovich(a, b, c);
        CyclicalMonotonicityReport r1 = check_cyclical_monotonicity(sol.plan, c, 5, 99);
        CyclicalMonotonicityReport r2 = check_cyclical_monotonicity(sol.plan, c, 5, 99);
        CHECK(r1.pairs_checked == r2.pairs_checked);
        CHECK(r1.pass);
        CHECK(r2.pass);
        CHECK(r1.pairs_checked == 5);
    }
}
