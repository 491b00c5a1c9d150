#include <catch2/catch_amalgamated.hpp>

#include "ot/disintegration.hpp"
#include "testutil.hpp"

using namespace ot;

namespace {

SpacePtr space_x() {
    return make_space({"x1", "x2", "x3"}, {{0, 1, 2}, {1, 0, 1}, {2, 1, 0}});
}
SpacePtr space_y() {
    return make_space({"y1", "y2"}, {{0, 1}, {1, 0}});
}

/// x1 splits evenly between y1 and y2; x2 and x3 send everything to y2.
TransportPlan split_plan() {
    return TransportPlan(space_x(), space_y(),
                         {Rational(1, 6), Rational(1, 6), Rational(0), Rational(1, 3), Rational(0),
                          Rational(1, 3)});
}

} // namespace

TEST_CASE("disintegration splits plans into exact conditional families", "[disintegration]") {
    SECTION("a product plan has constant conditionals") {
        auto X = space_x();
        auto Y = space_y();
        DiscreteMeasure mu(X, {Rational(1, 2), Rational(1, 4), Rational(1, 4)});
        DiscreteMeasure nu(Y, {Rational(1, 3), Rational(2, 3)});
        auto [marginal, f] = disintegrate(product_plan(mu, nu), Axis::First);
        CHECK(marginal.equals(mu));
        for (int x : f.domain()) {
            CHECK(f.conditional(x).equals(nu));
        }
    }
    SECTION("a diagonal plan disintegrates into Diracs") {
        auto X = space_x();
        std::vector<Rational> diag(9, Rational(0));
        for (int i = 0; i < 3; ++i) diag[static_cast<std::size_t>(i) * 3 + static_cast<std::size_t>(i)] = Rational(1, 3);
        auto [marginal, f] = disintegrate(TransportPlan(X, X, std::move(diag)), Axis::First);
        CHECK(marginal.weights() == std::vector<Rational>(3, Rational(1, 3)));
        for (int x = 0; x < 3; ++x) {
            CHECK(f.conditional(x).weight(x) == Rational(1));
        }
    }
    SECTION("the split plan yields the half-half and Dirac conditionals") {
        auto [marginal, f] = disintegrate(split_plan(), Axis::First);
        CHECK(marginal.weights() == std::vector<Rational>(3, Rational(1, 3)));
        CHECK(f.conditional(0).weights() == std::vector<Rational>{Rational(1, 2), Rational(1, 2)});
        CHECK(f.conditional(1).weights() == std::vector<Rational>{Rational(0), Rational(1)});
        CHECK(f.conditional(2).weights() == std::vector<Rational>{Rational(0), Rational(1)});
    }
    SECTION("zero-mass rows stay undefined") {
        auto X = space_x();
        auto Y = space_y();
        TransportPlan g(X, Y, {Rational(1, 2), Rational(0), Rational(0), Rational(0), Rational(0), Rational(1, 2)});
        auto [marginal, f] = disintegrate(g, Axis::First);
        CHECK(marginal.weight(1) == Rational(0));
        CHECK_FALSE(f.defined_at(1));
        try {
            f.conditional(1);
            FAIL("expected missing-conditional");
        } catch (const Error& e) {
            CHECK(e.kind() == "missing-conditional");
            CHECK(e.exit_code() == 2);
        }
        CHECK(f.domain() == std::vector<int>{0, 2});
    }
    SECTION("the second axis disintegrates the transpose") {
        auto [marginal, f] = disintegrate(split_plan(), Axis::Second);
        CHECK(marginal.weights() == std::vector<Rational>{Rational(1, 6), Rational(5, 6)});
        // conditionals live on the row space now
        CHECK(f.conditional(0).weights() == std::vector<Rational>{Rational(1), Rational(0), Rational(0)});
        CHECK(f.conditional(1).weights() ==
              std::vector<Rational>{Rational(1, 5), Rational(2, 5), Rational(2, 5)});
    }
    SECTION("conditionals charge only positive plan entries") {
        testutil::Rng rng(211);
        for (int trial = 0; trial < 40; ++trial) {
            auto X = testutil::random_metric_space(rng, testutil::pick(rng, 2, 6), "r");
            auto Y = testutil::random_metric_space(rng, testutil::pick(rng, 2, 6), "c");
            TransportPlan g = testutil::random_plan(rng, X, Y);
            auto [marginal, f] = disintegrate(g, Axis::First);
            for (int x : f.domain()) {
                for (int y = 0; y < g.cols(); ++y) {
                    if (g.mass(x, y) == 0) CHECK(f.conditional(x).weight(y) == Rational(0));
                }
            }
        }
    }
}

TEST_CASE("reassembly inverts disintegration exactly", "[disintegration]") {
    SECTION("a Dirac base produces the product with its conditional") {
        auto X = space_x();
        auto Y = space_y();
        DiscreteMeasure nu(Y, {Rational(1, 3), Rational(2, 3)});
        std::map<int, DiscreteMeasure> cond;
        cond.emplace(0, nu);
        auto f = DisintegrationMap::probability_family(X, Y, std::move(cond));
        DiscreteMeasure dirac(X, {Rational(1), Rational(0), Rational(0)});
        TransportPlan g = reassemble(dirac, f);
        CHECK(g.mass(0, 0) == Rational(1, 3));
        CHECK(g.mass(0, 1) == Rational(2, 3));
        CHECK(g.mass(1, 0) == Rational(0));
        CHECK(g.mass(2, 1) == Rational(0));
    }
    SECTION("the split plan reassembles from its family") {
        auto [marginal, f] = disintegrate(split_plan(), Axis::First);
        CHECK(reassemble(marginal, f).equals(split_plan()));
    }
    SECTION("mass without a conditional is an error") {
        auto X = space_x();
        auto Y = space_y();
        DiscreteMeasure nu(Y, {Rational(1, 2), Rational(1, 2)});
        std::map<int, DiscreteMeasure> cond;
        cond.emplace(0, nu);
        auto f = DisintegrationMap::probability_family(X, Y, std::move(cond));
        DiscreteMeasure mu(X, {Rational(1, 2), Rational(1, 2), Rational(0)});
        try {
            reassemble(mu, f);
            FAIL("expected missing-conditional");
        } catch (const Error& e) {
            CHECK(e.kind() == "missing-conditional");
        }
    }
    SECTION("roundtrip is the identity on random plans, both axes") {
        testutil::Rng rng(353);
        for (int trial = 0; trial < 60; ++trial) {
            auto X = testutil::random_metric_space(rng, testutil::pick(rng, 1, 7), "a");
            auto Y = testutil::random_metric_space(rng, testutil::pick(rng, 1, 7), "b");
            TransportPlan g = testutil::random_plan(rng, X, Y);
            auto [mu, f] = disintegrate(g, Axis::First);
            REQUIRE(reassemble(mu, f).equals(g));
            auto [nu, h] = disintegrate(g, Axis::Second);
            REQUIRE(reassemble(nu, h).equals(g.transposed()));
        }
    }
    SECTION("the reassembled second marginal is the mixture of conditionals") {
        testutil::Rng rng(459);
        for (int trial = 0; trial < 30; ++trial) {
            auto X = testutil::random_metric_space(rng, testutil::pick(rng, 2, 6), "a");
            auto Y = testutil::random_metric_space(rng, testutil::pick(rng, 2, 6), "b");
            TransportPlan g = testutil::random_plan(rng, X, Y);
            auto [mu, f] = disintegrate(g, Axis::First);
            std::vector<Rational> mix(static_cast<std::size_t>(Y->size()), Rational(0));
            for (int x : f.domain()) {
                for (int y = 0; y < Y->size(); ++y) {
                    mix[static_cast<std::size_t>(y)] += mu.weight(x) * f.conditional(x).weight(y);
                }
            }
            CHECK(DiscreteMeasure(Y, std::move(mix)).equals(g.col_marginal()));
        }
    }
}

TEST_CASE("deterministic couplings disintegrate into Dirac families", "[disintegration]") {
    auto X = space_x();
    auto Y = space_y();
    SECTION("the identity map gives Diracs at each point") {
        DiscreteMeasure mu(X, {Rational(1, 3), Rational(1, 3), Rational(1, 3)});
        PointMap id(X, X, {0, 1, 2});
        auto f = dirac_disintegration(id, mu);
        for (int x = 0; x < 3; ++x) CHECK(f.conditional(x).weight(x) == Rational(1));
    }
    SECTION("a constant map gives equal conditionals") {
        DiscreteMeasure mu(X, {Rational(1, 3), Rational(1, 3), Rational(1, 3)});
        PointMap t(X, Y, {1, 1, 1});
        auto f = dirac_disintegration(t, mu);
        for (int x = 0; x < 3; ++x) {
            CHECK(f.conditional(x).weights() == std::vector<Rational>{Rational(0), Rational(1)});
        }
    }
    SECTION("reassembling the Dirac family reproduces the pushforward") {
        testutil::Rng rng(881);
        for (int trial = 0; trial < 30; ++trial) {
            const int m = testutil::pick(rng, 2, 6);
            const int n = testutil::pick(rng, 2, 5);
            auto A = testutil::random_metric_space(rng, m, "s");
            auto B = testutil::random_metric_space(rng, n, "t");
            DiscreteMeasure mu(A, testutil::random_weights(rng, m));
            std::vector<int> asg(static_cast<std::size_t>(m));
            for (auto& v : asg) v = testutil::pick(rng, 0, n - 1);
            PointMap T(A, B, asg);
            auto f = dirac_disintegration(T, mu);
            TransportPlan g = reassemble(mu, f);
            CHECK(g.row_marginal().equals(mu));
            CHECK(g.col_marginal().equals(pushforward(mu, T)));
        }
    }
}

TEST_CASE("scaled families pass the uniqueness check exactly when expected", "[disintegration]") {
    SECTION("the canonical disintegration has density one") {
        TransportPlan g = split_plan();
        auto [mu, f] = disintegrate(g, Axis::First);
        UniquenessReport r = check_uniqueness_abs_continuity(g, mu, f);
        REQUIRE(r.pass);
        CHECK(r.reassembles);
        CHECK(r.absolutely_continuous);
        CHECK(r.density_rescales);
        for (const auto& [x, d] : r.density) CHECK(d == Rational(1));
    }
    SECTION("doubling the base measure halves the family") {
        TransportPlan g = split_plan();
        auto [mu, f] = disintegrate(g, Axis::First);
        std::vector<Rational> dbl;
        for (const auto& w : mu.weights()) dbl.push_back(w * 2);
        DiscreteMeasure nu(mu.space(), std::move(dbl));
        std::map<int, DiscreteMeasure> halved;
        for (int x : f.domain()) {
            std::vector<Rational> w;
            for (const auto& v : f.conditional(x).weights()) w.push_back(v / 2);
            halved.emplace(x, DiscreteMeasure(f.target(), std::move(w)));
        }
        auto eta = DisintegrationMap::nonnegative_family(f.base(), f.target(), std::move(halved));
        UniquenessReport r = check_uniqueness_abs_continuity(g, nu, eta);
        REQUIRE(r.pass);
        for (const auto& [x, d] : r.density) CHECK(d == Rational(2));
    }
    SECTION("charging a null point breaks absolute continuity") {
        auto X = space_x();
        auto Y = space_y();
        // x2 carries no plan mass
        TransportPlan g(X, Y, {Rational(1, 2), Rational(0), Rational(0), Rational(0), Rational(0), Rational(1, 2)});
        DiscreteMeasure even(Y, {Rational(1, 2), Rational(1, 2)});
        DiscreteMeasure d1(Y, {Rational(1), Rational(0)});
        DiscreteMeasure d2(Y, {Rational(0), Rational(1)});
        std::map<int, DiscreteMeasure> cond;
        cond.emplace(0, d1);
        cond.emplace(1, even);
        cond.emplace(2, d2);
        auto eta = DisintegrationMap::probability_family(X, Y, std::move(cond));
        DiscreteMeasure nu(X, {Rational(1, 2), Rational(1, 4), Rational(1, 2)});
        UniquenessReport r = check_uniqueness_abs_continuity(g, nu, eta);
        CHECK_FALSE(r.pass);
        CHECK_FALSE(r.absolutely_continuous);
        CHECK_FALSE(r.violations.empty());
    }
}

TEST_CASE("disintegration families validate their inputs", "[disintegration]") {
    auto X = space_x();
    auto Y = space_y();
    SECTION("probability families require probability conditionals") {
        std::map<int, DiscreteMeasure> cond;
        cond.emplace(0, DiscreteMeasure(Y, {Rational(1, 2), Rational(1, 4)}));
        CHECK_THROWS_AS(DisintegrationMap::probability_family(X, Y, std::move(cond)), Error);
    }
    SECTION("nonnegative families accept subprobability conditionals") {
        std::map<int, DiscreteMeasure> cond;
        cond.emplace(0, DiscreteMeasure(Y, {Rational(1, 2), Rational(1, 4)}));
        auto f = DisintegrationMap::nonnegative_family(X, Y, std::move(cond));
        CHECK_FALSE(f.is_probability_family());
        CHECK(f.conditional(0).total_mass() == Rational(3, 4));
    }
    SECTION("out-of-range indices and wrong spaces are rejected") {
        std::map<int, DiscreteMeasure> cond;
        cond.emplace(7, DiscreteMeasure(Y, {Rational(1, 2), Rational(1, 2)}));
        CHECK_THROWS_AS(DisintegrationMap::probability_family(X, Y, std::move(cond)), Error);
        std::map<int, DiscreteMeasure> wrong;
        wrong.emplace(0, DiscreteMeasure(X, {Rational(1), Rational(0), Rational(0)}));
        CHECK_THROWS_AS(DisintegrationMap::probability_family(X, Y, std::move(wrong)), Error);
    }
}
