#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "cubemix/generate.hpp"
#include "cubemix/product_learn.hpp"
#include "cubemix/rng.hpp"

using namespace cubemix;

TEST_SUITE("product-learn") {

TEST_CASE("grid helpers") {
    CHECK(s_of(1) == 3);
    CHECK(s_of(2) == 6);
    CHECK(default_entry_step(0.1, 2, 5) == doctest::Approx(0.1 / 160));
    CHECK(default_weight_step(0.3, 2) == doctest::Approx(0.05));
    auto g = grid_points(0.3);
    CHECK(g.size() == 5);
    CHECK(g.back() == 1.0);
    CHECK(g[3] == doctest::Approx(0.9));
    CHECK(grid_points(0.25).size() == 5);
    CHECK(default_sigma_cond(0.1, 6, 2) == 1e-6);
    CHECK(product_sample_accuracy(0.1, 6, 2) == doctest::Approx(1e-6 * 0.01 / 48 * 0.01));
}

TEST_CASE("learn_coefficients examples") {
    // coordinate 2 duplicates coordinate 0
    auto dup = ProductMixture(3, 2, {0.4, 0.6}, {0.2, 0.9, 0.7, 0.1, 0.2, 0.9});
    auto f = learn_coefficients(ExactOracle(dup), 0b001, 2, s_of(1));
    CHECK(f.coefficients[0] == doctest::Approx(1).epsilon(1e-9));
    CHECK(f.residual < 1e-9);

    // row 3 is the average of rows 0 and 1
    auto avg = ProductMixture(4, 2, {0.45, 0.55}, {0.9, 0.1, 0.2, 0.8, 0.6, 0.3, 0.55, 0.45});
    auto a = learn_coefficients(ExactOracle(avg), 0b0011, 3, s_of(1));
    CHECK(std::abs(a.coefficients[0] - 0.5) < 1e-3);
    CHECK(std::abs(a.coefficients[1] - 0.5) < 1e-3);

    auto u = learn_coefficients(ExactOracle(ProductMixture::uniform(3)), 0b001, 1, s_of(0));
    CHECK(u.coefficients[0] == doctest::Approx(1));
    CHECK_THROWS_AS(learn_coefficients(ExactOracle(dup), 0b001, 0, 2), Error);
}

TEST_CASE("k=1 recovers the grid-nearest marginals") {
    auto p = ProductMixture(4, 1, {1.0}, {0.13, 0.52, 0.97, 0.31});
    GridSpec gs;
    gs.entry_step = 0.05;
    auto L = nondegenerate_learn_products(ExactOracle(p), 1, 0.1, gs);
    CHECK(L.condition_sets.empty());
    double best = 1;
    for (const auto& c : L.mixtures) {
        double e = 0;
        for (int i = 0; i < 4; ++i) e = std::max(e, std::abs(c.m(i, 0) - p.m(i, 0)));
        best = std::min(best, e);
    }
    CHECK(best <= 0.05 + 1e-12);
}

TEST_CASE("k=2 exact oracle: a candidate is close, and all candidates are valid") {
    Rng g(41);
    std::vector<double> m(10);
    for (auto& x : m) x = g.uniform();
    auto p = ProductMixture(5, 2, {0.4, 0.6}, m);
    GridSpec gs;
    gs.entry_step = 0.05;
    gs.weight_step = 0.05;
    auto L = nondegenerate_learn_products(ExactOracle(p), 2, 0.15, gs);
    double best = 1;
    for (const auto& c : L.mixtures) {
        CHECK_NOTHROW(c.validate());
        best = std::min(best, tvd_bruteforce(c, p));
    }
    CHECK(best <= 0.15);
    // every W with 1 <= |W| <= 3
    CHECK(L.condition_sets.size() == 5 + 10 + 10);
    for (Mask W : L.condition_sets) CHECK(popcount(W) <= 3);
    CHECK(L.mixtures.size() <= gs.materialize_cap);
}

TEST_CASE("candidate count matches the closed form with the prefilter off") {
    auto p = random_product_mixture(3, 2, 8);
    GridSpec gs;
    gs.entry_step = 0.25;
    gs.weight_step = 0.25;
    gs.prefilter = false;
    std::size_t seen = 0;
    std::size_t visited = for_each_product_candidate(ExactOracle(p), 2, 0.1, gs, [&](const ProductMixture& c) {
        c.validate();
        ++seen;
        return true;
    });
    CHECK(seen == visited);
    CHECK(static_cast<double>(visited) ==
          candidate_count_closed_form(3, 2, grid_points(0.25), grid_points(0.25)));
    CHECK_THROWS_AS(nondegenerate_learn_products(ExactOracle(p), 0, 0.1, gs), Error);
}

TEST_CASE("collapse_ill_conditioned examples") {
    auto dup = ProductMixture(3, 2, {0.5, 0.5}, {0.3, 0.3, 0.8, 0.8, 0.1, 0.1});
    auto c = collapse_ill_conditioned(dup, 1e-9);
    CHECK(c.k == 1);
    CHECK(c.weights[0] == doctest::Approx(1));
    for (Mask S = 0; S < 8; ++S) CHECK(exact_moment(c, S) == doctest::Approx(exact_moment(dup, S)).epsilon(1e-12));

    auto near = ProductMixture(3, 2, {0.5, 0.5}, {0.3, 0.3 + 1e-6, 0.8, 0.8 - 1e-6, 0.1, 0.1 + 1e-6});
    auto cn = collapse_ill_conditioned(near, 1e-4);
    CHECK(cn.k == 1);
    auto tn = oracle::table(to_oracle(near)), tc = oracle::table(to_oracle(cn));
    for (Mask S = 0; S < 8; ++S)
        if (popcount(S) <= 2) CHECK(std::abs(oracle::moment(tn, S) - oracle::moment(tc, S)) <= 1e-4);

    auto well = ProductMixture(3, 2, {0.5, 0.5}, {0.9, 0.1, 0.1, 0.9, 0.8, 0.2});
    CHECK_THROWS_AS(collapse_ill_conditioned(well, 1e-3), Error);
}

TEST_CASE("collapse never increases the component count") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto base = random_product_mixture(4, 2, seed);
        // a third component almost equal to the first
        std::vector<double> m;
        for (int i = 0; i < 4; ++i) {
            m.push_back(base.m(i, 0));
            m.push_back(base.m(i, 1));
            m.push_back(std::min(1.0, base.m(i, 0) + 1e-7));
        }
        auto p = ProductMixture(4, 3, {0.3, 0.4, 0.3}, m);
        auto c = collapse_ill_conditioned(p, 1e-5);
        CHECK(c.k <= 2);
        for (Mask S = 0; S < 16; ++S)
            if (popcount(S) <= 3) CHECK(std::abs(exact_moment(c, S) - exact_moment(p, S)) <= 1e-5);
    }
}

TEST_CASE("screen_candidates keeps the best by moment discrepancy in order") {
    auto p = random_product_mixture(4, 2, 1);
    ExactOracle o(p);
    std::vector<ProductMixture> list{ProductMixture::uniform(4), p, ProductMixture::point_mass(4, 0), p};
    auto kept = screen_candidates(list, o, 2, 2);
    REQUIRE(kept.size() == 2);
    CHECK(moment_discrepancy(kept[0], o, 2) == 0.0);
    CHECK(moment_discrepancy(kept[1], o, 2) == 0.0);
}

}
