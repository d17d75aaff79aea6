#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "cubemix/generate.hpp"
#include "cubemix/io.hpp"
#include "cubemix/linalg.hpp"
#include "cubemix/oracle.hpp"
#include "cubemix/rng.hpp"

using namespace cubemix;

TEST_SUITE("model") {

TEST_CASE("type invariants are enforced at construction") {
    CHECK_THROWS_AS(ProductMixture(2, 2, {0.5, 0.6}, {0, 0, 0, 0}), Error);
    CHECK_THROWS_AS(ProductMixture(1, 1, {1.0}, {1.5}), Error);
    CHECK_THROWS_AS(ProductMixture(1, 0, {}, {}), Error);
    CHECK_NOTHROW(ProductMixture(2, 2, {0.5, 0.5 + 1e-10}, {0, 0, 0, 0}));
}

TEST_CASE("sample: deterministic centers and zero-weight components") {
    auto ones = ProductMixture(5, 1, {1.0}, std::vector<double>(5, 1.0));
    for (Mask x : sample(ones, 1, 100)) CHECK(x == full_mask(5));
    auto two = subcubes({"110", "001"}, {1.0, 0.0});
    for (Mask x : sample(two, 2, 200)) CHECK(x == 0b011);
    CHECK_THROWS_AS(sample(ones, 1, 0), Error);
    CHECK(sample(two, 9, 50) == sample(two, 9, 50));
}

TEST_CASE("sample: uniform marginals concentrate at 1/2 across seeds") {
    auto u = ProductMixture::uniform(4);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto s = sample(u, seed, 100000);
        for (int i = 0; i < 4; ++i) {
            double c = 0;
            for (Mask x : s) c += test_bit(x, i);
            CHECK(std::abs(c / s.size() - 0.5) < 0.01);
        }
    }
}

TEST_CASE("sample frequencies match pdf within 3 sigma bands") {
    auto p = random_product_mixture(5, 3, 11);
    const size_t N = 1000000;
    auto s = sample(p, 5, N);
    std::vector<double> freq(32, 0.0);
    for (Mask x : s) freq[x] += 1.0;
    auto t = oracle::table(to_oracle(p));
    int outside = 0;
    for (Mask x = 0; x < 32; ++x) {
        double sd = std::sqrt(t[x] * (1 - t[x]) / N);
        if (std::abs(freq[x] / N - t[x]) > 3 * sd + 1e-12) ++outside;
    }
    CHECK(outside <= 1);  // 32 cells at 3 sigma: expect about 0.1 outliers
}

TEST_CASE("pdf_exact examples") {
    CHECK(pdf_exact(ProductMixture::uniform(3), 0b101) == doctest::Approx(0.125));
    CHECK(pdf_exact(subcubes({"10h"}), 0b001) == doctest::Approx(0.5));
    auto parity2 = subcubes({"10", "01"});
    CHECK(pdf_exact(parity2, 0b11) == 0.0);
}

TEST_CASE("pdf normalizes and matches the brute-force oracle") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto p = random_product_mixture(1 + seed % 10, 1 + seed % 4, seed);
        auto t = oracle::table(to_oracle(p));
        double s = 0;
        for (Mask x = 0; x < t.size(); ++x) {
            CHECK(pdf_exact(p, x) == doctest::Approx(t[x]).epsilon(1e-12));
            s += pdf_exact(p, x);
        }
        CHECK(std::abs(s - 1.0) < 1e-9);
    }
}

TEST_CASE("exact_moment examples and invariants") {
    auto u = ProductMixture::uniform(5);
    CHECK(exact_moment(u, 0b111) == doctest::Approx(0.125));
    CHECK(exact_moment(u, 0) == 1.0);
    CHECK(exact_moment(subcubes({"10", "01"}), 0b11) == 0.0);
    CHECK_THROWS_AS(exact_moment(u, Mask{1} << 7), Error);
    auto p = random_product_mixture(6, 3, 4);
    auto t = oracle::table(to_oracle(p));
    for (Mask S = 0; S < 64; ++S) {
        double v = exact_moment(p, S);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        CHECK(v == doctest::Approx(oracle::moment(t, S)).epsilon(1e-12));
        for (int i = 0; i < 6; ++i) CHECK(exact_moment(p, S | (Mask{1} << i)) <= v + 1e-15);
    }
}

TEST_CASE("empirical oracle examples") {
    // samples 111 and 101; spec coordinates 1,2 are 0,1 here
    EmpiricalOracle o({0b111, 0b101}, 3);
    CHECK(o.moment(0b001) == 1.0);
    CHECK(o.moment(0b010) == 0.5);
    CHECK_THROWS_AS(EmpiricalOracle({}, 3), Error);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        EmpiricalOracle e(sample(ProductMixture::uniform(4), seed, 100000), 4);
        CHECK(std::abs(e.moment(0b011) - 0.25) < 0.01);
        CHECK(e.tolerance() == doctest::Approx(accuracy_for_samples(100000, 0.05)));
    }
    CHECK(samples_for_accuracy(accuracy_for_samples(5000, 0.1), 0.1) == doctest::Approx(5000.0));
}

TEST_CASE("condition_on examples") {
    auto two = subcubes({"1h", "0h"}, {0.5, 0.5});
    auto c = condition_on(two, 0b01, 0b01);
    CHECK(c.weights[0] == doctest::Approx(1.0));
    CHECK(c.weights[1] == doctest::Approx(0.0));
    CHECK(c.n == 1);

    auto u = condition_on(ProductMixture::uniform(4), 0b0101, 0b0001);
    CHECK(u.n == 2);
    for (Mask x = 0; x < 4; ++x) CHECK(pdf_exact(u, x) == doctest::Approx(0.25));

    // odd-parity positives on three coordinates; given x0 = 1 the rest has even parity
    auto par = subcubes({"100", "010", "001", "111"});
    auto cp = condition_on(par, 0b001, 0b001);
    CHECK(pdf_exact(cp, 0b00) == doctest::Approx(0.5));
    CHECK(pdf_exact(cp, 0b11) == doctest::Approx(0.5));
    CHECK(pdf_exact(cp, 0b01) == doctest::Approx(0.0));
    SubcubeMixture sc;
    CHECK(as_subcube(cp, sc));
}

TEST_CASE("condition_on zero-probability event is an error") {
    auto p = subcubes({"11", "10"});
    CHECK_THROWS_AS(condition_on(p, 0b01, 0b00), Error);
}

TEST_CASE("conditioning consistency") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        auto p = random_product_mixture(6, 3, 100 + seed);
        Mask S = 0b100101;
        auto c = condition_on(p, S, S);
        Mask rest = full_mask(6) & ~S;
        for (Mask T = 0; T < 8; ++T)
            CHECK(std::abs(exact_moment(c, T) * exact_moment(p, S) - exact_moment(p, S | deposit_bits(T, rest))) < 1e-9);
    }
}

TEST_CASE("collapse_rank examples") {
    auto dup = ProductMixture(3, 2, {0.3, 0.7}, {0.2, 0.2, 0.9, 0.9, 0.5, 0.5});
    auto c = collapse_rank(dup, 3);
    CHECK(c.k == 1);
    CHECK(c.weights[0] == doctest::Approx(1.0));
    auto one = ProductMixture::uniform(3);
    CHECK(collapse_rank(one, 3).marginals == one.marginals);

    // rank-deficient random subcube mixtures: output size equals brute-force rank of M
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto p = random_subcube_mixture(3, 6, seed).to_product();
        auto d = to_oracle(p);
        std::vector<std::vector<double>> rows;
        for (Mask S = 0; S < 8; ++S) rows.push_back(oracle::moment_row(d, S));
        auto q = collapse_rank(p, 3);
        CHECK(q.k == oracle::rank(rows, 1e-9));
        CHECK(q.k <= p.k);
        for (Mask S = 0; S < 8; ++S) CHECK(std::abs(exact_moment(q, S) - exact_moment(p, S)) < 1e-9);
    }
}

TEST_CASE("tvd_bruteforce examples") {
    auto p = random_product_mixture(5, 2, 3);
    CHECK(tvd_bruteforce(p, p) == 0.0);
    CHECK(tvd_bruteforce(ProductMixture::point_mass(6, 0), ProductMixture::point_mass(6, full_mask(6))) == 1.0);
    auto q = random_product_mixture(5, 2, 4);
    CHECK(tvd_bruteforce(p, q) == doctest::Approx(oracle::tvd(oracle::table(to_oracle(p)), oracle::table(to_oracle(q)))));
    CHECK_THROWS_AS(tvd_bruteforce(ProductMixture::uniform(brute_force_cap() + 1), ProductMixture::uniform(brute_force_cap() + 1)), Error);
}

TEST_CASE("model and sample files round-trip") {
    auto p = random_subcube_mixture(4, 3, 8).to_product();
    Json j = model_to_json(p);
    CHECK(j["subcube"] == true);
    auto q = model_from_json(j);
    CHECK(q.marginals == p.marginals);
    CHECK(q.weights == p.weights);
    auto r = random_product_mixture(3, 2, 1);
    CHECK(model_from_json(model_to_json(r)).marginals == r.marginals);
    CHECK(mask_to_bits(0b101, 4) == "1010");
    CHECK(bits_to_mask("1010") == 0b101);
    CHECK_THROWS_AS(bits_to_mask("10x"), Error);
}

TEST_CASE("seed derivation is deterministic and label-sensitive") {
    CHECK(derive_seed(1, {2, 3}) == derive_seed(1, {2, 3}));
    CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
    CHECK(derive_seed(1, {2}) != derive_seed(2, {2}));
}

}
