#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "cubemix/sq.hpp"

using namespace cubemix;

namespace {

double row_product_sum(const Matrix& E, Mask S) {
    double s = 0;
    for (int c = 0; c < E.cols; ++c) {
        double p = 1;
        for (int r = 0; r < E.rows; ++r)
            if (test_bit(S, r)) p *= E(r, c);
        s += p;
    }
    return s;
}

}  // namespace

TEST_SUITE("sq-construct") {

TEST_CASE("build_superortho_matrix examples") {
    auto E1 = build_superortho_matrix(1, {0.3, 0.7});
    REQUIRE(E1.rows == 1);
    REQUIRE(E1.cols == 4);
    CHECK(E1(0, 0) == 0.3);
    CHECK(E1(0, 1) == 0.7);
    CHECK(E1(0, 2) == -0.3);
    CHECK(E1(0, 3) == -0.7);

    auto E2 = build_superortho_matrix(2, {1, 2, 3});
    CHECK(E2.cols == 9);
    for (Mask S = 1; S < 4; ++S) CHECK(std::abs(row_product_sum(E2, S)) < 1e-12);

    auto E3 = build_superortho_matrix(3, {1, 2, 3, 4});
    CHECK(E3.rows == 3);
    CHECK(E3.cols == 16);
    for (Mask S = 1; S < 8; ++S) CHECK(std::abs(row_product_sum(E3, S)) < 1e-9);

    CHECK_THROWS_AS(build_superortho_matrix(2, {1, 2, 2}), Error);
}

TEST_CASE("verify_superorthogonal examples") {
    CHECK(verify_superorthogonal(Matrix::from_rows({{0, 0, 0}}), {0.2, 0.3, 0.5}, 1));
    auto E = build_superortho_matrix(2, {1, 2, 3});
    std::vector<double> u(9, 1.0 / 9);
    CHECK(verify_superorthogonal(E, u, 2));
    std::vector<std::vector<double>> rows;
    for (int r = 0; r < 2; ++r) {
        std::vector<double> row;
        for (int c = 0; c < 9; ++c) row.push_back(E(r, c));
        rows.push_back(row);
    }
    rows.push_back(superortho_top_row({1, 2, 3}, 1.0));
    auto F = Matrix::from_rows(rows);
    CHECK_FALSE(verify_superorthogonal(F, u, 3));
}

TEST_CASE("build_instance m=4") {
    auto inst = build_instance(4);
    CHECK(inst.k == 16);
    CHECK(inst.A.k == 16);
    auto t = oracle::table(to_oracle(inst.A));
    for (Mask S = 1; S < 15; ++S) CHECK(std::abs(oracle::moment(t, S) - std::ldexp(1.0, -popcount(S))) < 1e-12);
    const double want = -24.0 / std::pow(8.0, 8);
    CHECK(std::abs(t[15] - 1.0 / 16 - want) < 1e-12);
    CHECK(std::abs(inst.delta - want) < 1e-15);
    CHECK(std::abs(inst.delta) >= std::pow(8.0, -8));
    for (double v : inst.A.marginals) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    // pointwise form: A(x) = 2^-m + (-1)^{zeros(x)} delta
    for (Mask x = 0; x < 16; ++x) {
        int z = 4 - popcount(x);
        CHECK(std::abs(t[x] - (1.0 / 16 + (z % 2 ? -1 : 1) * inst.delta)) < 1e-12);
    }
}

TEST_CASE("build_instance rejects unsupported m") {
    CHECK_THROWS_AS(build_instance(2), Error);
    CHECK_THROWS_AS(build_instance(5), Error);
    CHECK_NOTHROW(build_instance(6));
    CHECK(is_prime(7));
    CHECK_FALSE(is_prime(9));
    CHECK_FALSE(is_prime(1));
}

TEST_CASE("moment agreement is equivalent to superorthogonality of the centered rows") {
    for (int m : {4, 6}) {
        auto inst = build_instance(m);
        Matrix centered(m, inst.k);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < inst.k; ++j) centered(i, j) = inst.A.m(i, j) - 0.5;
        CHECK(verify_superorthogonal(centered, inst.A.weights, m - 1));
        CHECK(std::abs(inst.delta) >= std::pow(2.0 * m, -2.0 * m));
        if (m > 4) continue;  // the top product drops below the 1e-10 verification tolerance
        CHECK_FALSE(verify_superorthogonal(centered, inst.A.weights, m));
        auto t = oracle::table(to_oracle(inst.A));
        CHECK(std::abs(t[full_mask(m)] - std::ldexp(1.0, -m)) >= std::pow(2.0 * m, -2.0 * m));
    }
}

TEST_CASE("embed_instance") {
    auto inst = build_instance(4);
    auto same = embed_instance(inst, 4, 0b1111);
    CHECK(same.marginals == inst.A.marginals);
    auto d = embed_instance(inst, 6, 0b101101);
    auto t = oracle::table(to_oracle(d));
    for (Mask S = 1; S < 64; ++S)
        if ((S & ~Mask{0b101101}) != 0 && popcount(S) <= 3)
            CHECK(std::abs(oracle::moment(t, S) - std::ldexp(1.0, -popcount(S))) < 1e-12);
    CHECK(std::abs(oracle::moment(t, 0b101101) - (1.0 / 16 + inst.delta)) < 1e-12);
    CHECK_THROWS_AS(embed_instance(inst, 6, 0b111), Error);
}

TEST_CASE("instance_stats m=4 n=6") {
    auto inst = build_instance(4);
    Mask I = 0b001111, J = 0b111100;
    auto st = instance_stats(inst, 6, I, J);
    // recompute by enumeration here as well
    auto a = oracle::table(to_oracle(embed_instance(inst, 6, I)));
    auto b = oracle::table(to_oracle(embed_instance(inst, 6, J)));
    double u = 1.0 / 64, pair = 0, sq = 0;
    for (size_t x = 0; x < 64; ++x) {
        pair += (a[x] / u - 1) * (b[x] / u - 1) * u;
        sq += (a[x] / u - 1) * (a[x] / u - 1) * u;
    }
    CHECK(std::abs(pair) < 1e-10);
    CHECK(std::abs(st.chi_pair) < 1e-10);
    CHECK(std::abs(sq - inst.delta * inst.delta * 256) < 1e-9);
    CHECK(std::abs(st.chi_sq - inst.delta * inst.delta * 256) < 1e-9);
    CHECK(std::abs(oracle::tvd(a, b) - std::abs(inst.delta) * 8) < 1e-9);
    CHECK(std::abs(st.tvd - std::abs(inst.delta) * 8) < 1e-9);
    CHECK_THROWS_AS(instance_stats(inst, 6, I, I), Error);
}

}
