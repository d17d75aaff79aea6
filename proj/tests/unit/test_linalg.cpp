#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "cubemix/linalg.hpp"
#include "cubemix/rng.hpp"

using namespace cubemix;

namespace {

std::vector<std::vector<double>> rows_of(const Matrix& A) {
    std::vector<std::vector<double>> r(A.rows, std::vector<double>(A.cols));
    for (int i = 0; i < A.rows; ++i)
        for (int j = 0; j < A.cols; ++j) r[i][j] = A(i, j);
    return r;
}

double linf_res(const Matrix& A, const std::vector<double>& x, const std::vector<double>& b) {
    auto y = matvec(A, x);
    double w = 0;
    for (size_t i = 0; i < y.size(); ++i) w = std::max(w, std::abs(y[i] - b[i]));
    return w;
}

Matrix random_matrix(Rng& rng, int r, int c) {
    Matrix A(r, c);
    for (auto& v : A.a) v = 2 * rng.uniform() - 1;
    return A;
}

}  // namespace

TEST_SUITE("linalg") {

TEST_CASE("entrywise_product examples") {
    CHECK(entrywise_product({}, 3) == std::vector<double>{1, 1, 1});
    CHECK(entrywise_product({{1, 0}, {0, 1}}, 2) == std::vector<double>{0, 0});
    CHECK(entrywise_product({{0.5, 1}, {0.5, 0}}, 2) == std::vector<double>{0.25, 0});
    CHECK_THROWS_AS(entrywise_product({{1, 0}, {1}}, 2), Error);
}

TEST_CASE("moment_rows examples") {
    auto R = moment_rows({0.5, 1, 1, 0.5}, 2, 2, {0, 0b01, 0b11});
    CHECK(R(0, 0) == 1.0);
    CHECK(R(0, 1) == 1.0);
    CHECK(R(1, 0) == 0.5);
    CHECK(R(2, 0) == 0.5);
    CHECK(R(2, 1) == 0.5);
    auto E = moment_rows({1, 0}, 1, 2, {0b1});
    CHECK(E(0, 0) == 1.0);
    CHECK(E(0, 1) == 0.0);
}

TEST_CASE("linf_regression examples") {
    auto r = linf_regression(Matrix::from_rows({{1, 0}, {0, 1}}), {1, 2}, Interval{-10, 10});
    CHECK(r.solution[0] == doctest::Approx(1));
    CHECK(r.solution[1] == doctest::Approx(2));
    CHECK(r.residual == doctest::Approx(0).epsilon(1e-9));

    auto c = linf_regression(Matrix::from_rows({{1}, {1}, {1}}), {0, 1, 2}, Interval{-10, 10});
    CHECK(c.solution[0] == doctest::Approx(1));
    CHECK(c.residual == doctest::Approx(1));
    CHECK(oracle::grid_linf({{1}, {1}, {1}}, {0, 1, 2}, {{-10, 10}}, 20000) == doctest::Approx(c.residual).epsilon(1e-3));

    auto k = linf_regression(Matrix::from_rows({{1}}), {2}, Interval{-1, 1});
    CHECK(k.solution[0] == doctest::Approx(1));
    CHECK(k.residual == doctest::Approx(1));

    CHECK_THROWS_AS(linf_regression(Matrix::from_rows({{1}}), {2}, Interval{1, -1}), Error);
}

TEST_CASE("linf_regression is never beaten by a feasible probe") {
    Rng rng(3);
    for (int t = 0; t < 30; ++t) {
        int r = 2 + rng.below(5), c = 1 + rng.below(3);
        Matrix A = random_matrix(rng, r, c);
        std::vector<double> b(r);
        for (auto& v : b) v = 2 * rng.uniform() - 1;
        auto res = linf_regression(A, b, Interval{-1, 1});
        CHECK(res.residual == doctest::Approx(linf_res(A, res.solution, b)).epsilon(1e-9));
        for (double x : res.solution) {
            CHECK(x >= -1 - 1e-12);
            CHECK(x <= 1 + 1e-12);
        }
        for (int p = 0; p < 50; ++p) {
            std::vector<double> x0(c);
            for (auto& v : x0) v = 2 * rng.uniform() - 1;
            CHECK(res.residual <= linf_res(A, x0, b) + 1e-9);
        }
    }
}

TEST_CASE("sigma_inf_min examples") {
    CHECK(sigma_inf_min(Matrix::from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}})) == doctest::Approx(1));
    double s = sigma_inf_min(Matrix::from_rows({{1, 0}, {0, 1}, {1, 1}}));
    CHECK(s == doctest::Approx(1));
    CHECK(std::abs(s - oracle::grid_sigma({{1, 0}, {0, 1}, {1, 1}}, 2, 2000)) < 1e-3);
    CHECK(sigma_inf_min(Matrix::from_rows({{1, 1}, {2, 2}, {0.5, 0.5}})) < 1e-9);
}

TEST_CASE("sigma_inf_min agrees with grid search on random 4x3 matrices") {
    Rng rng(17);
    for (int t = 0; t < 10; ++t) {
        Matrix A = random_matrix(rng, 4, 3);
        auto sv = sigma_inf_min_vec(A);
        CHECK(std::abs(sv.value - oracle::grid_sigma(rows_of(A), 3, 400)) < 1e-2);  // 400 steps: grid error ~ 3 * 2/400
        double mx = 0;
        for (double v : sv.vector) mx = std::max(mx, std::abs(v));
        CHECK(mx == doctest::Approx(1));
        CHECK(linf_res(A, sv.vector, std::vector<double>(4, 0.0)) == doctest::Approx(sv.value).epsilon(1e-8));
    }
}

TEST_CASE("perturbation bound on well-conditioned matrices") {
    Rng rng(5);
    int checked = 0;
    for (int t = 0; t < 40; ++t) {
        Matrix A = random_matrix(rng, 6, 3);
        double sig = sigma_inf_min(A);
        if (sig < 0.1) continue;
        ++checked;
        std::vector<double> b(6);
        for (auto& v : b) v = 2 * rng.uniform() - 1;
        auto res = linf_regression(A, b, Interval{-1, 1});
        for (int p = 0; p < 20; ++p) {
            std::vector<double> x(3);
            for (auto& v : x) v = 2 * rng.uniform() - 1;
            double d = 0;
            for (int j = 0; j < 3; ++j) d = std::max(d, std::abs(res.solution[j] - x[j]));
            CHECK(d <= 2 * linf_res(A, x, b) / sig + 1e-9);
        }
    }
    CHECK(checked > 10);
}

TEST_CASE("barycentric_spanner examples") {
    auto s = barycentric_spanner({{1, 0}, {0, 1}, {0.5, 0.5}});
    CHECK(s.indices == std::vector<int>{0, 1});
    CHECK(s.coefficients(2, 0) == doctest::Approx(0.5));
    CHECK(s.coefficients(2, 1) == doctest::Approx(0.5));

    auto one = barycentric_spanner({{0.3, 0.7}});
    CHECK(one.indices == std::vector<int>{0});
    CHECK(one.coefficients(0, 0) == doctest::Approx(1));

    auto eq = barycentric_spanner({{0.2, 0.4}, {0.2, 0.4}, {0.2, 0.4}});
    CHECK(eq.indices == std::vector<int>{0});
    for (int r = 0; r < 3; ++r) CHECK(eq.coefficients(r, 0) == doctest::Approx(1));
}

TEST_CASE("barycentric_spanner maximizes |det| and keeps coefficients in [-1,1]") {
    Rng rng(9);
    for (int t = 0; t < 20; ++t) {
        int cnt = 3 + rng.below(6);
        std::vector<std::vector<double>> v(cnt, std::vector<double>(2));
        for (auto& x : v)
            for (auto& y : x) y = rng.uniform();
        auto s = barycentric_spanner(v);
        REQUIRE(s.indices.size() == 2);
        double best = 0;
        for (int a = 0; a < cnt; ++a)
            for (int b = a + 1; b < cnt; ++b)
                best = std::max(best, std::abs(v[a][0] * v[b][1] - v[a][1] * v[b][0]));
        const auto& p = v[s.indices[0]];
        const auto& q = v[s.indices[1]];
        CHECK(std::abs(p[0] * q[1] - p[1] * q[0]) == doctest::Approx(best));
        CHECK(s.max_residual <= 1e-6);
        for (double c : s.coefficients.a) CHECK(std::abs(c) <= 1 + 1e-9);
    }
}

TEST_CASE("vandermonde_kernel examples") {
    CHECK(vandermonde_kernel(1) == std::vector<long long>{-1});
    CHECK(vandermonde_kernel(2) == std::vector<long long>{-2, 1});
    auto v = vandermonde_kernel(3);
    CHECK(v == std::vector<long long>{-3, 3, -1});
    CHECK(1 * v[0] + 2 * v[1] + 3 * v[2] == 0);
    CHECK(1 * v[0] + 4 * v[1] + 9 * v[2] == 0);
    for (int m = 1; m <= 8; ++m) {
        auto w = vandermonde_kernel(m);
        for (int p = 1; p < m; ++p) {
            long long s = 0, node = 1;
            for (int i = 1; i <= m; ++i) {
                node = 1;
                for (int e = 0; e < p; ++e) node *= i;
                s += w[i - 1] * node;
            }
            CHECK(s == 0);
        }
    }
}

TEST_CASE("rank helpers agree with the oracle") {
    Rng rng(2);
    for (int t = 0; t < 10; ++t) {
        Matrix A = random_matrix(rng, 5, 3);
        for (int r = 0; r < 5; ++r) A(r, 2) = A(r, 0) + 0.5 * A(r, 1);
        CHECK(numeric_rank(A, 1e-9) == oracle::rank(rows_of(A), 1e-9));
        std::vector<double> v;
        CHECK(kernel_vector(A, 1e-9, v));
        CHECK(linf_res(A, v, std::vector<double>(5, 0.0)) < 1e-8);
    }
    CHECK(determinant(Matrix::from_rows({{2, 1}, {1, 3}})) == doctest::Approx(5));
    CHECK(independent_subset({{1, 0}, {2, 0}, {0, 1}}, 1e-9) == std::vector<int>{0, 2});
}

}
