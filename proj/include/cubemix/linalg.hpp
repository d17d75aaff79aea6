#pragma once

#include <cstdint>
#include <vector>

#include "cubemix/common.hpp"

namespace cubemix {

struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;  // row-major

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0) : rows(r), cols(c), a(static_cast<size_t>(r) * c, fill) {}

    double operator()(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }
    double& operator()(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }

    std::vector<double> column(int c) const;
    Matrix without_column(int c) const;
    Matrix select_columns(const std::vector<int>& idx) const;
    static Matrix from_columns(const std::vector<std::vector<double>>& columns);
    static Matrix from_rows(const std::vector<std::vector<double>>& rows);
};

std::vector<double> matvec(const Matrix& A, const std::vector<double>& x);

struct Interval {
    double lo;
    double hi;
};

struct RegressionResult {
    std::vector<double> solution;
    double residual = 0.0;
};

std::vector<double> entrywise_product(const std::vector<std::vector<double>>& vectors, int k);

// Row for S is the entrywise product of rows S of the n x k marginals matrix.
Matrix moment_rows(const std::vector<double>& marginals, int n, int k, const std::vector<Mask>& subsets);

// Minimize ||Ax - b||_inf over the box.
RegressionResult linf_regression(const Matrix& A, const std::vector<double>& b, const std::vector<Interval>& box);
RegressionResult linf_regression(const Matrix& A, const std::vector<double>& b, Interval box);

struct SigmaResult {
    double value = 0.0;
    std::vector<double> vector;  // ||v||_inf = 1 with ||Av||_inf = value
};

SigmaResult sigma_inf_min_vec(const Matrix& A);
double sigma_inf_min(const Matrix& A);

struct SpannerResult {
    std::vector<int> indices;
    Matrix coefficients;  // one row per input vector, one column per spanner element
    double max_residual = 0.0;
};

SpannerResult barycentric_spanner(const std::vector<std::vector<double>>& vectors);

std::vector<long long> vandermonde_kernel(int m);

// Indices of a maximal linearly independent subset, greedy in index order.
std::vector<int> independent_subset(const std::vector<std::vector<double>>& vectors, double tol);

int numeric_rank(const Matrix& A, double tol);

// A nonzero v with ||Av||_inf small relative to tol, if the columns are dependent.
bool kernel_vector(const Matrix& A, double tol, std::vector<double>& v);

double determinant(Matrix A);

// Solves min c.z subject to G z <= h, z >= 0, assuming h >= 0. Bland's rule.
struct LpResult {
    bool bounded = true;
    std::vector<double> z;
    double objective = 0.0;
};

LpResult simplex_min(const std::vector<double>& c, const Matrix& G, const std::vector<double>& h);

}  // namespace cubemix
