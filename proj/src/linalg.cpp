#include "cubemix/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace cubemix {

std::vector<double> Matrix::column(int c) const {
    std::vector<double> v(rows);
    for (int r = 0; r < rows; ++r) v[r] = (*this)(r, c);
    return v;
}

Matrix Matrix::without_column(int c) const {
    Matrix out(rows, cols - 1);
    for (int r = 0; r < rows; ++r)
        for (int j = 0, jj = 0; j < cols; ++j)
            if (j != c) out(r, jj++) = (*this)(r, j);
    return out;
}

Matrix Matrix::select_columns(const std::vector<int>& idx) const {
    Matrix out(rows, static_cast<int>(idx.size()));
    for (int r = 0; r < rows; ++r)
        for (size_t j = 0; j < idx.size(); ++j) out(r, static_cast<int>(j)) = (*this)(r, idx[j]);
    return out;
}

Matrix Matrix::from_columns(const std::vector<std::vector<double>>& columns) {
    if (columns.empty()) return Matrix();
    Matrix out(static_cast<int>(columns[0].size()), static_cast<int>(columns.size()));
    for (int c = 0; c < out.cols; ++c) {
        if (static_cast<int>(columns[c].size()) != out.rows) throw Error("column length mismatch");
        for (int r = 0; r < out.rows; ++r) out(r, c) = columns[c][r];
    }
    return out;
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return Matrix();
    Matrix out(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
    for (int r = 0; r < out.rows; ++r) {
        if (static_cast<int>(rows[r].size()) != out.cols) throw Error("row length mismatch");
        for (int c = 0; c < out.cols; ++c) out(r, c) = rows[r][c];
    }
    return out;
}

std::vector<double> matvec(const Matrix& A, const std::vector<double>& x) {
    std::vector<double> y(A.rows, 0.0);
    for (int r = 0; r < A.rows; ++r) {
        double s = 0.0;
        for (int c = 0; c < A.cols; ++c) s += A(r, c) * x[c];
        y[r] = s;
    }
    return y;
}

std::vector<double> entrywise_product(const std::vector<std::vector<double>>& vectors, int k) {
    std::vector<double> out(k, 1.0);
    for (const auto& v : vectors) {
        if (static_cast<int>(v.size()) != k) throw Error("entrywise_product: mismatched vector lengths");
        for (int j = 0; j < k; ++j) out[j] *= v[j];
    }
    return out;
}

Matrix moment_rows(const std::vector<double>& marginals, int n, int k, const std::vector<Mask>& subsets) {
    Matrix M(static_cast<int>(subsets.size()), k, 1.0);
    for (size_t r = 0; r < subsets.size(); ++r) {
        if (n < 64 && (subsets[r] >> n) != 0) throw Error("moment_rows: subset outside dimension");
        Mask s = subsets[r];
        while (s) {
            int i = __builtin_ctzll(s);
            s &= s - 1;
            for (int j = 0; j < k; ++j) M(static_cast<int>(r), j) *= marginals[static_cast<size_t>(i) * k + j];
        }
    }
    return M;
}

LpResult simplex_min(const std::vector<double>& c, const Matrix& G, const std::vector<double>& h) {
    const int m = G.rows;
    const int nv = G.cols;
    const int width = nv + m + 1;
    const double eps = tolerances().lp_pivot;
    std::vector<double> T(static_cast<size_t>(m + 1) * width, 0.0);
    auto at = [&](int r, int col) -> double& { return T[static_cast<size_t>(r) * width + col]; };
    std::vector<int> basis(m);
    for (int r = 0; r < m; ++r) {
        if (h[r] < -1e-12) throw Error("simplex_min: origin infeasible");
        for (int j = 0; j < nv; ++j) at(r, j) = G(r, j);
        at(r, nv + r) = 1.0;
        at(r, width - 1) = std::max(0.0, h[r]);
        basis[r] = nv + r;
    }
    for (int j = 0; j < nv; ++j) at(m, j) = c[j];

    LpResult res;
    const int max_iter = 100000;
    for (int it = 0; it < max_iter; ++it) {
        int enter = -1;
        for (int j = 0; j < nv + m; ++j) {
            if (at(m, j) < -eps) {
                enter = j;
                break;
            }
        }
        if (enter < 0) break;
        int leave = -1;
        double best = std::numeric_limits<double>::infinity();
        for (int r = 0; r < m; ++r) {
            double a = at(r, enter);
            if (a > eps) {
                double ratio = at(r, width - 1) / a;
                if (ratio < best - 1e-14 || (std::abs(ratio - best) <= 1e-14 && leave >= 0 && basis[r] < basis[leave])) {
                    best = ratio;
                    leave = r;
                }
            }
        }
        if (leave < 0) {
            res.bounded = false;
            return res;
        }
        double piv = at(leave, enter);
        for (int j = 0; j < width; ++j) at(leave, j) /= piv;
        for (int r = 0; r <= m; ++r) {
            if (r == leave) continue;
            double f = at(r, enter);
            if (f == 0.0) continue;
            for (int j = 0; j < width; ++j) at(r, j) -= f * at(leave, j);
        }
        basis[leave] = enter;
    }
    res.z.assign(nv, 0.0);
    for (int r = 0; r < m; ++r)
        if (basis[r] < nv) res.z[basis[r]] = std::max(0.0, at(r, width - 1));
    res.objective = 0.0;
    for (int j = 0; j < nv; ++j) res.objective += c[j] * res.z[j];
    return res;
}

namespace {

// Regression restricted to the given rows, variables shifted to y = x - lo in [0, u].
std::vector<double> solve_rows(const Matrix& A, const std::vector<double>& bs, const std::vector<double>& u,
                               const std::vector<int>& rows) {
    const int c = A.cols;
    const int R = static_cast<int>(rows.size());
    double t0 = 0.0;
    for (int r : rows) t0 = std::max(t0, std::abs(bs[r]));
    const int nv = c + 2;
    Matrix G(2 * R + c, nv);
    std::vector<double> h(2 * R + c);
    for (int q = 0; q < R; ++q) {
        int r = rows[q];
        for (int j = 0; j < c; ++j) {
            G(q, j) = A(r, j);
            G(R + q, j) = -A(r, j);
        }
        G(q, c) = -1.0;
        G(q, c + 1) = 1.0;
        G(R + q, c) = -1.0;
        G(R + q, c + 1) = 1.0;
        h[q] = bs[r] + t0;
        h[R + q] = -bs[r] + t0;
    }
    for (int j = 0; j < c; ++j) {
        G(2 * R + j, j) = 1.0;
        h[2 * R + j] = u[j];
    }
    std::vector<double> cost(nv, 0.0);
    cost[c] = 1.0;
    cost[c + 1] = -1.0;
    LpResult lp = simplex_min(cost, G, h);
    if (!lp.bounded) throw Error("linf_regression: unbounded LP");
    std::vector<double> y(lp.z.begin(), lp.z.begin() + c);
    for (int j = 0; j < c; ++j) y[j] = std::clamp(y[j], 0.0, u[j]);
    return y;
}

}  // namespace

RegressionResult linf_regression(const Matrix& A, const std::vector<double>& b, const std::vector<Interval>& box) {
    if (A.rows != static_cast<int>(b.size())) throw Error("linf_regression: dimension mismatch");
    if (static_cast<int>(box.size()) != A.cols) throw Error("linf_regression: box dimension mismatch");
    for (const auto& iv : box) {
        if (!(iv.lo <= iv.hi)) throw Error("linf_regression: infeasible box (lo > hi)");
        if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi)) throw Error("linf_regression: box must be finite");
    }
    const int c = A.cols;
    RegressionResult out;
    if (c == 0) {
        out.residual = 0.0;
        for (double v : b) out.residual = std::max(out.residual, std::abs(v));
        return out;
    }
    std::vector<double> u(c), bs(b.size());
    for (int j = 0; j < c; ++j) u[j] = box[j].hi - box[j].lo;
    for (int r = 0; r < A.rows; ++r) {
        double s = b[r];
        for (int j = 0; j < c; ++j) s -= A(r, j) * box[j].lo;
        bs[r] = s;
    }
    auto residuals = [&](const std::vector<double>& y) {
        std::vector<double> res(A.rows);
        for (int r = 0; r < A.rows; ++r) {
            double s = -bs[r];
            for (int j = 0; j < c; ++j) s += A(r, j) * y[j];
            res[r] = std::abs(s);
        }
        return res;
    };

    std::vector<double> y;
    if (A.rows <= 48) {
        std::vector<int> rows(A.rows);
        std::iota(rows.begin(), rows.end(), 0);
        y = A.rows > 0 ? solve_rows(A, bs, u, rows) : std::vector<double>(c, 0.0);
    } else {
        // Constraint generation: solve on an active subset and add the worst violated rows.
        std::vector<int> order(A.rows);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b2) { return std::abs(bs[a]) > std::abs(bs[b2]); });
        std::vector<char> active(A.rows, 0);
        std::vector<int> rows;
        for (int q = 0; q < std::min(A.rows, 2 * c + 4); ++q) {
            rows.push_back(order[q]);
            active[order[q]] = 1;
        }
        for (int round = 0; round < 1000; ++round) {
            std::sort(rows.begin(), rows.end());
            y = solve_rows(A, bs, u, rows);
            auto res = residuals(y);
            double t = 0.0;
            for (int r : rows) t = std::max(t, res[r]);
            std::vector<std::pair<double, int>> viol;
            for (int r = 0; r < A.rows; ++r)
                if (!active[r] && res[r] > t * (1.0 + 1e-12) + 1e-13) viol.push_back({res[r], r});
            if (viol.empty()) break;
            std::stable_sort(viol.begin(), viol.end(), [](const auto& a, const auto& b2) { return a.first > b2.first; });
            for (size_t q = 0; q < viol.size() && q < 8; ++q) {
                rows.push_back(viol[q].second);
                active[viol[q].second] = 1;
            }
        }
    }
    out.solution.resize(c);
    for (int j = 0; j < c; ++j) out.solution[j] = std::clamp(box[j].lo + y[j], box[j].lo, box[j].hi);
    out.residual = 0.0;
    for (int r = 0; r < A.rows; ++r) {
        double s = -b[r];
        for (int j = 0; j < c; ++j) s += A(r, j) * out.solution[j];
        out.residual = std::max(out.residual, std::abs(s));
    }
    return out;
}

RegressionResult linf_regression(const Matrix& A, const std::vector<double>& b, Interval box) {
    return linf_regression(A, b, std::vector<Interval>(A.cols, box));
}

SigmaResult sigma_inf_min_vec(const Matrix& A) {
    if (A.cols < 1) throw Error("sigma_inf_min: need at least one column");
    SigmaResult best;
    best.value = std::numeric_limits<double>::infinity();
    for (int j = 0; j < A.cols; ++j) {
        Matrix rest = A.without_column(j);
        std::vector<double> b(A.rows);
        for (int r = 0; r < A.rows; ++r) b[r] = -A(r, j);
        RegressionResult rr = linf_regression(rest, b, Interval{-1.0, 1.0});
        if (rr.residual < best.value - 1e-15) {
            best.value = rr.residual;
            best.vector.assign(A.cols, 0.0);
            for (int q = 0, qq = 0; q < A.cols; ++q) best.vector[q] = (q == j) ? 1.0 : rr.solution[qq++];
        }
    }
    return best;
}

double sigma_inf_min(const Matrix& A) { return sigma_inf_min_vec(A).value; }

std::vector<int> independent_subset(const std::vector<std::vector<double>>& vectors, double tol) {
    std::vector<int> kept;
    std::vector<std::vector<double>> reduced;
    std::vector<int> pivots;
    for (size_t idx = 0; idx < vectors.size(); ++idx) {
        std::vector<double> v = vectors[idx];
        double scale = 1.0;
        for (double x : v) scale = std::max(scale, std::abs(x));
        for (size_t q = 0; q < reduced.size(); ++q) {
            double f = v[pivots[q]];
            if (f != 0.0)
                for (size_t j = 0; j < v.size(); ++j) v[j] -= f * reduced[q][j];
        }
        int p = -1;
        double best = 0.0;
        for (size_t j = 0; j < v.size(); ++j)
            if (std::abs(v[j]) > best) {
                best = std::abs(v[j]);
                p = static_cast<int>(j);
            }
        if (p >= 0 && best > tol * scale) {
            double piv = v[p];
            for (double& x : v) x /= piv;
            reduced.push_back(v);
            pivots.push_back(p);
            kept.push_back(static_cast<int>(idx));
        }
    }
    return kept;
}

namespace {

// Row echelon form with partial pivoting; returns pivot columns.
std::vector<int> echelon(Matrix& A, double tol) {
    double scale = 0.0;
    for (double x : A.a) scale = std::max(scale, std::abs(x));
    double thresh = tol * std::max(1.0, scale);
    std::vector<int> piv_cols;
    int r = 0;
    for (int c = 0; c < A.cols && r < A.rows; ++c) {
        int p = r;
        for (int q = r + 1; q < A.rows; ++q)
            if (std::abs(A(q, c)) > std::abs(A(p, c))) p = q;
        if (std::abs(A(p, c)) <= thresh) continue;
        if (p != r)
            for (int j = 0; j < A.cols; ++j) std::swap(A(p, j), A(r, j));
        double pv = A(r, c);
        for (int j = 0; j < A.cols; ++j) A(r, j) /= pv;
        for (int q = 0; q < A.rows; ++q) {
            if (q == r) continue;
            double f = A(q, c);
            if (f == 0.0) continue;
            for (int j = 0; j < A.cols; ++j) A(q, j) -= f * A(r, j);
        }
        piv_cols.push_back(c);
        ++r;
    }
    return piv_cols;
}

}  // namespace

int numeric_rank(const Matrix& A, double tol) {
    Matrix B = A;
    return static_cast<int>(echelon(B, tol).size());
}

bool kernel_vector(const Matrix& A, double tol, std::vector<double>& v) {
    Matrix B = A;
    std::vector<int> piv = echelon(B, tol);
    if (static_cast<int>(piv.size()) == A.cols) return false;
    std::vector<char> is_piv(A.cols, 0);
    for (int c : piv) is_piv[c] = 1;
    int free_col = 0;
    while (is_piv[free_col]) ++free_col;
    v.assign(A.cols, 0.0);
    v[free_col] = 1.0;
    for (size_t r = 0; r < piv.size(); ++r) v[piv[r]] = -B(static_cast<int>(r), free_col);
    double mx = 0.0;
    for (double x : v) mx = std::max(mx, std::abs(x));
    for (double& x : v) x /= mx;
    return true;
}

double determinant(Matrix A) {
    if (A.rows != A.cols) throw Error("determinant: matrix not square");
    const int n = A.rows;
    double det = 1.0;
    for (int c = 0; c < n; ++c) {
        int p = c;
        for (int q = c + 1; q < n; ++q)
            if (std::abs(A(q, c)) > std::abs(A(p, c))) p = q;
        if (A(p, c) == 0.0) return 0.0;
        if (p != c) {
            for (int j = 0; j < n; ++j) std::swap(A(p, j), A(c, j));
            det = -det;
        }
        det *= A(c, c);
        for (int q = c + 1; q < n; ++q) {
            double f = A(q, c) / A(c, c);
            for (int j = c; j < n; ++j) A(q, j) -= f * A(c, j);
        }
    }
    return det;
}

namespace {

// Squared volume of the parallelotope spanned by the chosen vectors.
double gram_volume(const std::vector<std::vector<double>>& vectors, const std::vector<int>& idx) {
    const int r = static_cast<int>(idx.size());
    Matrix G(r, r);
    for (int a = 0; a < r; ++a)
        for (int b = 0; b < r; ++b) {
            double s = 0.0;
            for (size_t j = 0; j < vectors[idx[a]].size(); ++j) s += vectors[idx[a]][j] * vectors[idx[b]][j];
            G(a, b) = s;
        }
    return std::abs(determinant(G));
}

}  // namespace

SpannerResult barycentric_spanner(const std::vector<std::vector<double>>& vectors) {
    if (vectors.empty()) throw Error("barycentric_spanner: empty input");
    const int N = static_cast<int>(vectors.size());
    const int k = static_cast<int>(vectors[0].size());
    for (const auto& v : vectors)
        if (static_cast<int>(v.size()) != k) throw Error("barycentric_spanner: mismatched vector lengths");

    std::vector<int> indep = independent_subset(vectors, tolerances().rank);
    const int r = static_cast<int>(indep.size());
    SpannerResult out;
    if (r == 0) {
        out.indices = {0};
        out.coefficients = Matrix(N, 1, 0.0);
        return out;
    }

    // Number of r-subsets of N, saturating.
    double combos = 1.0;
    for (int i = 0; i < r; ++i) combos = combos * (N - i) / (i + 1);

    std::vector<int> best = indep;
    double best_vol = gram_volume(vectors, best);
    if (combos <= 1e4) {
        std::vector<int> c(r);
        std::iota(c.begin(), c.end(), 0);
        best_vol = -1.0;
        while (true) {
            double vol = gram_volume(vectors, c);
            if (vol > best_vol * (1.0 + 1e-12)) {
                best_vol = vol;
                best = c;
            }
            int i = r - 1;
            while (i >= 0 && c[i] == N - r + i) --i;
            if (i < 0) break;
            ++c[i];
            for (int j = i + 1; j < r; ++j) c[j] = c[j - 1] + 1;
        }
    } else {
        bool improved = true;
        while (improved) {
            improved = false;
            for (int pos = 0; pos < r && !improved; ++pos) {
                for (int cand = 0; cand < N && !improved; ++cand) {
                    if (std::find(best.begin(), best.end(), cand) != best.end()) continue;
                    std::vector<int> trial = best;
                    trial[pos] = cand;
                    double vol = gram_volume(vectors, trial);
                    // Volume is squared, so this is a (1 + 1e-9) factor on |det|.
                    if (vol > best_vol * (1.0 + 2e-9)) {
                        best = trial;
                        best_vol = vol;
                        improved = true;
                    }
                }
            }
        }
        std::sort(best.begin(), best.end());
    }

    out.indices = best;
    std::vector<std::vector<double>> cols;
    for (int i : best) cols.push_back(vectors[i]);
    Matrix A = Matrix::from_columns(cols);
    out.coefficients = Matrix(N, r);
    for (int v = 0; v < N; ++v) {
        RegressionResult rr = linf_regression(A, vectors[v], Interval{-1.0, 1.0});
        for (int j = 0; j < r; ++j) out.coefficients(v, j) = rr.solution[j];
        out.max_residual = std::max(out.max_residual, rr.residual);
    }
    return out;
}

std::vector<long long> vandermonde_kernel(int m) {
    if (m < 1) throw Error("vandermonde_kernel: m must be positive");
    std::vector<long long> v(m);
    long long binom = 1;
    for (int i = 1; i <= m; ++i) {
        binom = binom * (m - i + 1) / i;
        v[i - 1] = (i % 2 == 0 ? 1 : -1) * binom;
    }
    return v;
}

}  // namespace cubemix
