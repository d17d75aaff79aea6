#include "cubemix/sq.hpp"

#include <algorithm>
#include <cmath>

namespace cubemix {

bool is_prime(int p) {
    if (p < 2) return false;
    for (int d = 2; d * d <= p; ++d)
        if (p % d == 0) return false;
    return true;
}

Matrix build_superortho_matrix(int ell, const std::vector<double>& xs) {
    if (ell < 1) throw Error("superorthogonal family needs ell >= 1");
    if (static_cast<int>(xs.size()) != ell + 1) throw Error("need ell + 1 scalars");
    for (size_t a = 0; a < xs.size(); ++a)
        for (size_t b = a + 1; b < xs.size(); ++b)
            if (xs[a] == xs[b]) throw Error("scalars must be distinct");
    const int m = ell + 1;
    Matrix E(ell, m * m, 0.0);
    for (int r = 0; r < ell; ++r) {
        for (int i = 0; i < m; ++i) E(r, i) = xs[i];
        for (int i = 0; i < m; ++i) {
            const int base = m + i * ell;
            for (int c = 0; c < r; ++c) E(r, base + c) = xs[i];
            E(r, base + r) = -(r + 1) * xs[i];
        }
    }
    return E;
}

std::vector<double> superortho_top_row(const std::vector<double>& xs, double scale) {
    const int m = static_cast<int>(xs.size());
    const int ell = m - 1;
    if (ell < 2) throw Error("top row needs blocks of width at least 2");
    std::vector<long long> v = vandermonde_kernel(m);
    std::vector<double> top(static_cast<size_t>(m) * m, 0.0);
    for (int i = 0; i < m; ++i) {
        const int base = m + i * ell;
        top[base] = scale * static_cast<double>(v[i]) * xs[i];
        top[base + 1] = -top[base];
    }
    return top;
}

bool verify_superorthogonal(const Matrix& rows, const std::vector<double>& weights, int d) {
    if (static_cast<int>(weights.size()) != rows.cols) throw Error("weights length differs from row width");
    bool ok = true;
    for_each_subset(full_mask(rows.rows), 1, d, [&](Mask S) -> bool {
        double s = 0.0;
        for (int c = 0; c < rows.cols; ++c) {
            double p = weights[c];
            for (int r : members(S)) p *= rows(r, c);
            s += p;
        }
        if (std::abs(s) > 1e-10) ok = false;
        return ok;
    });
    return ok;
}

double delta_closed_form(int m, double lambda, const std::vector<double>& xs) {
    std::vector<long long> v = vandermonde_kernel(m);
    long double s = 0.0L;
    for (int i = 0; i < m; ++i) s += static_cast<long double>(v[i]) * std::pow(static_cast<long double>(xs[i]), m);
    return static_cast<double>(-static_cast<long double>(lambda) / (static_cast<long double>(m) * m) * s);
}

MomentMatchInstance build_instance(int m) {
    if (m < 3) throw Error("build_instance: m must be at least 3");
    if (!is_prime(m + 1)) throw Error("build_instance: m + 1 must be prime");
    if (m * m > 4096 || m > kMaxDim) throw Error("build_instance: m too large");
    MomentMatchInstance inst;
    inst.m = m;
    inst.k = m * m;
    for (int i = 1; i <= m; ++i) inst.xs.push_back(i / (2.0 * m * m));
    Matrix E = build_superortho_matrix(m - 1, inst.xs);

    // Scale k 2^-m for the top row unless that pushes entries outside [-1/2, 1/2].
    std::vector<long long> v = vandermonde_kernel(m);
    double peak = 0.0;
    for (int i = 0; i < m; ++i) peak = std::max(peak, std::abs(static_cast<double>(v[i]) * inst.xs[i]));
    inst.lambda1 = std::min(inst.k * std::ldexp(1.0, -m), 0.5 / peak);
    std::vector<double> top = superortho_top_row(inst.xs, inst.lambda1);

    std::vector<double> marg(static_cast<size_t>(m) * inst.k);
    for (int r = 0; r < m - 1; ++r)
        for (int c = 0; c < inst.k; ++c) marg[static_cast<size_t>(r) * inst.k + c] = E(r, c) + 0.5;
    for (int c = 0; c < inst.k; ++c) marg[static_cast<size_t>(m - 1) * inst.k + c] = top[c] + 0.5;
    inst.A = ProductMixture(m, inst.k, std::vector<double>(inst.k, 1.0 / inst.k), marg);
    inst.delta = delta_closed_form(m, inst.lambda1, inst.xs);

    for_each_subset(full_mask(m), 1, m - 1, [&](Mask S) {
        if (std::abs(exact_moment(inst.A, S) - std::ldexp(1.0, -popcount(S))) > 1e-12)
            throw Error("build_instance: low-degree moment differs from uniform");
    });
    if (std::abs(std::abs(pdf_exact(inst.A, full_mask(m)) - std::ldexp(1.0, -m)) - std::abs(inst.delta)) > 1e-12)
        throw Error("build_instance: top discrepancy differs from delta");
    if (std::abs(inst.delta) < std::pow(2.0 * m, -2.0 * m))
        throw Error("build_instance: |delta| below (2m)^(-2m)");
    return inst;
}

ProductMixture embed_instance(const MomentMatchInstance& inst, int n, Mask I) {
    if (popcount(I) != inst.m || (I & ~full_mask(n)) != 0) throw Error("embed_instance: |I| must equal m within [n]");
    std::vector<double> marg(static_cast<size_t>(n) * inst.k, 0.5);
    std::vector<int> idx = members(I);
    for (int r = 0; r < inst.m; ++r)
        for (int c = 0; c < inst.k; ++c)
            marg[static_cast<size_t>(idx[r]) * inst.k + c] = inst.A.m(r, c);
    return ProductMixture(n, inst.k, inst.A.weights, marg);
}

InstanceStats instance_stats(const MomentMatchInstance& inst, int n, Mask I, Mask J) {
    if (I == J) throw Error("instance_stats: I and J must differ");
    if (n > brute_force_cap()) throw Error("instance_stats: n above the brute-force cap");
    ProductMixture DI = embed_instance(inst, n, I), DJ = embed_instance(inst, n, J);
    const double u = std::ldexp(1.0, -n);
    InstanceStats st;
    long double pair = 0.0L, sq = 0.0L, tv = 0.0L;
    for (Mask x = 0; x < (Mask{1} << n); ++x) {
        long double a = pdf_exact(DI, x), b = pdf_exact(DJ, x);
        pair += a * b / u;
        sq += a * a / u;
        tv += std::abs(a - b);
    }
    st.chi_pair = static_cast<double>(pair - 1.0L);
    st.chi_sq = static_cast<double>(sq - 1.0L);
    st.tvd = static_cast<double>(tv / 2.0L);
    st.chi_pair_closed = 0.0;
    st.chi_sq_closed = inst.delta * inst.delta * std::ldexp(1.0, 2 * inst.m);
    st.tvd_closed = std::abs(inst.delta) * std::ldexp(1.0, inst.m - 1);
    if (std::abs(st.chi_pair - st.chi_pair_closed) > 1e-9 || std::abs(st.chi_sq - st.chi_sq_closed) > 1e-9 ||
        std::abs(st.tvd - st.tvd_closed) > 1e-9)
        throw Error("instance_stats: enumerated statistics differ from the closed forms");
    return st;
}

}  // namespace cubemix
