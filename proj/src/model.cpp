#include "cubemix/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cubemix/linalg.hpp"
#include "cubemix/rng.hpp"

namespace cubemix {

ProductMixture::ProductMixture(int n_, int k_, std::vector<double> w, std::vector<double> m_)
    : n(n_), k(k_), weights(std::move(w)), marginals(std::move(m_)) {
    validate();
}

std::vector<double> ProductMixture::row(int i) const {
    return std::vector<double>(marginals.begin() + static_cast<long>(i) * k, marginals.begin() + static_cast<long>(i + 1) * k);
}

void ProductMixture::validate() const {
    if (k < 1) throw Error("mixture needs at least one component");
    if (n < 0 || n > kMaxDim) throw Error("dimension out of range");
    if (static_cast<int>(weights.size()) != k) throw Error("weights length differs from k");
    if (marginals.size() != static_cast<size_t>(n) * k) throw Error("marginals size differs from n*k");
    double s = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0 && w <= 1.0)) throw Error("weight outside [0,1]");
        s += w;
    }
    if (std::abs(s - 1.0) > tolerances().weight_sum) throw Error("weights do not sum to 1");
    for (double v : marginals)
        if (!(v >= 0.0 && v <= 1.0)) throw Error("marginal outside [0,1]");
}

ProductMixture ProductMixture::uniform(int n) {
    return ProductMixture(n, 1, {1.0}, std::vector<double>(n, 0.5));
}

ProductMixture ProductMixture::point_mass(int n, Mask x) {
    std::vector<double> m(n);
    for (int i = 0; i < n; ++i) m[i] = test_bit(x, i) ? 1.0 : 0.0;
    return ProductMixture(n, 1, {1.0}, m);
}

Cube nearest_cube(double v) {
    if (v < 0.25) return Cube::Zero;
    if (v < 0.75) return Cube::Half;
    return Cube::One;
}

SubcubeMixture::SubcubeMixture(int n_, int k_, std::vector<double> w, std::vector<Cube> c_)
    : n(n_), k(k_), weights(std::move(w)), centers(std::move(c_)) {
    validate();
}

void SubcubeMixture::validate() const {
    if (k < 1) throw Error("mixture needs at least one component");
    if (n < 0 || n > kMaxDim) throw Error("dimension out of range");
    if (static_cast<int>(weights.size()) != k) throw Error("weights length differs from k");
    if (centers.size() != static_cast<size_t>(n) * k) throw Error("centers size differs from n*k");
    double s = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0 && w <= 1.0)) throw Error("weight outside [0,1]");
        s += w;
    }
    if (std::abs(s - 1.0) > tolerances().weight_sum) throw Error("weights do not sum to 1");
    for (Cube c : centers)
        if (static_cast<int>(c) > 2) throw Error("invalid subcube code");
}

ProductMixture SubcubeMixture::to_product() const {
    std::vector<double> m(centers.size());
    for (size_t q = 0; q < centers.size(); ++q) m[q] = cube_value(centers[q]);
    return ProductMixture(n, k, weights, m);
}

bool as_subcube(const ProductMixture& p, SubcubeMixture& out) {
    std::vector<Cube> c(p.marginals.size());
    for (size_t q = 0; q < c.size(); ++q) {
        double v = p.marginals[q];
        if (v == 0.0) c[q] = Cube::Zero;
        else if (v == 0.5) c[q] = Cube::Half;
        else if (v == 1.0) c[q] = Cube::One;
        else return false;
    }
    out = SubcubeMixture(p.n, p.k, p.weights, c);
    return true;
}

std::vector<Mask> sample(const ProductMixture& model, std::uint64_t seed, std::size_t count) {
    if (count < 1) throw Error("sample: count must be positive");
    Rng rng(seed);
    std::vector<double> cdf(model.k);
    std::partial_sum(model.weights.begin(), model.weights.end(), cdf.begin());
    std::vector<Mask> out(count);
    for (auto& x : out) {
        double u = rng.uniform() * cdf.back();
        int j = static_cast<int>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        if (j >= model.k) j = model.k - 1;
        while (model.weights[j] == 0.0 && j > 0) --j;
        Mask v = 0;
        for (int i = 0; i < model.n; ++i)
            if (rng.bernoulli(model.m(i, j))) v |= Mask{1} << i;
        x = v;
    }
    return out;
}

double pdf_exact(const ProductMixture& model, Mask x) {
    double total = 0.0;
    for (int j = 0; j < model.k; ++j) {
        double p = model.weights[j];
        for (int i = 0; i < model.n && p != 0.0; ++i) {
            double mi = model.m(i, j);
            p *= test_bit(x, i) ? mi : 1.0 - mi;
        }
        total += p;
    }
    return total;
}

double exact_moment(const ProductMixture& model, Mask S) {
    if (model.n < 64 && (S >> model.n) != 0) throw Error("exact_moment: subset outside dimension");
    double total = 0.0;
    for (int j = 0; j < model.k; ++j) {
        double p = model.weights[j];
        Mask s = S;
        while (s && p != 0.0) {
            int i = __builtin_ctzll(s);
            s &= s - 1;
            p *= model.m(i, j);
        }
        total += p;
    }
    return total;
}

double prob_assignment(const ProductMixture& model, Mask S, Mask s) {
    double total = 0.0;
    for (int j = 0; j < model.k; ++j) {
        double p = model.weights[j];
        for (int i : members(S)) {
            double mi = model.m(i, j);
            p *= test_bit(s, i) ? mi : 1.0 - mi;
        }
        total += p;
    }
    return total;
}

ProductMixture condition_on(const ProductMixture& model, Mask S, Mask s) {
    if (model.n < 64 && (S >> model.n) != 0) throw Error("condition_on: subset outside dimension");
    std::vector<double> w(model.k);
    double z = 0.0;
    for (int j = 0; j < model.k; ++j) {
        double g = model.weights[j];
        for (int i : members(S)) {
            // gamma^i_j = mu + (1 - s_i)(1 - 2 mu)
            double mu = model.m(i, j);
            g *= mu + (test_bit(s, i) ? 0.0 : 1.0) * (1.0 - 2.0 * mu);
        }
        w[j] = g;
        z += g;
    }
    if (!(z > 0.0)) throw Error("condition_on: conditioning event has probability zero");
    for (double& x : w) x /= z;
    std::vector<int> keep = members(full_mask(model.n) & ~S);
    std::vector<double> m;
    m.reserve(keep.size() * model.k);
    for (int i : keep)
        for (int j = 0; j < model.k; ++j) m.push_back(model.m(i, j));
    ProductMixture out;
    out.n = static_cast<int>(keep.size());
    out.k = model.k;
    out.weights = std::move(w);
    out.marginals = std::move(m);
    // Renormalize away rounding drift before validating.
    double sw = 0.0;
    for (double x : out.weights) sw += x;
    for (double& x : out.weights) x /= sw;
    out.validate();
    return out;
}

SubcubeMixture condition_on(const SubcubeMixture& model, Mask S, Mask s) {
    ProductMixture p = condition_on(model.to_product(), S, s);
    SubcubeMixture out;
    if (!as_subcube(p, out)) throw Error("condition_on: subcube structure lost");
    return out;
}

ProductMixture marginalize_out(const ProductMixture& model, Mask S) {
    std::vector<int> keep = members(full_mask(model.n) & ~S);
    std::vector<double> m;
    for (int i : keep)
        for (int j = 0; j < model.k; ++j) m.push_back(model.m(i, j));
    return ProductMixture(static_cast<int>(keep.size()), model.k, model.weights, m);
}

ProductMixture drop_zero_weights(const ProductMixture& model) {
    std::vector<int> keep;
    for (int j = 0; j < model.k; ++j)
        if (model.weights[j] > 0.0) keep.push_back(j);
    if (static_cast<int>(keep.size()) == model.k) return model;
    ProductMixture out;
    out.n = model.n;
    out.k = static_cast<int>(keep.size());
    double s = 0.0;
    for (int j : keep) {
        out.weights.push_back(model.weights[j]);
        s += model.weights[j];
    }
    for (double& w : out.weights) w /= s;
    for (int i = 0; i < model.n; ++i)
        for (int j : keep) out.marginals.push_back(model.m(i, j));
    out.validate();
    return out;
}

ProductMixture collapse_rank(const ProductMixture& model, int degree_cap) {
    std::vector<Mask> rows = subsets_up_to(full_mask(model.n), std::min(degree_cap, model.n));
    ProductMixture cur = model;
    while (cur.k > 1) {
        Matrix M = moment_rows(cur.marginals, cur.n, cur.k, rows);
        std::vector<double> v;
        if (!kernel_vector(M, 1e-10, v)) break;
        // Walk pi + t v until the first coordinate reaches zero.
        bool has_neg = std::any_of(v.begin(), v.end(), [](double x) { return x < 0.0; });
        if (!has_neg)
            for (double& x : v) x = -x;
        double t0 = std::numeric_limits<double>::infinity();
        int hit = -1;
        for (int j = 0; j < cur.k; ++j)
            if (v[j] < 0.0) {
                double t = cur.weights[j] / -v[j];
                if (t < t0) {
                    t0 = t;
                    hit = j;
                }
            }
        std::vector<double> w(cur.k);
        for (int j = 0; j < cur.k; ++j) w[j] = std::max(0.0, cur.weights[j] + t0 * v[j]);
        w[hit] = 0.0;
        double s = 0.0;
        for (double x : w) s += x;
        for (double& x : w) x /= s;
        cur.weights = w;
        cur = drop_zero_weights(cur);
    }
    for (Mask S : rows)
        if (std::abs(exact_moment(cur, S) - exact_moment(model, S)) > 1e-9)
            throw Error("collapse_rank: moment drift beyond tolerance");
    return cur;
}

std::vector<double> pdf_table(const PdfFn& d, int n) {
    if (n > brute_force_cap()) throw Error("brute-force enumeration above the configured cap");
    std::vector<double> t(size_t{1} << n);
    for (Mask x = 0; x < t.size(); ++x) t[x] = d(x);
    return t;
}

double tvd_bruteforce(const PdfFn& d1, const PdfFn& d2, int n) {
    if (n > brute_force_cap()) throw Error("tvd_bruteforce: n above the brute-force cap");
    double s = 0.0;
    const Mask N = Mask{1} << n;
    for (Mask x = 0; x < N; ++x) s += std::abs(d1(x) - d2(x));
    return 0.5 * s;
}

double tvd_bruteforce(const ProductMixture& a, const ProductMixture& b) {
    if (a.n != b.n) throw Error("tvd_bruteforce: dimension mismatch");
    return tvd_bruteforce([&](Mask x) { return pdf_exact(a, x); }, [&](Mask x) { return pdf_exact(b, x); }, a.n);
}

}  // namespace cubemix
