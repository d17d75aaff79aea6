#include "cubemix/product_learn.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <set>

namespace cubemix {

int s_of(int k) { return 2 * k + 1 + k * (k - 1) / 2; }

double default_entry_step(double epsilon, int k, int n) { return epsilon / (8.0 * k * k * std::max(n, 1)); }

double default_weight_step(double epsilon, int k) { return 2.0 * epsilon / (3.0 * k * k); }

double default_sigma_cond(double epsilon, int n, int k) {
    double base = epsilon * epsilon / (100.0 * n * k * k * std::ldexp(1.0, k));
    return std::max(1e-6, std::pow(base, k));
}

double product_sample_accuracy(double epsilon, int n, int k) {
    return default_sigma_cond(epsilon, n, k) * epsilon * epsilon / (static_cast<double>(k) * k * k * n) * 0.01;
}

std::vector<double> grid_points(double step) {
    if (!(step > 0.0 && step <= 1.0)) throw Error("grid step must lie in (0,1]");
    std::vector<double> g;
    for (long q = 0;; ++q) {
        double v = q * step;
        if (v >= 1.0 - 1e-12) break;
        g.push_back(v);
    }
    g.push_back(1.0);
    return g;
}

CoefficientFit learn_coefficients(const MomentOracle& oracle, Mask J, int i, int degree_cap, std::size_t row_budget) {
    if (test_bit(J, i)) throw Error("learn_coefficients: i must lie outside J");
    const std::vector<int> Jl = members(J);
    const int r = static_cast<int>(Jl.size());
    std::vector<Mask> rows;
    Mask rest = full_mask(oracle.n()) & ~(J | (Mask{1} << i));
    for_each_subset(rest, 0, degree_cap, [&](Mask R) -> bool {
        rows.push_back(R);
        return rows.size() < row_budget;
    });
    std::vector<double> b(rows.size());
    for (size_t q = 0; q < rows.size(); ++q) b[q] = oracle.moment(rows[q] | (Mask{1} << i));
    CoefficientFit out;
    if (r == 0) {
        for (double v : b) out.residual = std::max(out.residual, std::abs(v));
        return out;
    }
    Matrix A(static_cast<int>(rows.size()), r);
    for (size_t q = 0; q < rows.size(); ++q)
        for (int a = 0; a < r; ++a) A(static_cast<int>(q), a) = oracle.moment(rows[q] | (Mask{1} << Jl[a]));
    RegressionResult rr = linf_regression(A, b, Interval{-1.0, 1.0});
    out.coefficients = rr.solution;
    out.residual = rr.residual;
    return out;
}

namespace {

double binom(int n, int r) {
    double c = 1.0;
    for (int q = 1; q <= r; ++q) c = c * (n - r + q) / q;
    return c;
}

std::vector<std::vector<double>> weight_tuples(int k, const std::vector<double>& wgrid) {
    std::vector<std::vector<double>> out;
    if (k == 1) return {{1.0}};
    std::vector<int> d(k - 1, 0);
    const int G = static_cast<int>(wgrid.size());
    while (true) {
        double s = 0.0;
        for (int c = 0; c < k - 1; ++c) s += wgrid[d[c]];
        if (s <= 1.0 + 1e-12) {
            std::vector<double> w(k);
            for (int c = 0; c < k - 1; ++c) w[c] = wgrid[d[c]];
            w[k - 1] = std::max(0.0, 1.0 - s);
            out.push_back(std::move(w));
        }
        int p = k - 2;
        while (p >= 0 && d[p] == G - 1) d[p--] = 0;
        if (p < 0) break;
        ++d[p];
    }
    return out;
}

// All rows e in grid^k; with a target, only rows whose weighted mean is within tol of it.
std::vector<std::vector<double>> candidate_rows(int k, const std::vector<double>& egrid, const std::vector<double>& w,
                                                bool filter, double target, double tol) {
    std::vector<std::vector<double>> out;
    const int G = static_cast<int>(egrid.size());
    std::vector<int> d(std::max(k - 1, 0), 0);
    std::vector<double> e(k);
    while (true) {
        double rest = 0.0;
        for (int c = 0; c < k - 1; ++c) {
            e[c] = egrid[d[c]];
            rest += w[c] * e[c];
        }
        const double wl = w[k - 1];
        int lo = 0, hi = G;
        if (filter) {
            if (wl == 0.0) {
                if (std::abs(rest - target) > tol) hi = 0;
            } else {
                double a = (target - tol - rest) / wl, b = (target + tol - rest) / wl;
                lo = static_cast<int>(std::lower_bound(egrid.begin(), egrid.end(), a) - egrid.begin());
                hi = static_cast<int>(std::upper_bound(egrid.begin(), egrid.end(), b) - egrid.begin());
            }
        }
        for (int q = lo; q < hi; ++q) {
            e[k - 1] = egrid[q];
            out.push_back(e);
        }
        int p = k - 2;
        while (p >= 0 && d[p] == G - 1) d[p--] = 0;
        if (p < 0) break;
        ++d[p];
    }
    return out;
}

}  // namespace

double candidate_count_closed_form(int n, int k, const std::vector<double>& entry_grid,
                                   const std::vector<double>& weight_grid) {
    double wc = static_cast<double>(weight_tuples(k, weight_grid).size());
    double total = 0.0;
    for (int r = 0; r <= std::min(k, n); ++r)
        total += binom(n, r) * wc * std::pow(static_cast<double>(entry_grid.size()), r * k);
    return total;
}

std::size_t for_each_product_candidate(const MomentOracle& oracle, int k, double epsilon, const GridSpec& grid,
                                       const std::function<bool(const ProductMixture&)>& visit) {
    if (k <= 0) throw Error("product learner needs k >= 1");
    const int n = oracle.n();
    const double delta = grid.entry_step > 0.0 ? grid.entry_step : default_entry_step(epsilon, k, n);
    const double alpha = grid.weight_step > 0.0 ? grid.weight_step : default_weight_step(epsilon, k);
    const std::vector<double> egrid = grid_points(delta);
    const std::vector<std::vector<double>> wtuples = weight_tuples(k, grid_points(alpha));
    const double base_tol = oracle.tolerance() + (k - 1) * alpha + 1e-12;
    const int degree_cap = s_of(k - 1);

    std::size_t visited = 0;
    bool stop = false;
    for (int r = 0; r <= std::min(k, n) && !stop; ++r) {
        for_each_subset(full_mask(n), r, r, [&](Mask J) -> bool {
            const std::vector<int> Jl = members(J);
            const std::vector<int> others = members(full_mask(n) & ~J);
            std::vector<std::vector<double>> coef(others.size());
            for (size_t o = 0; o < others.size(); ++o)
                coef[o] = learn_coefficients(oracle, J, others[o], degree_cap, grid.row_budget).coefficients;
            std::vector<double> pair(static_cast<size_t>(r) * r, 0.0);
            if (grid.prefilter)
                for (int a = 0; a < r; ++a)
                    for (int b = a + 1; b < r; ++b)
                        pair[a * r + b] = oracle.moment((Mask{1} << Jl[a]) | (Mask{1} << Jl[b]));

            for (const auto& w : wtuples) {
                std::vector<std::vector<std::vector<double>>> rows(r);
                bool empty = false;
                for (int a = 0; a < r; ++a) {
                    rows[a] = candidate_rows(k, egrid, w, grid.prefilter, oracle.moment(Mask{1} << Jl[a]),
                                             base_tol + delta);
                    empty = empty || rows[a].empty();
                }
                if (empty) continue;

                ProductMixture cand;
                cand.n = n;
                cand.k = k;
                cand.weights = w;
                cand.marginals.assign(static_cast<size_t>(n) * k, 0.0);
                std::vector<int> pick(r, 0);
                // Depth-first over the rows of J, checking pairwise moments as rows are fixed.
                std::function<void(int)> descend = [&](int a) {
                    if (stop) return;
                    if (a == r) {
                        for (size_t o = 0; o < others.size(); ++o)
                            for (int c = 0; c < k; ++c) {
                                double v = 0.0;
                                for (int q = 0; q < r; ++q) v += coef[o][q] * rows[q][pick[q]][c];
                                cand.m(others[o], c) = std::clamp(v, 0.0, 1.0);
                            }
                        ++visited;
                        if (!visit(cand)) stop = true;
                        return;
                    }
                    for (size_t q = 0; q < rows[a].size() && !stop; ++q) {
                        const auto& e = rows[a][q];
                        bool ok = true;
                        if (grid.prefilter)
                            for (int b = 0; b < a && ok; ++b) {
                                double v = 0.0;
                                for (int c = 0; c < k; ++c) v += w[c] * e[c] * rows[b][pick[b]][c];
                                ok = std::abs(v - pair[b * r + a]) <= base_tol + 2.0 * delta;
                            }
                        if (!ok) continue;
                        pick[a] = static_cast<int>(q);
                        for (int c = 0; c < k; ++c) cand.m(Jl[a], c) = e[c];
                        descend(a + 1);
                    }
                };
                descend(0);
                if (stop) break;
            }
            return !stop;
        });
    }
    return visited;
}

double moment_discrepancy(const ProductMixture& model, const MomentOracle& oracle, int degree) {
    double worst = 0.0;
    for_each_subset(full_mask(oracle.n()), 1, degree,
                    [&](Mask S) { worst = std::max(worst, std::abs(exact_moment(model, S) - oracle.moment(S))); });
    return worst;
}

namespace {

// Bounded keeper: the cap entries with the smallest score, ties broken by arrival.
class BestKeeper {
public:
    explicit BestKeeper(std::size_t cap) : cap_(cap) {}
    bool full() const { return heap_.size() >= cap_; }
    void offer(double score, std::size_t seq, ProductMixture m) {
        if (cap_ == 0) return;
        if (heap_.size() < cap_) {
            heap_.push({score, seq});
            store_.emplace(seq, std::move(m));
            return;
        }
        auto top = heap_.top();
        if (score < top.first) {
            heap_.pop();
            store_.erase(top.second);
            heap_.push({score, seq});
            store_.emplace(seq, std::move(m));
        }
    }
    std::vector<ProductMixture> take() {
        std::vector<ProductMixture> out;
        for (auto& kv : store_) out.push_back(std::move(kv.second));
        return out;
    }

private:
    std::size_t cap_;
    std::priority_queue<std::pair<double, std::size_t>> heap_;
    std::map<std::size_t, ProductMixture> store_;
};

}  // namespace

std::vector<ProductMixture> screen_candidates(std::vector<ProductMixture> list, const MomentOracle& oracle,
                                              int degree, std::size_t cap) {
    if (list.size() <= cap) return list;
    BestKeeper keep(cap);
    for (size_t q = 0; q < list.size(); ++q) keep.offer(moment_discrepancy(list[q], oracle, degree), q, list[q]);
    return keep.take();
}

CandidateList nondegenerate_learn_products(const MomentOracle& oracle, int k, double epsilon, const GridSpec& grid) {
    if (k <= 0) throw Error("product learner needs k >= 1");
    CandidateList out;
    std::set<std::pair<std::vector<double>, std::vector<double>>> seen;
    std::vector<ProductMixture> exact;
    BestKeeper keep(grid.materialize_cap);
    std::size_t seq = 0;
    out.raw_count = for_each_product_candidate(oracle, k, epsilon, grid, [&](const ProductMixture& m) {
        if (!seen.insert({m.weights, m.marginals}).second) return true;
        if (!out.truncated && exact.size() < grid.materialize_cap) {
            exact.push_back(m);
            return true;
        }
        if (!out.truncated) {
            out.truncated = true;
            for (auto& e : exact) {
                double score = moment_discrepancy(e, oracle, 2);
                keep.offer(score, seq++, std::move(e));
            }
            exact.clear();
        }
        keep.offer(moment_discrepancy(m, oracle, 2), seq++, m);
        return true;
    });
    out.mixtures = out.truncated ? keep.take() : std::move(exact);
    if (k > 1)
        for_each_subset(full_mask(oracle.n()), 1, k + 1, [&](Mask W) { out.condition_sets.push_back(W); });
    return out;
}

double collapse_gate(double eta, int k) { return eta * std::sqrt(2.0) / (3.0 * k * k); }

ProductMixture collapse_ill_conditioned(const ProductMixture& model, double eta) {
    const int k = model.k;
    if (k < 2) throw Error("collapse_ill_conditioned: a single component cannot be collapsed");
    std::vector<Mask> rows = subsets_up_to(full_mask(model.n), std::min(k, model.n));
    Matrix M = moment_rows(model.marginals, model.n, k, rows);
    SigmaResult sr = sigma_inf_min_vec(M);
    if (sr.value > collapse_gate(eta, k))
        throw Error("collapse_ill_conditioned: moment matrix is well conditioned, do not collapse");
    const std::vector<double>& v = sr.vector;
    double zp = 0.0, zm = 0.0;
    for (double x : v) (x > 0.0 ? zp : zm) += std::abs(x);
    if (zp == 0.0 || zm == 0.0) throw Error("collapse_ill_conditioned: kernel direction has one sign");
    std::vector<double> vs(k);
    for (int j = 0; j < k; ++j) vs[j] = v[j] > 0.0 ? v[j] / zp : v[j] / zm;

    // Walk pi - t v* to the nearest point where some weight vanishes.
    double tpos = std::numeric_limits<double>::infinity(), tneg = tpos;
    int hpos = -1, hneg = -1;
    for (int j = 0; j < k; ++j) {
        if (vs[j] > 0.0 && model.weights[j] / vs[j] < tpos) tpos = model.weights[j] / vs[j], hpos = j;
        if (vs[j] < 0.0 && model.weights[j] / -vs[j] < tneg) tneg = model.weights[j] / -vs[j], hneg = j;
    }
    double t = tpos <= tneg ? tpos : -tneg;
    int hit = tpos <= tneg ? hpos : hneg;
    ProductMixture out = model;
    for (int j = 0; j < k; ++j) out.weights[j] = std::max(0.0, model.weights[j] - t * vs[j]);
    out.weights[hit] = 0.0;
    double s = 0.0;
    for (double w : out.weights) s += w;
    for (double& w : out.weights) w /= s;
    out = drop_zero_weights(out);
    for (Mask S : rows)
        if (std::abs(exact_moment(out, S) - exact_moment(model, S)) > eta)
            throw Error("collapse_ill_conditioned: moment drift exceeds eta");
    return out;
}

}  // namespace cubemix
