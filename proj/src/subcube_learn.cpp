#include "cubemix/subcube_learn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cubemix {

int inspan_degree(int k) { return static_cast<int>(std::ceil(2.0 * std::log2(2.0 * k) - 1e-12)); }

int verify_degree(int k) { return static_cast<int>(std::floor(2.0 * std::log2(2.0 * k) + 1e-12)); }

double effective_inspan_threshold(const SubcubeConfig& cfg, const MomentOracle& oracle, int k) {
    if (cfg.inspan_threshold > 0.0) return cfg.inspan_threshold;
    return std::max(1e-6, 2.0 * oracle.tolerance() * (k + 1));
}

double effective_verify_threshold(const SubcubeConfig& cfg, const MomentOracle& oracle, int k) {
    if (cfg.verify_threshold > 0.0) return cfg.verify_threshold;
    if (oracle.tolerance() == 0.0) return 1e-9;
    return std::max(2.0 * oracle.tolerance(), 0.5 * cfg.epsilon * std::pow(static_cast<double>(k), -cfg.c_hypo * k));
}

std::vector<Mask> restricted_rows(int n, Mask U, int degree) {
    Mask rest = full_mask(n) & ~U;
    int cap = std::min(degree - 1, popcount(rest));
    if (cap < 0) return {};
    return subsets_up_to(rest, cap);
}

SpanCheck in_span_residual(const MomentOracle& oracle, const BasisState& basis, Mask Tp, int degree,
                           double threshold, double coef_bound) {
    SpanCheck out;
    Mask U = basis.J | Tp;
    std::vector<Mask> rows = restricted_rows(oracle.n(), U, degree);
    if (rows.empty() || U == full_mask(oracle.n())) return out;
    const int r = static_cast<int>(basis.sets.size());
    Matrix E(static_cast<int>(rows.size()), r);
    std::vector<double> b(rows.size());
    for (size_t q = 0; q < rows.size(); ++q) {
        for (int c = 0; c < r; ++c) E(static_cast<int>(q), c) = oracle.moment(rows[q] | basis.sets[c]);
        b[q] = oracle.moment(rows[q] | Tp);
    }
    RegressionResult rr = linf_regression(E, b, Interval{-coef_bound, coef_bound});
    out.residual = rr.residual;
    out.in_span = rr.residual < 0.5 * threshold;
    return out;
}

bool in_span(const MomentOracle& oracle, const BasisState& basis, Mask Tp, const WeightWindow& window, int degree,
             int k, const SubcubeConfig& cfg) {
    if (!(window.tau_small > 0.0 && window.tau_small < window.tau_big && window.tau_big <= 1.0))
        throw Error("in_span: invalid weight window");
    double thr = effective_inspan_threshold(cfg, oracle, k);
    return in_span_residual(oracle, basis, Tp, degree, thr, cfg.inspan_coef_bound).in_span;
}

GrowResult grow_by_one(const MomentOracle& oracle, int k, const WeightWindow& window, const SubcubeConfig& cfg) {
    const int n = oracle.n();
    const int degree = inspan_degree(std::max(k, 1));
    BasisState B;
    B.sets = {0};
    B.J = 0;
    bool changed = true;
    while (changed) {
        changed = false;
        for (int i = 0; i < n; ++i) {
            if (test_bit(B.J, i)) continue;
            if (static_cast<int>(B.sets.size()) >= k) break;
            BasisState Bp = B;
            for (Mask T : B.sets) {
                if (static_cast<int>(Bp.sets.size()) >= k) break;
                Mask cand = T | (Mask{1} << i);
                BasisState probe = Bp;
                if (!in_span(oracle, probe, cand, window, degree, k, cfg)) {
                    Bp.sets.push_back(cand);
                    Bp.J |= cand;
                }
            }
            if (Bp.sets.size() != B.sets.size()) {
                B = Bp;
                changed = true;
            }
        }
    }
    GrowResult out;
    bool ok = true;
    for_each_subset(B.J, 0, popcount(B.J), [&](Mask S) -> bool {
        if (std::find(B.sets.begin(), B.sets.end(), S) != B.sets.end()) return true;
        if (!in_span(oracle, B, S, window, degree, k, cfg)) {
            ok = false;
            return false;
        }
        return true;
    });
    if (!ok) {
        out.fail = true;
        out.J = B.J;
        return out;
    }
    out.basis = B;
    return out;
}

WeightSolve solve_mixing_weights(const Matrix& guessed_rows, const std::vector<double>& moments) {
    RegressionResult rr = linf_regression(guessed_rows, moments, Interval{0.0, 1.0});
    WeightSolve out;
    out.residual = rr.residual;
    out.order.resize(rr.solution.size());
    std::iota(out.order.begin(), out.order.end(), 0);
    std::stable_sort(out.order.begin(), out.order.end(),
                     [&](int a, int b) { return rr.solution[a] > rr.solution[b]; });
    for (int j : out.order) out.weights.push_back(rr.solution[j]);
    return out;
}

std::vector<double> solve_mixing_weights_sorted(const Matrix& guessed_rows, const std::vector<double>& moments) {
    return solve_mixing_weights(guessed_rows, moments).weights;
}

CenterRow solve_center_row(const Matrix& guessed_rows, const std::vector<double>& weights,
                           const std::vector<double>& moments_i, double impostor_threshold) {
    const int rp = static_cast<int>(weights.size());
    if (guessed_rows.cols != rp) throw Error("solve_center_row: weight count differs from retained columns");
    Matrix A = guessed_rows;
    for (int r = 0; r < A.rows; ++r)
        for (int c = 0; c < rp; ++c) A(r, c) *= weights[c];
    RegressionResult rr = linf_regression(A, moments_i, Interval{0.0, 1.0});
    CenterRow out;
    out.raw = rr.solution;
    out.residual = rr.residual;
    out.flagged = rr.residual > impostor_threshold;
    for (double v : rr.solution) out.row.push_back(nearest_cube(v));
    return out;
}

int truncate_at_gap(const std::vector<double>& w, double gap_ratio, double floor, bool largest) {
    const int r = static_cast<int>(w.size());
    int pick = r;
    for (int a = 1; a < r; ++a) {
        bool gap = w[a] == 0.0 ? w[a - 1] > 0.0 : w[a - 1] / w[a] > gap_ratio;
        if (gap && w[a] < floor) {
            pick = a;
            if (!largest) break;
        }
    }
    return pick;
}

std::optional<Mask> moment_discrepancy_witness(const ProductMixture& candidate, const MomentOracle& oracle,
                                               int degree, double threshold) {
    std::optional<Mask> found;
    for_each_subset(full_mask(oracle.n()), 0, degree, [&](Mask S) -> bool {
        if (std::abs(exact_moment(candidate, S) - oracle.moment(S)) > threshold) {
            found = S;
            return false;
        }
        return true;
    });
    return found;
}

namespace {

const Cube kDigitOrder[3] = {Cube::Half, Cube::One, Cube::Zero};

void add_unique(std::vector<Mask>& v, Mask m) {
    if (std::find(v.begin(), v.end(), m) == v.end()) v.push_back(m);
}

}  // namespace

LearnOutcome nondegenerate_learn_subcubes(const MomentOracle& oracle, int k, const SubcubeConfig& cfg,
                                          LearnStats* stats) {
    LearnOutcome out;
    if (k <= 0) return out;
    const int n = oracle.n();
    const double tau = cfg.tau > 0.0 ? cfg.tau : cfg.epsilon / 10.0;
    const double floor = cfg.weight_floor > 0.0 ? cfg.weight_floor : cfg.epsilon / (20.0 * k);
    const double verify_thr = effective_verify_threshold(cfg, oracle, k);
    const double impostor_thr =
        cfg.impostor_residual > 0.0 ? cfg.impostor_residual : effective_inspan_threshold(cfg, oracle, k);
    const int vdeg = verify_degree(k);

    std::vector<Mask> U;
    std::vector<BasisState> bases;
    double hi = tau;
    for (int j = 0; j <= k; ++j) {
        WeightWindow win{hi * cfg.rho, hi};
        hi *= cfg.rho;
        GrowResult g = grow_by_one(oracle, k, win, cfg);
        if (g.fail) {
            add_unique(U, g.J);
            continue;
        }
        bool dup = false;
        for (const auto& b : bases) dup = dup || b.sets == g.basis.sets;
        if (!dup) bases.push_back(g.basis);
    }
    if (stats) stats->bases = static_cast<int>(bases.size());

    // Oracle moments used by the verification step, in scan order.
    std::vector<Mask> vsets;
    std::vector<double> vvals;
    for_each_subset(full_mask(n), 0, vdeg, [&](Mask S) {
        vsets.push_back(S);
        vvals.push_back(oracle.moment(S));
    });

    for (const BasisState& B : bases) {
        const std::vector<int> Jl = members(B.J);
        const int q = static_cast<int>(Jl.size());
        const int r = static_cast<int>(B.sets.size());
        const std::vector<int> others = members(full_mask(n) & ~B.J);

        std::vector<double> bB(r);
        for (int a = 0; a < r; ++a) bB[a] = oracle.moment(B.sets[a]);
        std::vector<std::vector<double>> bI(others.size(), std::vector<double>(r));
        for (size_t o = 0; o < others.size(); ++o)
            for (int a = 0; a < r; ++a) bI[o][a] = oracle.moment(B.sets[a] | (Mask{1} << others[o]));

        const int digits = q * r;
        std::vector<int> d(digits, 0);
        std::vector<double> G(static_cast<size_t>(n) * r, 0.0);
        while (true) {
            if (stats) ++stats->guesses;
            for (int jj = 0; jj < q; ++jj)
                for (int c = 0; c < r; ++c) G[static_cast<size_t>(Jl[jj]) * r + c] = cube_value(kDigitOrder[d[jj * r + c]]);
            Matrix MB(r, r, 1.0);
            for (int a = 0; a < r; ++a)
                for (int i : members(B.sets[a]))
                    for (int c = 0; c < r; ++c) MB(a, c) *= G[static_cast<size_t>(i) * r + c];

            WeightSolve ws = solve_mixing_weights(MB, bB);
            int rp = truncate_at_gap(ws.weights, cfg.gap_ratio, floor, cfg.largest_gap);
            bool valid = true;
            for (int c = 0; c < rp; ++c) valid = valid && ws.weights[c] > 0.0;
            if (valid) {
                std::vector<int> keep(ws.order.begin(), ws.order.begin() + rp);
                std::vector<double> wk(ws.weights.begin(), ws.weights.begin() + rp);
                Matrix MBk = MB.select_columns(keep);
                ProductMixture cand;
                cand.n = n;
                cand.k = rp;
                double z = std::accumulate(wk.begin(), wk.end(), 0.0);
                for (double w : wk) cand.weights.push_back(w / z);
                cand.marginals.assign(static_cast<size_t>(n) * rp, 0.0);
                for (int i : Jl)
                    for (int c = 0; c < rp; ++c) cand.m(i, c) = G[static_cast<size_t>(i) * r + keep[c]];
                for (size_t o = 0; o < others.size(); ++o) {
                    CenterRow cr = solve_center_row(MBk, wk, bI[o], impostor_thr);
                    if (cr.flagged && stats) ++stats->flagged_rows;
                    for (int c = 0; c < rp; ++c) cand.m(others[o], c) = cube_value(cr.row[c]);
                }

                std::optional<Mask> witness;
                for (size_t v = 0; v < vsets.size(); ++v) {
                    if (std::abs(exact_moment(cand, vsets[v]) - vvals[v]) > verify_thr) {
                        witness = vsets[v];
                        break;
                    }
                }
                if (!witness) {
                    out.kind = LearnOutcome::Kind::Mixture;
                    std::vector<Cube> cc(cand.marginals.size());
                    for (size_t t = 0; t < cc.size(); ++t) cc[t] = nearest_cube(cand.marginals[t]);
                    out.mixture = SubcubeMixture(n, rp, cand.weights, cc);
                    return out;
                }
                add_unique(U, B.J | *witness);
            }

            int pos = digits - 1;
            while (pos >= 0 && d[pos] == 2) d[pos--] = 0;
            if (pos < 0) break;
            ++d[pos];
        }
        if (cfg.arbitrary_impostor_branch && k > 1) {
            Mask rest = full_mask(n) & ~B.J;
            if (rest) add_unique(U, B.J | (rest & (~rest + 1)));
        }
    }

    if (k == 1 || U.empty()) return out;
    out.kind = LearnOutcome::Kind::ConditionSets;
    out.condition_sets = U;
    return out;
}

}  // namespace cubemix
