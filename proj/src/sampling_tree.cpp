#include "cubemix/sampling_tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cubemix/io.hpp"
#include "cubemix/rng.hpp"

namespace cubemix {

SamplingTree SamplingTree::leaf(const ProductMixture& model) {
    auto node = std::make_shared<TreeNode>();
    node->dim = model.n;
    node->leaf = true;
    node->model = model;
    return SamplingTree{model.n, node};
}

SamplingTree SamplingTree::branch(int n, Mask W, std::vector<double> edge_weights, std::vector<SamplingTree> children) {
    const int w = popcount(W);
    if ((W & ~full_mask(n)) != 0 || w == 0) throw Error("branch set must be a nonempty subset of the coordinates");
    if (edge_weights.size() != (size_t{1} << w) || children.size() != edge_weights.size())
        throw Error("branch needs one weight and one child per assignment of W");
    auto node = std::make_shared<TreeNode>();
    node->dim = n;
    node->leaf = false;
    node->W = W;
    node->edge_weights = std::move(edge_weights);
    for (auto& c : children) {
        if (c.n != n - w) throw Error("child dimension must equal n - |W|");
        node->children.push_back(c.root);
    }
    SamplingTree t{n, node};
    t.validate();
    return t;
}

namespace {

int node_depth(const TreeNode& node) {
    if (node.leaf) return 0;
    int d = 0;
    for (const auto& c : node.children) d = std::max(d, node_depth(*c));
    return d + 1;
}

void node_validate(const TreeNode& node) {
    if (node.leaf) {
        if (node.model.n != node.dim) throw Error("leaf model dimension differs from node dimension");
        node.model.validate();
        return;
    }
    double s = std::accumulate(node.edge_weights.begin(), node.edge_weights.end(), 0.0);
    if (std::abs(s - 1.0) > 1e-9) throw Error("edge weights do not sum to 1");
    for (double w : node.edge_weights)
        if (w < 0.0) throw Error("negative edge weight");
    for (const auto& c : node.children) {
        if (c->dim != node.dim - popcount(node.W)) throw Error("child dimension mismatch");
        node_validate(*c);
    }
}

double node_pdf(const TreeNode& node, Mask x) {
    if (node.leaf) return pdf_exact(node.model, x);
    Mask t = extract_bits(x, node.W);
    double w = node.edge_weights[t];
    if (w == 0.0) return 0.0;
    return w * node_pdf(*node.children[t], extract_bits(x, full_mask(node.dim) & ~node.W));
}

Mask node_sample(const TreeNode& node, Rng& rng) {
    if (node.leaf) {
        // Inline draw from the leaf mixture so the walk consumes one stream.
        const ProductMixture& m = node.model;
        double u = rng.uniform();
        int j = 0;
        double acc = 0.0;
        for (; j < m.k - 1; ++j) {
            acc += m.weights[j];
            if (u < acc) break;
        }
        while (m.weights[j] == 0.0 && j > 0) --j;
        Mask v = 0;
        for (int i = 0; i < m.n; ++i)
            if (rng.bernoulli(m.m(i, j))) v |= Mask{1} << i;
        return v;
    }
    double u = rng.uniform();
    size_t t = 0;
    double acc = 0.0;
    for (; t + 1 < node.edge_weights.size(); ++t) {
        acc += node.edge_weights[t];
        if (u < acc) break;
    }
    while (node.edge_weights[t] == 0.0 && t > 0) --t;
    Mask rest = node_sample(*node.children[t], rng);
    return deposit_bits(t, node.W) | deposit_bits(rest, full_mask(node.dim) & ~node.W);
}

}  // namespace

int SamplingTree::depth() const { return node_depth(*root); }

void SamplingTree::validate() const {
    if (!root) throw Error("empty sampling tree");
    if (root->dim != n) throw Error("root dimension mismatch");
    node_validate(*root);
}

double tree_pdf(const SamplingTree& tree, Mask x) {
    if ((x & ~full_mask(tree.n)) != 0) throw Error("tree_pdf: point outside dimension");
    return node_pdf(*tree.root, x);
}

std::vector<Mask> tree_sample(const SamplingTree& tree, std::uint64_t seed, std::size_t count) {
    if (count < 1) throw Error("tree_sample: count must be positive");
    Rng rng(seed);
    std::vector<Mask> out(count);
    for (auto& x : out) x = node_sample(*tree.root, rng);
    return out;
}

std::optional<std::vector<Mask>> rejection_condition(const std::vector<Mask>& samples, int n, Mask S, Mask s,
                                                     std::size_t required) {
    const Mask keep = full_mask(n) & ~S;
    std::vector<Mask> out;
    for (Mask x : samples)
        if ((x & S) == (s & S)) out.push_back(extract_bits(x, keep));
    if (out.size() < required || out.empty()) return std::nullopt;
    return out;
}

std::vector<double> estimate_edge_weights(const std::vector<Mask>& samples, Mask W) {
    if (samples.empty()) throw Error("estimate_edge_weights: no samples survived conditioning");
    std::vector<double> w(size_t{1} << popcount(W), 0.0);
    for (Mask x : samples) w[extract_bits(x, W)] += 1.0;
    double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& v : w) v /= total;
    return w;
}

int scheffe_sample_budget(std::size_t candidates, double epsilon) {
    return static_cast<int>(std::ceil(32.0 * std::log(2.0 * candidates + 2.0) / (epsilon * epsilon)));
}

int scheffe_select(const std::vector<Hypothesis>& cands, const std::vector<Mask>& samples, int n, double epsilon,
                   std::uint64_t seed) {
    if (cands.empty()) throw Error("scheffe_select: empty candidate list");
    if (cands.size() == 1) return 0;
    if (samples.empty()) throw Error("scheffe_select: no samples");
    const size_t L = cands.size();
    const size_t m = std::min(samples.size(), static_cast<size_t>(scheffe_sample_budget(L, epsilon)));
    std::vector<long> wins(L, 0);

    const bool tables = n <= brute_force_cap() && (static_cast<double>(L) * std::ldexp(1.0, n)) <= 4e7;
    if (tables) {
        const size_t N = size_t{1} << n;
        std::vector<std::vector<double>> p(L);
        for (size_t a = 0; a < L; ++a) p[a] = pdf_table(cands[a].pdf, n);
        std::vector<double> emp(N, 0.0);
        for (size_t q = 0; q < m; ++q) emp[samples[q]] += 1.0 / static_cast<double>(m);
        for (size_t a = 0; a < L; ++a)
            for (size_t b = a + 1; b < L; ++b) {
                double pa = 0.0, pb = 0.0, e = 0.0;
                const double* A = p[a].data();
                const double* B = p[b].data();
                for (size_t x = 0; x < N; ++x)
                    if (A[x] > B[x]) {
                        pa += A[x];
                        pb += B[x];
                        e += emp[x];
                    }
                double da = std::abs(pa - e), db = std::abs(pb - e);
                if (da < db) ++wins[a];
                else if (db < da) ++wins[b];
            }
    } else {
        // Monte Carlo estimates of each candidate's mass on the Scheffe sets.
        std::vector<std::vector<Mask>> draws(L);
        for (size_t a = 0; a < L; ++a) {
            if (!cands[a].sampler) throw Error("scheffe_select: sampler needed above the brute-force cap");
            draws[a] = cands[a].sampler(derive_seed(seed, {a}), m);
        }
        for (size_t a = 0; a < L; ++a)
            for (size_t b = a + 1; b < L; ++b) {
                auto in_set = [&](Mask x) { return cands[a].pdf(x) > cands[b].pdf(x); };
                double pa = 0.0, pb = 0.0, e = 0.0;
                for (Mask x : draws[a]) pa += in_set(x);
                for (Mask x : draws[b]) pb += in_set(x);
                for (size_t q = 0; q < m; ++q) e += in_set(samples[q]);
                pa /= static_cast<double>(draws[a].size());
                pb /= static_cast<double>(draws[b].size());
                e /= static_cast<double>(m);
                double da = std::abs(pa - e), db = std::abs(pb - e);
                if (da < db) ++wins[a];
                else if (db < da) ++wins[b];
            }
    }
    return static_cast<int>(std::max_element(wins.begin(), wins.end()) - wins.begin());
}

SampleSource::SampleSource(std::vector<Mask> samples, int n, std::size_t min_samples, double rho)
    : samples_(std::move(samples)), n_(n), min_samples_(std::max<std::size_t>(min_samples, 1)), rho_(rho) {
    if (samples_.empty()) throw Error("sample source needs at least one sample");
}

std::shared_ptr<const MomentOracle> SampleSource::oracle() const {
    if (!oracle_) oracle_ = std::make_shared<EmpiricalOracle>(samples_, n_, rho_);
    return oracle_;
}

std::vector<double> SampleSource::edge_weights(Mask W) const { return estimate_edge_weights(samples_, W); }

std::shared_ptr<const NodeSource> SampleSource::condition(Mask W, Mask t) const {
    auto kept = rejection_condition(samples_, n_, W, deposit_bits(t, W), min_samples_);
    if (!kept) return nullptr;
    return std::make_shared<SampleSource>(std::move(*kept), n_ - popcount(W), min_samples_, rho_);
}

std::vector<Mask> SampleSource::selection_samples(std::size_t count, std::uint64_t) const {
    return std::vector<Mask>(samples_.begin(), samples_.begin() + std::min(count, samples_.size()));
}

std::shared_ptr<const MomentOracle> ModelSource::oracle() const { return std::make_shared<ExactOracle>(model_); }

std::vector<double> ModelSource::edge_weights(Mask W) const {
    const int w = popcount(W);
    std::vector<double> out(size_t{1} << w);
    for (Mask t = 0; t < out.size(); ++t) out[t] = prob_assignment(model_, W, deposit_bits(t, W));
    double s = std::accumulate(out.begin(), out.end(), 0.0);
    for (double& v : out) v /= s;
    return out;
}

std::shared_ptr<const NodeSource> ModelSource::condition(Mask W, Mask t) const {
    Mask s = deposit_bits(t, W);
    if (!(prob_assignment(model_, W, s) > 0.0)) return nullptr;
    return std::make_shared<ModelSource>(condition_on(model_, W, s));
}

std::vector<Mask> ModelSource::selection_samples(std::size_t count, std::uint64_t seed) const {
    return sample(model_, seed, std::max<std::size_t>(count, 1));
}

double default_tau_trunc(LearnerKind kind, double epsilon, int k) {
    double t = kind == LearnerKind::Subcube ? epsilon / std::ldexp(1.0, k * k)
                                            : std::pow(2.0 * epsilon / (std::ldexp(1.0, k + 1) * 5.0), k);
    return std::max(t, 1e-6);
}

namespace {

struct NListRun {
    const NListConfig& cfg;
    NListStats* stats;
    double tau;

    std::optional<SamplingTree> run(const NodeSource& src, int counter, std::uint64_t seed, int depth) {
        if (counter <= 0) return std::nullopt;
        if (stats) {
            ++stats->nodes;
            stats->max_depth = std::max(stats->max_depth, depth);
        }
        const int n = src.n();
        std::vector<SamplingTree> cands;
        std::vector<Mask> U;
        auto oracle = src.oracle();
        if (stats) ++stats->learner_calls;
        if (cfg.learner == LearnerKind::Subcube) {
            SubcubeConfig sc = cfg.subcube;
            sc.epsilon = cfg.epsilon;
            LearnOutcome out = nondegenerate_learn_subcubes(*oracle, cfg.k, sc);
            if (out.kind == LearnOutcome::Kind::Mixture) cands.push_back(SamplingTree::leaf(out.mixture.to_product()));
            else if (out.kind == LearnOutcome::Kind::ConditionSets) U = out.condition_sets;
        } else {
            GridSpec g = cfg.grid;
            g.materialize_cap = cfg.candidate_cap;
            CandidateList list = nondegenerate_learn_products(*oracle, cfg.k, cfg.epsilon, g);
            for (const auto& m : list.mixtures) cands.push_back(SamplingTree::leaf(m));
            U = list.condition_sets;
        }

        std::sort(U.begin(), U.end(), [](Mask a, Mask b) {
            return popcount(a) != popcount(b) ? popcount(a) < popcount(b) : a < b;
        });
        U.erase(std::unique(U.begin(), U.end()), U.end());
        int attempts = 0;
        for (Mask W : U) {
            if (W == 0 || (W & ~full_mask(n)) != 0) continue;
            if (attempts++ >= cfg.max_branch_sets) break;
            const int w = popcount(W);
            std::vector<double> weights = src.edge_weights(W);
            std::vector<SamplingTree> children;
            bool ok = true;
            for (Mask t = 0; t < weights.size() && ok; ++t) {
                std::shared_ptr<const NodeSource> child;
                if (weights[t] >= tau) child = src.condition(W, t);
                if (!child) {
                    children.push_back(SamplingTree::leaf(ProductMixture::point_mass(n - w, full_mask(n - w))));
                    continue;
                }
                auto sub = run(*child, counter - 1, derive_seed(seed, {W, t}), depth + 1);
                if (!sub) ok = false;
                else children.push_back(std::move(*sub));
            }
            if (!ok) {
                if (stats) ++stats->failed_branches;
                continue;
            }
            cands.push_back(SamplingTree::branch(n, W, std::move(weights), std::move(children)));
        }

        if (cands.empty()) return std::nullopt;
        if (cands.size() == 1) return cands.front();
        std::vector<Hypothesis> hyps;
        for (const auto& c : cands)
            hyps.push_back({[c](Mask x) { return tree_pdf(c, x); },
                            [c](std::uint64_t s, std::size_t m) { return tree_sample(c, s, m); }});
        auto samples = src.selection_samples(scheffe_sample_budget(cands.size(), cfg.epsilon),
                                             derive_seed(seed, {0x5e1ec7ULL}));
        int idx = scheffe_select(hyps, samples, n, cfg.epsilon, derive_seed(seed, {0x5c4effeULL}));
        return cands[idx];
    }
};

}  // namespace

std::optional<SamplingTree> n_list(const NodeSource& source, int counter, const NListConfig& cfg, NListStats* stats) {
    if (counter < 0) throw Error("n_list: counter must be nonnegative");
    double tau = cfg.tau_trunc > 0.0 ? cfg.tau_trunc : default_tau_trunc(cfg.learner, cfg.epsilon, cfg.k);
    NListRun run{cfg, stats, tau};
    return run.run(source, counter, cfg.seed, 0);
}

namespace {

Json node_to_json(const TreeNode& node, int n, Mask S, Mask s, const std::vector<int>& global) {
    Json j;
    std::vector<int> Sl = members(S);
    j["S"] = Sl;
    std::string bits;
    for (int i : Sl) bits.push_back(test_bit(s, i) ? '1' : '0');
    j["s"] = bits;
    if (node.leaf) {
        j["leaf"] = model_to_json(node.model);
        return j;
    }
    std::vector<int> Wl = members(node.W);
    j["W"] = Wl;
    std::vector<int> Wg;
    for (int i : Wl) Wg.push_back(global[i]);
    j["W_global"] = Wg;
    j["weights"] = node.edge_weights;
    std::vector<int> rest;
    for (int i = 0; i < node.dim; ++i)
        if (!test_bit(node.W, i)) rest.push_back(global[i]);
    Json ch = Json::array();
    for (size_t t = 0; t < node.children.size(); ++t) {
        Mask S2 = S, s2 = s;
        for (size_t q = 0; q < Wl.size(); ++q) {
            S2 |= Mask{1} << Wg[q];
            if ((t >> q) & 1) s2 |= Mask{1} << Wg[q];
        }
        ch.push_back(node_to_json(*node.children[t], n, S2, s2, rest));
    }
    j["children"] = ch;
    return j;
}

NodePtr node_from_json(const Json& j, int dim) {
    auto node = std::make_shared<TreeNode>();
    node->dim = dim;
    if (j.contains("leaf")) {
        node->leaf = true;
        node->model = model_from_json(j.at("leaf"));
        if (node->model.n != dim) throw Error("tree file: leaf dimension mismatch");
        return node;
    }
    node->leaf = false;
    node->W = mask_of(j.at("W").get<std::vector<int>>());
    node->edge_weights = j.at("weights").get<std::vector<double>>();
    const int w = popcount(node->W);
    const auto& ch = j.at("children");
    if (ch.size() != (size_t{1} << w) || node->edge_weights.size() != ch.size())
        throw Error("tree file: child count differs from 2^|W|");
    for (const auto& c : ch) node->children.push_back(node_from_json(c, dim - w));
    return node;
}

}  // namespace

std::string tree_to_json(const SamplingTree& tree) {
    Json j;
    j["schema"] = "cubemix.sampling_tree/1";
    j["n"] = tree.n;
    std::vector<int> global(tree.n);
    std::iota(global.begin(), global.end(), 0);
    j["root"] = node_to_json(*tree.root, tree.n, 0, 0, global);
    return j.dump(2);
}

SamplingTree tree_from_json(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
        SamplingTree t;
        t.n = j.at("n").get<int>();
        t.root = node_from_json(j.at("root"), t.n);
        t.validate();
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("tree file: ") + e.what());
    }
}

}  // namespace cubemix
