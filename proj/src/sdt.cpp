#include "cubemix/sdt.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "cubemix/rng.hpp"

namespace cubemix {

void StochasticDecisionTree::validate() const {
    if (n < 0 || n > kMaxDim) throw Error("tree dimension out of range");
    if (nodes.empty()) throw Error("tree has no nodes");
    std::vector<int> seen(nodes.size(), 0);
    std::vector<int> stack{0};
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        if (u < 0 || u >= static_cast<int>(nodes.size())) throw Error("child index out of range");
        if (seen[u]++) throw Error("tree node reached twice");
        const SdtNode& nd = nodes[u];
        switch (nd.kind) {
        case SdtNode::Kind::Leaf:
            if (nd.label != 0 && nd.label != 1) throw Error("leaf label must be 0 or 1");
            break;
        case SdtNode::Kind::Decision:
            if (nd.var < 0 || nd.var >= n) throw Error("decision variable out of range");
            if (nd.children.size() != 2) throw Error("decision node needs two children");
            break;
        case SdtNode::Kind::Stochastic: {
            if (nd.children.empty() || nd.children.size() != nd.probs.size())
                throw Error("stochastic node needs one probability per child");
            double s = 0.0;
            for (double p : nd.probs) {
                if (p < 0.0) throw Error("negative transition probability");
                s += p;
            }
            if (std::abs(s - 1.0) > 1e-9) throw Error("transition probabilities do not sum to 1");
            break;
        }
        }
        for (int c : nd.children) stack.push_back(c);
    }
}

int StochasticDecisionTree::leaf_count() const {
    std::function<int(int)> rec = [&](int u) {
        const SdtNode& nd = nodes[u];
        if (nd.kind == SdtNode::Kind::Leaf) return 1;
        int c = 0;
        for (int v : nd.children) c += rec(v);
        return c;
    };
    return rec(0);
}

int StochasticDecisionTree::stochastic_depth() const {
    std::function<int(int)> rec = [&](int u) {
        const SdtNode& nd = nodes[u];
        int d = 0;
        for (int v : nd.children) d = std::max(d, rec(v));
        return d + (nd.kind == SdtNode::Kind::Stochastic ? 1 : 0);
    };
    return rec(0);
}

double sdt_label_probability(const StochasticDecisionTree& tree, Mask x) {
    std::function<double(int)> rec = [&](int u) -> double {
        const SdtNode& nd = tree.nodes[u];
        switch (nd.kind) {
        case SdtNode::Kind::Leaf: return nd.label;
        case SdtNode::Kind::Decision: return rec(nd.children[test_bit(x, nd.var) ? 1 : 0]);
        case SdtNode::Kind::Stochastic: {
            double p = 0.0;
            for (size_t c = 0; c < nd.children.size(); ++c)
                if (nd.probs[c] > 0.0) p += nd.probs[c] * rec(nd.children[c]);
            return p;
        }
        }
        return 0.0;
    };
    return rec(0);
}

std::vector<LabeledSample> sdt_sample(const StochasticDecisionTree& tree, std::uint64_t seed, std::size_t count) {
    if (count < 1) throw Error("sdt_sample: count must be positive");
    Rng rng(seed);
    std::vector<LabeledSample> out(count);
    for (auto& s : out) {
        s.x = rng.next() & full_mask(tree.n);
        int u = 0;
        while (tree.nodes[u].kind != SdtNode::Kind::Leaf) {
            const SdtNode& nd = tree.nodes[u];
            if (nd.kind == SdtNode::Kind::Decision) {
                u = nd.children[test_bit(s.x, nd.var) ? 1 : 0];
            } else {
                double r = rng.uniform(), acc = 0.0;
                size_t c = 0;
                for (; c + 1 < nd.children.size(); ++c) {
                    acc += nd.probs[c];
                    if (r < acc) break;
                }
                while (nd.probs[c] == 0.0 && c > 0) --c;
                u = nd.children[c];
            }
        }
        s.label = tree.nodes[u].label;
    }
    return out;
}

namespace {

struct PathComponent {
    Mask fixed = 0;
    Mask values = 0;
    double mu = 1.0;
};

std::vector<PathComponent> label_paths(const StochasticDecisionTree& tree, int b) {
    std::vector<PathComponent> out;
    std::function<void(int, PathComponent)> rec = [&](int u, PathComponent p) {
        const SdtNode& nd = tree.nodes[u];
        switch (nd.kind) {
        case SdtNode::Kind::Leaf:
            if (nd.label == b && p.mu > 0.0) out.push_back(p);
            return;
        case SdtNode::Kind::Decision:
            for (int bit = 0; bit < 2; ++bit) {
                if (test_bit(p.fixed, nd.var)) {
                    if (test_bit(p.values, nd.var) != (bit == 1)) continue;  // contradicts an earlier test
                    rec(nd.children[bit], p);
                } else {
                    PathComponent q = p;
                    q.fixed |= Mask{1} << nd.var;
                    if (bit) q.values |= Mask{1} << nd.var;
                    rec(nd.children[bit], q);
                }
            }
            return;
        case SdtNode::Kind::Stochastic:
            for (size_t c = 0; c < nd.children.size(); ++c) {
                PathComponent q = p;
                q.mu *= nd.probs[c];
                rec(nd.children[c], q);
            }
            return;
        }
    };
    rec(0, PathComponent{});
    return out;
}

}  // namespace

double sdt_label_mass(const StochasticDecisionTree& tree, int b) {
    double s = 0.0;
    for (const auto& p : label_paths(tree, b)) s += p.mu * std::ldexp(1.0, -popcount(p.fixed));
    return s;
}

SubcubeMixture sdt_to_mixture(const StochasticDecisionTree& tree, int b) {
    std::vector<PathComponent> paths = label_paths(tree, b);
    double total = 0.0;
    for (const auto& p : paths) total += p.mu * std::ldexp(1.0, -popcount(p.fixed));
    if (!(total > 0.0)) throw Error("sdt_to_mixture: label has probability zero");
    const int k = static_cast<int>(paths.size());
    std::vector<double> w(k);
    std::vector<Cube> centers(static_cast<size_t>(tree.n) * k, Cube::Half);
    for (int j = 0; j < k; ++j) {
        w[j] = paths[j].mu * std::ldexp(1.0, -popcount(paths[j].fixed)) / total;
        for (int i : members(paths[j].fixed))
            centers[static_cast<size_t>(i) * k + j] = test_bit(paths[j].values, i) ? Cube::One : Cube::Zero;
    }
    double s = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& x : w) x /= s;
    return SubcubeMixture(tree.n, k, w, centers);
}

double bayes_optimal_error(const StochasticDecisionTree& tree) {
    if (tree.n > brute_force_cap()) throw Error("bayes_optimal_error: n above the brute-force cap");
    double err = 0.0;
    for (Mask x = 0; x < (Mask{1} << tree.n); ++x) {
        double p = sdt_label_probability(tree, x);
        err += std::min(p, 1.0 - p);
    }
    return std::ldexp(err, -tree.n);
}

double classifier_error(const StochasticDecisionTree& tree, const std::function<int(Mask)>& predict) {
    if (tree.n > brute_force_cap()) throw Error("classifier_error: n above the brute-force cap");
    double err = 0.0;
    for (Mask x = 0; x < (Mask{1} << tree.n); ++x) {
        double p = sdt_label_probability(tree, x);
        err += predict(x) == 1 ? 1.0 - p : p;
    }
    return std::ldexp(err, -tree.n);
}

StochasticDecisionTree random_sdt(const SdtGenSpec& spec, std::uint64_t seed) {
    if (spec.k < 1 || spec.n < 1 || spec.max_fanout < 2) throw Error("random_sdt: invalid generator parameters");
    Rng rng(seed);
    StochasticDecisionTree t;
    t.n = spec.n;
    t.nodes.push_back(SdtNode{});
    struct Open {
        int node;
        int stoch;
        Mask used;
    };
    std::vector<Open> leaves{{0, 0, 0}};
    bool placed = false;
    int count = 1;
    for (int guard = 0; count < spec.k && guard < 100000; ++guard) {
        int pick = rng.below(static_cast<int>(leaves.size()));
        Open o = leaves[pick];
        const int budget = spec.k - count;
        const bool can_stoch = o.stoch < spec.s;
        const bool can_dec = popcount(o.used) < spec.n;
        bool stoch = can_stoch && (rng.uniform() < 0.4 || (spec.require_stochastic && !placed && budget <= 2));
        if (!stoch && !can_dec) {
            if (!can_stoch) continue;
            stoch = true;
        }
        leaves.erase(leaves.begin() + pick);
        SdtNode nd;
        if (stoch) {
            int f = 2 + rng.below(std::min(spec.max_fanout, budget + 1) - 1);
            nd.kind = SdtNode::Kind::Stochastic;
            if (spec.dyadic) {
                if (f == 2) {
                    static const double pal[3][2] = {{0.5, 0.5}, {0.25, 0.75}, {0.75, 0.25}};
                    int q = rng.below(3);
                    nd.probs = {pal[q][0], pal[q][1]};
                } else {
                    nd.probs.assign(f, 0.0);
                    // one child gets 1/2, the rest share the other half in dyadic pieces
                    double rest = 0.5;
                    int half = rng.below(f);
                    nd.probs[half] = 0.5;
                    for (int c = 0, left = f - 1; c < f; ++c) {
                        if (c == half) continue;
                        nd.probs[c] = --left == 0 ? rest : rest / 2;
                        rest -= nd.probs[c];
                    }
                }
            } else {
                double s = 0.0;
                for (int c = 0; c < f; ++c) {
                    nd.probs.push_back(0.05 + rng.uniform());
                    s += nd.probs.back();
                }
                for (double& p : nd.probs) p /= s;
            }
            placed = true;
            for (int c = 0; c < f; ++c) {
                nd.children.push_back(static_cast<int>(t.nodes.size()));
                leaves.push_back({static_cast<int>(t.nodes.size()), o.stoch + 1, o.used});
                t.nodes.push_back(SdtNode{});
            }
            count += f - 1;
        } else {
            std::vector<int> free = members(full_mask(spec.n) & ~o.used);
            int var = free[rng.below(static_cast<int>(free.size()))];
            nd.kind = SdtNode::Kind::Decision;
            nd.var = var;
            for (int c = 0; c < 2; ++c) {
                nd.children.push_back(static_cast<int>(t.nodes.size()));
                leaves.push_back({static_cast<int>(t.nodes.size()), o.stoch, o.used | (Mask{1} << var)});
                t.nodes.push_back(SdtNode{});
            }
            count += 1;
        }
        t.nodes[o.node] = nd;
    }
    int ones = 0;
    for (const auto& o : leaves) {
        t.nodes[o.node].label = rng.below(2);
        ones += t.nodes[o.node].label;
    }
    if (leaves.size() > 1 && (ones == 0 || ones == static_cast<int>(leaves.size())))
        t.nodes[leaves.back().node].label ^= 1;
    t.validate();
    return t;
}

double SdtClassifier::joint(Mask x, int b) const {
    const double u = std::ldexp(1.0, -n);
    double pos = constant ? (b_star == b ? u : 0.0) : pi_b * tree_pdf(*conditional, x);
    if (constant) return pos;
    return b == b_star ? pos : std::max(0.0, u - pos);
}

int SdtClassifier::predict(Mask x) const {
    if (constant) return b_star;
    return joint(x, b_star) >= joint(x, 1 - b_star) ? b_star : 1 - b_star;
}

SdtClassifier learn_sdt_classifier(const std::vector<LabeledSample>& samples, int n, int k, double epsilon,
                                   const SdtLearnConfig& cfg) {
    if (samples.empty()) throw Error("learn_sdt_classifier: no samples");
    SdtClassifier c;
    c.n = n;
    std::size_t ones = 0;
    for (const auto& s : samples) ones += s.label;
    c.b_star = 2 * ones >= samples.size() ? 1 : 0;
    std::vector<Mask> pos;
    for (const auto& s : samples)
        if (s.label == c.b_star) pos.push_back(s.x);
    c.pi_b = static_cast<double>(pos.size()) / static_cast<double>(samples.size());
    if (pos.size() == samples.size()) return c;

    SampleSource src(pos, n, cfg.min_samples);
    NListConfig nc = cfg.nlist;
    nc.k = k;
    nc.epsilon = epsilon / 2.0;
    nc.learner = LearnerKind::Subcube;
    auto tree = n_list(src, k, nc);
    if (!tree) return c;
    c.conditional = std::move(*tree);
    c.constant = false;
    return c;
}

Json sdt_to_json(const StochasticDecisionTree& tree) {
    Json j;
    j["n"] = tree.n;
    Json arr = Json::array();
    for (const auto& nd : tree.nodes) {
        Json e;
        switch (nd.kind) {
        case SdtNode::Kind::Leaf:
            e["kind"] = "leaf";
            e["label"] = nd.label;
            break;
        case SdtNode::Kind::Decision:
            e["kind"] = "decision";
            e["var"] = nd.var;
            e["children"] = nd.children;
            break;
        case SdtNode::Kind::Stochastic:
            e["kind"] = "stochastic";
            e["children"] = nd.children;
            e["probs"] = nd.probs;
            break;
        }
        arr.push_back(e);
    }
    j["nodes"] = arr;
    return j;
}

StochasticDecisionTree sdt_from_json(const Json& j) {
    StochasticDecisionTree t;
    try {
        t.n = j.at("n").get<int>();
        for (const auto& e : j.at("nodes")) {
            SdtNode nd;
            std::string kind = e.at("kind").get<std::string>();
            if (kind == "leaf") {
                nd.kind = SdtNode::Kind::Leaf;
                nd.label = e.at("label").get<int>();
            } else if (kind == "decision") {
                nd.kind = SdtNode::Kind::Decision;
                nd.var = e.at("var").get<int>();
                nd.children = e.at("children").get<std::vector<int>>();
            } else if (kind == "stochastic") {
                nd.kind = SdtNode::Kind::Stochastic;
                nd.children = e.at("children").get<std::vector<int>>();
                nd.probs = e.at("probs").get<std::vector<double>>();
            } else {
                throw Error("tree file: unknown node kind '" + kind + "'");
            }
            t.nodes.push_back(nd);
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("tree file: ") + e.what());
    }
    t.validate();
    return t;
}

}  // namespace cubemix
