#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cubemix/io.hpp"
#include "cubemix/model.hpp"
#include "cubemix/sampling_tree.hpp"

namespace cubemix {

struct SdtNode {
    enum class Kind { Decision, Stochastic, Leaf } kind = Kind::Leaf;
    int var = -1;                // decision nodes: children[0] when x_var = 0, children[1] when 1
    int label = 0;               // leaves
    std::vector<int> children;   // indices into the node array
    std::vector<double> probs;   // stochastic nodes
};

struct StochasticDecisionTree {
    int n = 0;
    std::vector<SdtNode> nodes;  // nodes[0] is the root

    void validate() const;
    int leaf_count() const;
    // Largest number of stochastic nodes on a root-to-leaf path.
    int stochastic_depth() const;
};

// Pr[label = 1 | x].
double sdt_label_probability(const StochasticDecisionTree& tree, Mask x);

std::vector<LabeledSample> sdt_sample(const StochasticDecisionTree& tree, std::uint64_t seed, std::size_t count);

// Pr[label = b] under uniform x.
double sdt_label_mass(const StochasticDecisionTree& tree, int b);

SubcubeMixture sdt_to_mixture(const StochasticDecisionTree& tree, int b);

double bayes_optimal_error(const StochasticDecisionTree& tree);

struct SdtGenSpec {
    int n = 10;
    int k = 4;                 // leaves
    int s = 1;                 // stochastic nodes per path
    int max_fanout = 3;
    bool dyadic = true;        // probabilities from {1/4, 1/2, 3/4}-style palettes
    bool require_stochastic = true;
};

StochasticDecisionTree random_sdt(const SdtGenSpec& spec, std::uint64_t seed);

struct SdtLearnConfig {
    NListConfig nlist;          // k and epsilon are overwritten by the learner arguments
    std::size_t min_samples = 1000;
};

struct SdtClassifier {
    int n = 0;
    int b_star = 1;
    double pi_b = 1.0;
    bool constant = true;
    std::optional<SamplingTree> conditional;  // learned x | label = b_star

    // Learned joint D'(x, b).
    double joint(Mask x, int b) const;
    int predict(Mask x) const;
};

SdtClassifier learn_sdt_classifier(const std::vector<LabeledSample>& samples, int n, int k, double epsilon,
                                   const SdtLearnConfig& cfg = {});

// Exact misclassification probability of a predictor under the tree (brute force over x).
double classifier_error(const StochasticDecisionTree& tree, const std::function<int(Mask)>& predict);

Json sdt_to_json(const StochasticDecisionTree& tree);
StochasticDecisionTree sdt_from_json(const Json& j);

}  // namespace cubemix
