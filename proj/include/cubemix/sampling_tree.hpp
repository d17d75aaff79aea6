#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cubemix/model.hpp"
#include "cubemix/oracle.hpp"
#include "cubemix/product_learn.hpp"
#include "cubemix/subcube_learn.hpp"

namespace cubemix {

// A node works in local coordinates 0..dim-1 (the coordinates not yet conditioned on).
struct TreeNode {
    int dim = 0;
    bool leaf = true;
    ProductMixture model;  // leaf distribution over dim coordinates
    Mask W = 0;            // local branch set
    std::vector<double> edge_weights;                      // indexed by t in {0,1}^{|W|}
    std::vector<std::shared_ptr<const TreeNode>> children;  // over dim - |W| coordinates
};

using NodePtr = std::shared_ptr<const TreeNode>;

struct SamplingTree {
    int n = 0;
    NodePtr root;

    static SamplingTree leaf(const ProductMixture& model);
    // Builds an internal root from children already rooted at the branch points.
    static SamplingTree branch(int n, Mask W, std::vector<double> edge_weights, std::vector<SamplingTree> children);

    int depth() const;
    void validate() const;
};

double tree_pdf(const SamplingTree& tree, Mask x);
std::vector<Mask> tree_sample(const SamplingTree& tree, std::uint64_t seed, std::size_t count);

// Samples with x_S = s, projected onto the remaining coordinates; nullopt when fewer than required survive.
std::optional<std::vector<Mask>> rejection_condition(const std::vector<Mask>& samples, int n, Mask S, Mask s,
                                                     std::size_t required);

// Conditional frequencies of x_W = t, t enumerated over the bits of W in ascending coordinate order.
std::vector<double> estimate_edge_weights(const std::vector<Mask>& samples, Mask W);

struct Hypothesis {
    PdfFn pdf;
    std::function<std::vector<Mask>(std::uint64_t, std::size_t)> sampler;  // used only above the brute-force cap
};

int scheffe_sample_budget(std::size_t candidates, double epsilon);

// Pairwise tournament: most wins, ties to the lowest index.
int scheffe_select(const std::vector<Hypothesis>& candidates, const std::vector<Mask>& samples, int n,
                   double epsilon, std::uint64_t seed = 0);

// Where a node obtains its data: conditioned samples, or an exact model.
class NodeSource {
public:
    virtual ~NodeSource() = default;
    virtual int n() const = 0;
    virtual std::shared_ptr<const MomentOracle> oracle() const = 0;
    virtual std::vector<double> edge_weights(Mask W) const = 0;
    // nullptr when the branch has too little data (or zero probability).
    virtual std::shared_ptr<const NodeSource> condition(Mask W, Mask t) const = 0;
    virtual std::vector<Mask> selection_samples(std::size_t count, std::uint64_t seed) const = 0;
};

class SampleSource : public NodeSource {
public:
    SampleSource(std::vector<Mask> samples, int n, std::size_t min_samples, double rho = 0.05);
    int n() const override { return n_; }
    std::shared_ptr<const MomentOracle> oracle() const override;
    std::vector<double> edge_weights(Mask W) const override;
    std::shared_ptr<const NodeSource> condition(Mask W, Mask t) const override;
    std::vector<Mask> selection_samples(std::size_t count, std::uint64_t seed) const override;
    std::size_t size() const { return samples_.size(); }

private:
    std::vector<Mask> samples_;
    int n_;
    std::size_t min_samples_;
    double rho_;
    mutable std::shared_ptr<const MomentOracle> oracle_;
};

class ModelSource : public NodeSource {
public:
    explicit ModelSource(ProductMixture model) : model_(std::move(model)) {}
    int n() const override { return model_.n; }
    std::shared_ptr<const MomentOracle> oracle() const override;
    std::vector<double> edge_weights(Mask W) const override;
    std::shared_ptr<const NodeSource> condition(Mask W, Mask t) const override;
    std::vector<Mask> selection_samples(std::size_t count, std::uint64_t seed) const override;

private:
    ProductMixture model_;
};

enum class LearnerKind { Subcube, Product };

struct NListConfig {
    LearnerKind learner = LearnerKind::Subcube;
    int k = 2;
    double epsilon = 0.1;
    double tau_trunc = -1.0;        // negative: default per learner kind
    int max_branch_sets = 24;       // condition sets explored per node
    std::size_t candidate_cap = 10000;
    SubcubeConfig subcube;
    GridSpec grid;
    std::uint64_t seed = 0;
};

double default_tau_trunc(LearnerKind kind, double epsilon, int k);

struct NListStats {
    long nodes = 0;
    long learner_calls = 0;
    long failed_branches = 0;
    int max_depth = 0;
};

// nullopt means Fail.
std::optional<SamplingTree> n_list(const NodeSource& source, int counter, const NListConfig& cfg,
                                   NListStats* stats = nullptr);

std::string tree_to_json(const SamplingTree& tree);
SamplingTree tree_from_json(const std::string& text);

}  // namespace cubemix
