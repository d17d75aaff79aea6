#pragma once

#include <memory>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "cubemix/common.hpp"
#include "cubemix/model.hpp"

namespace cubemix {

// Answers E[x_S] queries, either exactly or from samples with a declared additive tolerance.
class MomentOracle {
public:
    virtual ~MomentOracle() = default;
    virtual int n() const = 0;
    virtual double tolerance() const = 0;
    virtual bool exact() const = 0;
    virtual double moment(Mask S) const = 0;
};

class ExactOracle : public MomentOracle {
public:
    explicit ExactOracle(ProductMixture model) : model_(std::move(model)) {}
    int n() const override { return model_.n; }
    double tolerance() const override { return 0.0; }
    bool exact() const override { return true; }
    double moment(Mask S) const override { return exact_moment(model_, S); }
    const ProductMixture& model() const { return model_; }

private:
    ProductMixture model_;
};

// Number of samples giving additive accuracy eps with confidence 1 - rho per moment.
double samples_for_accuracy(double eps, double rho);
// Inverse: accuracy achieved by count samples at confidence 1 - rho.
double accuracy_for_samples(std::size_t count, double rho);

class EmpiricalOracle : public MomentOracle {
public:
    static constexpr double kDefaultConfidence = 0.05;

    EmpiricalOracle(const std::vector<Mask>& samples, int n, double rho = kDefaultConfidence);
    int n() const override { return n_; }
    double tolerance() const override { return tolerance_; }
    bool exact() const override { return false; }
    double moment(Mask S) const override;
    std::size_t sample_count() const { return total_; }

private:
    int n_;
    std::size_t total_;
    double tolerance_;
    std::vector<Mask> points_;
    std::vector<double> counts_;
    mutable std::mutex mu_;
    mutable std::unordered_map<Mask, double> cache_;
};

// Wraps another oracle and adds a deterministic bounded perturbation to every moment.
class PerturbedOracle : public MomentOracle {
public:
    PerturbedOracle(std::shared_ptr<const MomentOracle> base, double magnitude, std::uint64_t seed)
        : base_(std::move(base)), magnitude_(magnitude), seed_(seed) {}
    int n() const override { return base_->n(); }
    double tolerance() const override { return base_->tolerance() + magnitude_; }
    bool exact() const override { return false; }
    double moment(Mask S) const override;

private:
    std::shared_ptr<const MomentOracle> base_;
    double magnitude_;
    std::uint64_t seed_;
};

}  // namespace cubemix
