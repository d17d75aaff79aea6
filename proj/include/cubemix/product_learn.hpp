#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "cubemix/linalg.hpp"
#include "cubemix/model.hpp"
#include "cubemix/oracle.hpp"

namespace cubemix {

// s(k) = 2k + 1 + k(k-1)/2
int s_of(int k);

double default_entry_step(double epsilon, int k, int n);  // eps / (8 k^2 n)
double default_weight_step(double epsilon, int k);        // 2 eps / (3 k^2)

// Conditioning level assumed of the moment matrices: max(1e-6, (eps^2 / (100 n k^2 2^k))^k).
double default_sigma_cond(double epsilon, int n, int k);
// Per-moment sample accuracy the product learner asks for: sigma_cond eps^2 / (k^3 n) / 100.
double product_sample_accuracy(double epsilon, int n, int k);

struct GridSpec {
    double entry_step = -1.0;   // negative: default_entry_step
    double weight_step = -1.0;  // negative: default_weight_step
    bool prefilter = true;      // prune guesses whose degree <= 2 moments on J are off
    std::size_t row_budget = 5000;
    std::size_t materialize_cap = 10000;
};

// Points 0, step, 2 step, ... below 1, followed by 1 itself.
std::vector<double> grid_points(double step);

struct CoefficientFit {
    std::vector<double> coefficients;
    double residual = 0.0;
};

CoefficientFit learn_coefficients(const MomentOracle& oracle, Mask J, int i, int degree_cap,
                                  std::size_t row_budget = 5000);

struct CandidateList {
    std::vector<ProductMixture> mixtures;
    std::vector<Mask> condition_sets;
    std::size_t raw_count = 0;  // candidates visited before dedup and the materialize cap
    bool truncated = false;
};

// Closed-form number of candidates visited with the prefilter off.
double candidate_count_closed_form(int n, int k, const std::vector<double>& entry_grid,
                                   const std::vector<double>& weight_grid);

// Streams every candidate to visit (return false to stop). Returns the number visited.
std::size_t for_each_product_candidate(const MomentOracle& oracle, int k, double epsilon, const GridSpec& grid,
                                       const std::function<bool(const ProductMixture&)>& visit);

CandidateList nondegenerate_learn_products(const MomentOracle& oracle, int k, double epsilon,
                                           const GridSpec& grid = {});

// Threshold below which collapse_ill_conditioned accepts a model.
double collapse_gate(double eta, int k);

ProductMixture collapse_ill_conditioned(const ProductMixture& model, double eta);

// Largest |E_model[x_S] - oracle(S)| over 1 <= |S| <= degree.
double moment_discrepancy(const ProductMixture& model, const MomentOracle& oracle, int degree);

// Keeps the cap candidates with the smallest moment discrepancy, preserving relative order.
std::vector<ProductMixture> screen_candidates(std::vector<ProductMixture> list, const MomentOracle& oracle,
                                              int degree, std::size_t cap);

}  // namespace cubemix
