#pragma once

#include <cstdint>

#include "cubemix/model.hpp"

namespace cubemix {

// Entries from {0, 1/2, 1}; half_bias is the probability of 1/2. Weights in [0.5, 1.5], normalized.
SubcubeMixture random_subcube_mixture(int n, int k, std::uint64_t seed, double half_bias = 1.0 / 3.0);

// Entries uniform in [0,1]; weights as above.
ProductMixture random_product_mixture(int n, int k, std::uint64_t seed);

// sigma_inf_min of the moment matrix restricted to subsets of size <= degree.
double nondegeneracy_score(const ProductMixture& model, int degree);

struct GeneratedModel {
    ProductMixture model;
    double score = 0.0;
    int tries = 0;
    bool degenerate_warning = false;
};

// Resamples (up to max_tries) until nondegeneracy_score >= threshold.
GeneratedModel generate_nondegenerate(bool subcube, int n, int k, std::uint64_t seed, int degree, double threshold,
                                      double half_bias = 1.0 / 3.0, int max_tries = 100);

}  // namespace cubemix
