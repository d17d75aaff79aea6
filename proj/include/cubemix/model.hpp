#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "cubemix/common.hpp"

namespace cubemix {

// Mixture of k product distributions over {0,1}^n. marginals is row-major n x k.
struct ProductMixture {
    int n = 0;
    int k = 0;
    std::vector<double> weights;
    std::vector<double> marginals;

    ProductMixture() = default;
    ProductMixture(int n, int k, std::vector<double> weights, std::vector<double> marginals);

    double m(int i, int j) const { return marginals[static_cast<size_t>(i) * k + j]; }
    double& m(int i, int j) { return marginals[static_cast<size_t>(i) * k + j]; }
    std::vector<double> row(int i) const;

    void validate() const;

    static ProductMixture uniform(int n);
    static ProductMixture point_mass(int n, Mask x);
};

// Entry of a subcube center: 0, 1/2 or 1, stored as the exact code 0, 1, 2 (value = code / 2).
enum class Cube : std::uint8_t { Zero = 0, Half = 1, One = 2 };

inline double cube_value(Cube c) { return static_cast<int>(c) * 0.5; }
Cube nearest_cube(double v);

struct SubcubeMixture {
    int n = 0;
    int k = 0;
    std::vector<double> weights;
    std::vector<Cube> centers;  // row-major n x k

    SubcubeMixture() = default;
    SubcubeMixture(int n, int k, std::vector<double> weights, std::vector<Cube> centers);

    Cube c(int i, int j) const { return centers[static_cast<size_t>(i) * k + j]; }
    Cube& c(int i, int j) { return centers[static_cast<size_t>(i) * k + j]; }

    void validate() const;
    ProductMixture to_product() const;
};

// Returns true and fills out if every marginal is exactly 0, 1/2 or 1.
bool as_subcube(const ProductMixture& p, SubcubeMixture& out);

std::vector<Mask> sample(const ProductMixture& model, std::uint64_t seed, std::size_t count);

double pdf_exact(const ProductMixture& model, Mask x);

double exact_moment(const ProductMixture& model, Mask S);

// Pr[x_S = s]; s holds bits at the positions of S.
double prob_assignment(const ProductMixture& model, Mask S, Mask s);

ProductMixture condition_on(const ProductMixture& model, Mask S, Mask s);
SubcubeMixture condition_on(const SubcubeMixture& model, Mask S, Mask s);

// Marginal of the model on the coordinates outside S.
ProductMixture marginalize_out(const ProductMixture& model, Mask S);

// Removes linear dependencies among the columns of the moment matrix truncated to subsets of
// size <= degree_cap by walking the weights along kernel directions.
ProductMixture collapse_rank(const ProductMixture& model, int degree_cap);

// Drops columns whose weight is exactly zero.
ProductMixture drop_zero_weights(const ProductMixture& model);

using PdfFn = std::function<double(Mask)>;

double tvd_bruteforce(const PdfFn& d1, const PdfFn& d2, int n);
double tvd_bruteforce(const ProductMixture& a, const ProductMixture& b);

std::vector<double> pdf_table(const PdfFn& d, int n);

}  // namespace cubemix
