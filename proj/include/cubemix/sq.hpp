#pragma once

#include <vector>

#include "cubemix/linalg.hpp"
#include "cubemix/model.hpp"

namespace cubemix {

bool is_prime(int p);

// ell x (ell+1)^2 matrix (a | b_1 | ... | b_{ell+1}); every entrywise product of at most ell rows sums to 0.
Matrix build_superortho_matrix(int ell, const std::vector<double>& xs);

// The extra row completing the family to m = ell + 1 rows: block b_i carries scale * v_i * x_i at its first
// position and the negation at its second, with v the alternating binomial kernel.
std::vector<double> superortho_top_row(const std::vector<double>& xs, double scale);

// True iff <prod_{r in S} rows_r, weights> vanishes (within 1e-10) for every 1 <= |S| <= d.
bool verify_superorthogonal(const Matrix& rows, const std::vector<double>& weights, int d);

struct MomentMatchInstance {
    int m = 0;
    int k = 0;
    ProductMixture A;
    double delta = 0.0;
    double lambda1 = 0.0;  // scale applied to the top row
    std::vector<double> xs;
};

// delta(A) = -(lambda / m^2) * sum_i v_i x_i^m evaluated in extended precision.
double delta_closed_form(int m, double lambda, const std::vector<double>& xs);

MomentMatchInstance build_instance(int m);

// A on coordinates I, uniform elsewhere.
ProductMixture embed_instance(const MomentMatchInstance& inst, int n, Mask I);

struct InstanceStats {
    double chi_pair = 0.0;
    double chi_sq = 0.0;
    double tvd = 0.0;
    double chi_pair_closed = 0.0;
    double chi_sq_closed = 0.0;
    double tvd_closed = 0.0;
};

InstanceStats instance_stats(const MomentMatchInstance& inst, int n, Mask I, Mask J);

}  // namespace cubemix
