#pragma once

#include <optional>
#include <vector>

#include "cubemix/linalg.hpp"
#include "cubemix/model.hpp"
#include "cubemix/oracle.hpp"

namespace cubemix {

struct BasisState {
    std::vector<Mask> sets;  // sets[0] is always the empty set
    Mask J = 0;              // union of sets
};

struct WeightWindow {
    double tau_small;
    double tau_big;
};

// Practical constants for the subcube learner. Negative values mean "derive the default".
struct SubcubeConfig {
    double epsilon = 0.1;
    double inspan_threshold = -1.0;   // default max(1e-6, 2 * tolerance * (k + 1))
    double inspan_coef_bound = 1e6;   // box for the unconstrained span coefficients
    double gap_ratio = 100.0;
    double weight_floor = -1.0;       // default epsilon / (20 k)
    double tau = -1.0;                // default epsilon / 10
    double rho = 0.01;
    bool largest_gap = false;         // pick the largest qualifying r' instead of the smallest
    bool arbitrary_impostor_branch = false;
    double verify_threshold = -1.0;   // default max(2 * tolerance, epsilon / 2 * k^(-c_hypo k))
    double c_hypo = 1.0;
    double impostor_residual = -1.0;  // default: same as the in-span threshold
};

int inspan_degree(int k);   // ceil(2 log2(2k))
int verify_degree(int k);   // floor(2 log2(2k))

double effective_inspan_threshold(const SubcubeConfig& cfg, const MomentOracle& oracle, int k);
double effective_verify_threshold(const SubcubeConfig& cfg, const MomentOracle& oracle, int k);

// Subsets of the complement of U (within [n]) of size < degree, capped by n - |U|.
std::vector<Mask> restricted_rows(int n, Mask U, int degree);

struct SpanCheck {
    bool in_span = true;
    double residual = 0.0;
};

SpanCheck in_span_residual(const MomentOracle& oracle, const BasisState& basis, Mask Tp, int degree,
                           double threshold, double coef_bound = 1e6);

bool in_span(const MomentOracle& oracle, const BasisState& basis, Mask Tp, const WeightWindow& window, int degree,
             int k, const SubcubeConfig& cfg = {});

struct GrowResult {
    bool fail = false;
    BasisState basis;  // valid when !fail
    Mask J = 0;        // the failing union when fail
};

GrowResult grow_by_one(const MomentOracle& oracle, int k, const WeightWindow& window, const SubcubeConfig& cfg = {});

// rows: one row per basis set, one column per guessed component; moments: E[x_T] per basis set.
// Returns weights sorted descending together with the permutation applied to the columns.
struct WeightSolve {
    std::vector<double> weights;
    std::vector<int> order;
    double residual = 0.0;
};

WeightSolve solve_mixing_weights(const Matrix& guessed_rows, const std::vector<double>& moments);
std::vector<double> solve_mixing_weights_sorted(const Matrix& guessed_rows, const std::vector<double>& moments);

struct CenterRow {
    std::vector<Cube> row;
    std::vector<double> raw;
    double residual = 0.0;
    bool flagged = false;
};

CenterRow solve_center_row(const Matrix& guessed_rows, const std::vector<double>& weights,
                           const std::vector<double>& moments_i, double impostor_threshold = 1e300);

// Index r' (number of retained components) chosen from weights sorted descending.
int truncate_at_gap(const std::vector<double>& sorted_weights, double gap_ratio, double floor, bool largest);

std::optional<Mask> moment_discrepancy_witness(const ProductMixture& candidate, const MomentOracle& oracle,
                                               int degree, double threshold);

struct LearnOutcome {
    enum class Kind { Mixture, ConditionSets, Fail } kind = Kind::Fail;
    SubcubeMixture mixture;
    std::vector<Mask> condition_sets;
    Mask fail_union = 0;
};

struct LearnStats {
    int bases = 0;
    long guesses = 0;
    long flagged_rows = 0;
};

LearnOutcome nondegenerate_learn_subcubes(const MomentOracle& oracle, int k, const SubcubeConfig& cfg = {},
                                          LearnStats* stats = nullptr);

}  // namespace cubemix
