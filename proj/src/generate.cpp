#include "cubemix/generate.hpp"

#include "cubemix/linalg.hpp"
#include "cubemix/rng.hpp"

namespace cubemix {

namespace {

std::vector<double> random_weights(int k, Rng& rng) {
    std::vector<double> w(k);
    double z = 0.0;
    for (double& x : w) z += (x = 0.5 + rng.uniform());
    for (double& x : w) x /= z;
    return w;
}

}  // namespace

SubcubeMixture random_subcube_mixture(int n, int k, std::uint64_t seed, double half_bias) {
    if (k < 1 || n < 0 || n > kMaxDim) throw Error("random_subcube_mixture: bad n or k");
    Rng rng(seed);
    std::vector<double> w = random_weights(k, rng);
    std::vector<Cube> c(static_cast<size_t>(n) * k);
    for (auto& e : c) e = rng.uniform() < half_bias ? Cube::Half : (rng.bernoulli(0.5) ? Cube::One : Cube::Zero);
    return SubcubeMixture(n, k, w, c);
}

ProductMixture random_product_mixture(int n, int k, std::uint64_t seed) {
    if (k < 1 || n < 0 || n > kMaxDim) throw Error("random_product_mixture: bad n or k");
    Rng rng(seed);
    std::vector<double> w = random_weights(k, rng);
    std::vector<double> m(static_cast<size_t>(n) * k);
    for (double& x : m) x = rng.uniform();
    return ProductMixture(n, k, w, m);
}

double nondegeneracy_score(const ProductMixture& model, int degree) {
    std::vector<Mask> rows = subsets_up_to(full_mask(model.n), std::min(degree, model.n));
    return sigma_inf_min(moment_rows(model.marginals, model.n, model.k, rows));
}

GeneratedModel generate_nondegenerate(bool subcube, int n, int k, std::uint64_t seed, int degree, double threshold,
                                      double half_bias, int max_tries) {
    GeneratedModel g;
    for (int t = 0; t < max_tries; ++t) {
        std::uint64_t s = derive_seed(seed, {static_cast<std::uint64_t>(t)});
        ProductMixture m = subcube ? random_subcube_mixture(n, k, s, half_bias).to_product()
                                   : random_product_mixture(n, k, s);
        double score = nondegeneracy_score(m, degree);
        g.tries = t + 1;
        if (t == 0 || score > g.score) {
            g.model = m;
            g.score = score;
        }
        if (score >= threshold) return g;
    }
    g.degenerate_warning = true;
    return g;
}

}  // namespace cubemix
