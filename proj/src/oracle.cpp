#include "cubemix/oracle.hpp"

#include <cmath>

#include "cubemix/rng.hpp"

namespace cubemix {

double samples_for_accuracy(double eps, double rho) { return 3.0 / (eps * eps) * std::log(2.0 / rho); }

double accuracy_for_samples(std::size_t count, double rho) {
    return std::sqrt(3.0 * std::log(2.0 / rho) / static_cast<double>(count));
}

EmpiricalOracle::EmpiricalOracle(const std::vector<Mask>& samples, int n, double rho)
    : n_(n), total_(samples.size()) {
    if (samples.empty()) throw Error("empirical oracle: empty sample set, insufficient data");
    if (!(rho > 0.0 && rho < 1.0)) throw Error("empirical oracle: confidence parameter outside (0,1)");
    tolerance_ = accuracy_for_samples(total_, rho);
    std::unordered_map<Mask, double> hist;
    const Mask outside = ~full_mask(n);
    for (Mask x : samples) {
        if (x & outside) throw Error("empirical oracle: sample outside dimension");
        hist[x] += 1.0;
    }
    points_.reserve(hist.size());
    counts_.reserve(hist.size());
    for (const auto& [x, c] : hist) {
        points_.push_back(x);
        counts_.push_back(c);
    }
}

double EmpiricalOracle::moment(Mask S) const {
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = cache_.find(S);
        if (it != cache_.end()) return it->second;
    }
    double c = 0.0;
    for (size_t q = 0; q < points_.size(); ++q)
        if ((points_[q] & S) == S) c += counts_[q];
    double v = c / static_cast<double>(total_);
    std::lock_guard<std::mutex> lock(mu_);
    cache_.emplace(S, v);
    return v;
}

double PerturbedOracle::moment(Mask S) const {
    std::uint64_t h = derive_seed(seed_, {S});
    double u = static_cast<double>(h >> 11) * 0x1.0p-53;  // in [0,1)
    double v = base_->moment(S) + magnitude_ * (2.0 * u - 1.0);
    return v;
}

}  // namespace cubemix
