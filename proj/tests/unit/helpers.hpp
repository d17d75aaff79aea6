#pragma once

#include "../oracles.hpp"
#include "cubemix/model.hpp"

inline oracle::Mix to_oracle(const cubemix::ProductMixture& p) {
    oracle::Mix d;
    d.n = p.n;
    d.k = p.k;
    d.w = p.weights;
    d.m.assign(p.n, std::vector<double>(p.k));
    for (int i = 0; i < p.n; ++i)
        for (int j = 0; j < p.k; ++j) d.m[i][j] = p.m(i, j);
    return d;
}

// Builds a subcube mixture from center strings over {0,h,1}, one string per component.
inline cubemix::ProductMixture subcubes(const std::vector<const char*>& centers, std::vector<double> w = {}) {
    const int k = static_cast<int>(centers.size());
    const int n = static_cast<int>(std::string(centers[0]).size());
    if (w.empty()) w.assign(k, 1.0 / k);
    std::vector<double> m(static_cast<size_t>(n) * k);
    for (int j = 0; j < k; ++j)
        for (int i = 0; i < n; ++i) {
            char c = centers[j][i];
            m[static_cast<size_t>(i) * k + j] = c == '1' ? 1.0 : c == '0' ? 0.0 : 0.5;
        }
    return cubemix::ProductMixture(n, k, w, m);
}
