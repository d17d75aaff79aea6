#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace cubemix {

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Child seed from a parent seed and a path label.
inline std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::uint64_t> labels) {
    std::uint64_t h = splitmix64(parent ^ 0x5bd1e995ULL);
    for (auto l : labels) h = splitmix64(h ^ splitmix64(l + 0x632be59bd9b4e019ULL));
    return h;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(splitmix64(seed)) {}

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(eng_); }
    std::uint64_t next() { return eng_(); }
    int below(int n) { return std::uniform_int_distribution<int>(0, n - 1)(eng_); }
    bool bernoulli(double p) { return uniform() < p; }

    std::mt19937_64& engine() { return eng_; }

private:
    std::mt19937_64 eng_;
};

}  // namespace cubemix
