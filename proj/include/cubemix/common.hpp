#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace cubemix {

// A set of coordinates (or a point of the cube) packed into a word; bit i is coordinate i.
using Mask = std::uint64_t;

constexpr int kMaxDim = 63;

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Default numeric tolerances shared by the modules.
struct Tolerances {
    double weight_sum = 1e-9;     // weights must sum to 1 within this
    double rank = 1e-9;           // pivot threshold for elimination
    double lp_pivot = 1e-11;      // simplex pivot threshold
    double moment_check = 1e-9;   // moment preservation checks
    int brute_force_cap = 20;     // largest n for table / TVD enumeration
};

// Defaults, with brute_force_cap overridable by CUBEMIX_BRUTE_CAP.
const Tolerances& tolerances();

int brute_force_cap();

inline int popcount(Mask m) { return __builtin_popcountll(m); }

inline Mask full_mask(int n) { return n >= 64 ? ~Mask{0} : ((Mask{1} << n) - 1); }

inline bool test_bit(Mask m, int i) { return (m >> i) & 1u; }

std::vector<int> members(Mask m);

Mask mask_of(const std::vector<int>& idx);

// Compress the bits of x selected by keep into the low bits (ascending order).
Mask extract_bits(Mask x, Mask keep);

// Inverse of extract_bits: spread the low bits of v onto the positions of keep.
Mask deposit_bits(Mask v, Mask keep);

// Calls f(S) for every subset S of ground with lo <= |S| <= hi, ordered by size and then
// lexicographically by sorted member list.
template <class F>
void for_each_subset(Mask ground, int lo, int hi, F&& f) {
    std::vector<int> g = members(ground);
    int n = static_cast<int>(g.size());
    if (hi > n) hi = n;
    if (lo < 0) lo = 0;
    for (int d = lo; d <= hi; ++d) {
        std::vector<int> c(d);
        for (int i = 0; i < d; ++i) c[i] = i;
        while (true) {
            Mask s = 0;
            for (int i = 0; i < d; ++i) s |= Mask{1} << g[c[i]];
            if constexpr (std::is_same_v<decltype(f(s)), bool>) {
                if (!f(s)) return;
            } else {
                f(s);
            }
            int i = d - 1;
            while (i >= 0 && c[i] == n - d + i) --i;
            if (i < 0) break;
            ++c[i];
            for (int j = i + 1; j < d; ++j) c[j] = c[j - 1] + 1;
        }
    }
}

std::vector<Mask> subsets_up_to(Mask ground, int max_size);

std::string mask_to_string(Mask m);

}  // namespace cubemix
