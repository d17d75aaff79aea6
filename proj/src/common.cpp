#include "cubemix/common.hpp"

#include <cstdlib>

namespace cubemix {

const Tolerances& tolerances() {
    static const Tolerances t = [] {
        Tolerances d;
        if (const char* env = std::getenv("CUBEMIX_BRUTE_CAP")) {
            int v = std::atoi(env);
            if (v > 0 && v <= 30) d.brute_force_cap = v;
        }
        return d;
    }();
    return t;
}

int brute_force_cap() { return tolerances().brute_force_cap; }

std::vector<int> members(Mask m) {
    std::vector<int> out;
    while (m) {
        out.push_back(__builtin_ctzll(m));
        m &= m - 1;
    }
    return out;
}

Mask mask_of(const std::vector<int>& idx) {
    Mask m = 0;
    for (int i : idx) {
        if (i < 0 || i > kMaxDim) throw Error("coordinate index out of range");
        m |= Mask{1} << i;
    }
    return m;
}

Mask extract_bits(Mask x, Mask keep) {
    Mask out = 0;
    int pos = 0;
    while (keep) {
        int i = __builtin_ctzll(keep);
        if ((x >> i) & 1u) out |= Mask{1} << pos;
        ++pos;
        keep &= keep - 1;
    }
    return out;
}

Mask deposit_bits(Mask v, Mask keep) {
    Mask out = 0;
    int pos = 0;
    while (keep) {
        int i = __builtin_ctzll(keep);
        if ((v >> pos) & 1u) out |= Mask{1} << i;
        ++pos;
        keep &= keep - 1;
    }
    return out;
}

std::vector<Mask> subsets_up_to(Mask ground, int max_size) {
    std::vector<Mask> out;
    for_each_subset(ground, 0, max_size, [&](Mask s) { out.push_back(s); });
    return out;
}

std::string mask_to_string(Mask m) {
    std::string s = "{";
    bool first = true;
    for (int i : members(m)) {
        if (!first) s += ",";
        s += std::to_string(i);
        first = false;
    }
    return s + "}";
}

}  // namespace cubemix
