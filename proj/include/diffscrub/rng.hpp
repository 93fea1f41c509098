#pragma once

#include "diffscrub/common.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

namespace diffscrub {

// Deterministic RNG. Wraps mt19937_64 but owns every distribution transform,
// so streams are bit-reproducible independent of the standard library's
// <random> distribution implementations.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1) with 53 bits of entropy.
    double uniform01() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform integer in [0, n). Rejection sampling, no modulo bias.
    uint64_t below(uint64_t n) {
        if (n == 0) throw Error("Rng::below(0)");
        uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t v;
        do { v = gen_(); } while (v >= limit);
        return v % n;
    }

    // Standard normal via Box-Muller with a cached spare.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u = 1.0 - uniform01();  // avoid log(0)
        double r = std::sqrt(-2.0 * std::log(u));
        double a = 6.283185307179586 * uniform01();
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double std) { return mean + std * normal(); }

    template <typename It>
    void shuffle(It first, It last) {
        auto n = static_cast<uint64_t>(last - first);
        for (uint64_t i = n; i > 1; i--) {
            uint64_t j = below(i);
            std::swap(first[i - 1], first[j]);
        }
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Derives an independent sub-seed from a master seed and a purpose label, so
// e.g. data ordering and policy sampling consume disjoint streams.
inline uint64_t derive_seed(uint64_t master, const std::string& purpose) {
    uint64_t h = fnv1a64(purpose, 0xcbf29ce484222325ull ^ master);
    // splitmix64 finalizer to spread low-entropy labels
    h += 0x9e3779b97f4a7c15ull;
    h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ull;
    h = (h ^ (h >> 27)) * 0x94d049bb133111ebull;
    return h ^ (h >> 31);
}

inline uint64_t derive_seed(uint64_t master, const std::string& purpose, uint64_t index) {
    return derive_seed(master ^ (0x632be59bd9b4e019ull * (index + 1)), purpose);
}

}  // namespace diffscrub
