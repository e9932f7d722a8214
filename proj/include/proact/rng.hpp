#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

namespace proact {

// 64-bit FNV-1a. Used as the stable person-level hash for tie-breaking and
// arm randomization; must produce identical values on every platform.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// splitmix64 finalizer; good avalanche, cheap, portable.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Derive an independent stream seed from a parent seed and a label.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
    return mix64(seed ^ fnv1a64(label));
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view label, std::uint64_t n) {
    return mix64(derive_seed(seed, label) ^ mix64(n));
}

// Deterministic generator with platform-independent output. The standard
// <random> distributions are implementation-defined, so everything that must
// reproduce bit-identically across toolchains goes through this class.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform in [0,1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0,n). Fixed-point multiply; bias is < 2^-64.
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    bool coin(double p) { return uniform() < p; }

    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

    // Box-Muller; consumes two uniforms per call so streams stay aligned.
    double normal() {
        double u1 = 1.0 - uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Count of failures before terminating: P(G = j) = (1-h)^j * h, j >= 0.
    std::int64_t geometric(double h) {
        if (h >= 1.0)
            return 0;
        double g = std::floor(std::log1p(-uniform()) / std::log1p(-h));
        return static_cast<std::int64_t>(g);
    }

    // Knuth's product method; fine for the small means used here.
    int poisson(double mean) {
        if (mean <= 0.0)
            return 0;
        double limit = std::exp(-mean);
        double prod = 1.0;
        int k = 0;
        do {
            prod *= uniform();
            ++k;
        } while (prod > limit);
        return k - 1;
    }

    Rng split(std::string_view label) { return Rng{derive_seed(next_u64(), label)}; }

  private:
    std::uint64_t state_;
};

} // namespace proact
