#pragma once

#include <cstdint>

namespace gridseal::rng {

// splitmix64 (Steele/Lea/Vigna). Used to expand seeds and derive child streams.
struct SplitMix64 {
    uint64_t state = 0;

    uint64_t next() {
        uint64_t z = (state += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }
};

// Deterministic seed for a child stream, e.g. per-tree or per-purpose RNGs.
// Same (base, a, b) always yields the same child seed on every platform.
uint64_t derive_seed(uint64_t base, uint64_t a, uint64_t b = 0);

// xoshiro256** 1.0 (Blackman/Vigna), seeded through splitmix64.
// The reference output sequence is frozen in tests/test_rng.cpp; all sampling
// below is implemented on top of next_u64 so streams replay identically.
class Xoshiro256 {
public:
    explicit Xoshiro256(uint64_t seed);

    uint64_t next_u64();

    // Uniform in [0, 1) with 53-bit resolution.
    double next_unit();

    // Uniform integer in [0, bound), unbiased (rejection sampling). bound > 0.
    uint64_t next_below(uint64_t bound);

    double normal(double mean, double sigma);
    double lognormal(double mu_log, double sigma_log);

    // Exponential with the given scale, restricted to [0, limit) via the
    // inverse CDF of the truncated distribution (no rejection loop).
    double exponential_truncated(double scale, double limit);

    double gamma(double shape);             // shape > 0, unit scale
    double beta(double alpha, double beta); // both > 0
    int binomial(int n, double p);

private:
    uint64_t s_[4];
};

} // namespace gridseal::rng
