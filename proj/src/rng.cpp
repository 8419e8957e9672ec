#include "gridseal/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace gridseal::rng {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

inline uint64_t rotl(uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

} // namespace

uint64_t derive_seed(uint64_t base, uint64_t a, uint64_t b) {
    SplitMix64 sm{base};
    uint64_t h = sm.next();
    sm.state = h ^ (a + 0x9E3779B97F4A7C15ull);
    h = sm.next();
    sm.state = h ^ (b + 0xBF58476D1CE4E5B9ull);
    return sm.next();
}

Xoshiro256::Xoshiro256(uint64_t seed) {
    SplitMix64 sm{seed};
    for (auto& w : s_) w = sm.next();
}

uint64_t Xoshiro256::next_u64() {
    const uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Xoshiro256::next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

uint64_t Xoshiro256::next_below(uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("next_below: bound must be > 0");
    const uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        const uint64_t x = next_u64();
        if (x >= threshold) return x % bound;
    }
}

double Xoshiro256::normal(double mean, double sigma) {
    // Box-Muller; consumes exactly two uniforms per call.
    double u1 = next_unit();
    const double u2 = next_unit();
    if (u1 == 0.0) u1 = 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + sigma * r * std::cos(kTwoPi * u2);
}

double Xoshiro256::lognormal(double mu_log, double sigma_log) {
    return std::exp(normal(mu_log, sigma_log));
}

double Xoshiro256::exponential_truncated(double scale, double limit) {
    const double cap = 1.0 - std::exp(-limit / scale);
    const double u = next_unit();
    return -scale * std::log1p(-u * cap);
}

double Xoshiro256::gamma(double shape) {
    if (shape <= 0.0) throw std::invalid_argument("gamma: shape must be > 0");
    if (shape < 1.0) {
        // Boost to shape+1 and scale back (Marsaglia-Tsang section 6).
        double u = next_unit();
        while (u == 0.0) u = next_unit();
        return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        const double x = normal(0.0, 1.0);
        const double t = 1.0 + c * x;
        if (t <= 0.0) continue;
        const double v = t * t * t;
        double u = next_unit();
        while (u == 0.0) u = next_unit();
        if (u < 1.0 - 0.0331 * (x * x) * (x * x)) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

double Xoshiro256::beta(double alpha, double beta) {
    const double ga = gamma(alpha);
    const double gb = gamma(beta);
    return ga / (ga + gb);
}

int Xoshiro256::binomial(int n, double p) {
    int hits = 0;
    for (int i = 0; i < n; ++i) {
        if (next_unit() < p) ++hits;
    }
    return hits;
}

} // namespace gridseal::rng
