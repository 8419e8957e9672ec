#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gridseal {

// Uniqueness is bit-exact on binary64 after mapping -0.0 to +0.0. NaN and
// infinity are rejected.
uint64_t canonical_key(double value);
std::vector<uint64_t> canonicalize(const std::vector<double>& values);

struct DuplicateEntry {
    double value = 0.0;
    uint64_t count = 0;
};

struct RandomnessReport {
    uint64_t n_total = 0;
    uint64_t n_unique = 0;
    double rate_pct = 0.0;
    // Descending multiplicity, ties by ascending canonical key.
    std::vector<DuplicateEntry> duplicates;

    std::string to_json() const;
};

// Share of distinct values in a prediction stream, as a percentage.
RandomnessReport randomness_rate(const std::vector<double>& values);

struct EntropyReport {
    double entropy_bits = 0.0;
    double normalized = 0.0; // entropy_bits / log2(n_total); 0 for n_total <= 1
    uint64_t n_total = 0;

    std::string to_json() const;
};

// Empirical Shannon entropy of the value distribution, in bits, normalized
// by log2(N) so an all-distinct stream scores exactly 1.
EntropyReport shannon_entropy(const std::vector<double>& values);

} // namespace gridseal
