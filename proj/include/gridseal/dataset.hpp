#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace gridseal {

// One QoS snapshot. The first three fields are the model features, in this
// order; throughput is the regression target.
struct QosSample {
    double delay_ms = 0.0;
    double jitter_ms = 0.0;
    double loss_pct = 0.0;
    double throughput_mbps = 0.0;

    bool operator==(const QosSample&) const = default;
    void validate() const; // throws std::invalid_argument
};

inline constexpr int kNumFeatures = 3;
inline constexpr const char* kCsvHeader = "delay_ms,jitter_ms,loss_pct,throughput_mbps";
inline constexpr std::array<const char*, 3> kFeatureNames = {"delay_ms", "jitter_ms", "loss_pct"};
inline constexpr const char* kTargetName = "throughput_mbps";

struct Dataset {
    std::vector<QosSample> samples;

    size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }

    std::array<double, 3> features(size_t i) const {
        const QosSample& s = samples[i];
        return {s.delay_ms, s.jitter_ms, s.loss_pct};
    }
    double target(size_t i) const { return samples[i].throughput_mbps; }

    std::vector<std::array<double, 3>> feature_rows() const;
    std::vector<double> targets() const;

    bool operator==(const Dataset&) const = default;
};

struct GeneratorParams {
    uint64_t n = 9000;
    uint64_t seed = 42;
    double delay_mean_ms = 40.0;
    double delay_sigma = 0.5;
    double jitter_scale_ms = 5.0;
    double loss_alpha = 2.0;
    double loss_beta = 50.0;
    double noise_sigma_mbps = 0.45;
    double capacity_mbps = 10.0;

    void validate() const; // throws std::invalid_argument
};

// Deterministic synthetic QoS data: same params, same samples, bit for bit.
// Throughput decreases smoothly with delay/jitter/loss and carries Gaussian
// noise, so the target is learnable but never exactly recoverable.
Dataset generate_synthetic(const GeneratorParams& params);

// CSV persistence. UTF-8, LF endings, header row fixed, values rendered as
// shortest round-trip decimals so save/load is exact.
std::string to_csv(const Dataset& d);
Dataset parse_csv(const std::string& text); // errors name the 1-based line
void save_csv(const Dataset& d, const std::string& path);
Dataset load_csv(const std::string& path);

// Seeded Fisher-Yates permutation; test set takes the first round(f*N)
// permuted rows, train the rest. Together they are the input as a multiset.
std::pair<Dataset, Dataset> shuffle_split(const Dataset& d, double test_fraction, uint64_t seed);

} // namespace gridseal
