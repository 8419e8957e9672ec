#include "gridseal/randomness.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace gridseal {

uint64_t canonical_key(double value) {
    if (!std::isfinite(value)) throw std::invalid_argument("canonical_key: value must be finite");
    if (value == 0.0) value = 0.0; // collapse -0.0 onto +0.0
    return std::bit_cast<uint64_t>(value);
}

std::vector<uint64_t> canonicalize(const std::vector<double>& values) {
    std::vector<uint64_t> keys;
    keys.reserve(values.size());
    for (double v : values) keys.push_back(canonical_key(v));
    return keys;
}

namespace {

std::unordered_map<uint64_t, uint64_t> count_keys(const std::vector<double>& values) {
    std::unordered_map<uint64_t, uint64_t> counts;
    counts.reserve(values.size());
    for (double v : values) ++counts[canonical_key(v)];
    return counts;
}

} // namespace

RandomnessReport randomness_rate(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("randomness_rate: empty input");
    const auto counts = count_keys(values);

    RandomnessReport report;
    report.n_total = values.size();
    report.n_unique = counts.size();
    report.rate_pct = 100.0 * static_cast<double>(report.n_unique) / static_cast<double>(report.n_total);

    std::vector<std::pair<uint64_t, uint64_t>> dup_keys; // (key, count)
    for (const auto& [key, count] : counts) {
        if (count > 1) dup_keys.emplace_back(key, count);
    }
    std::sort(dup_keys.begin(), dup_keys.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    report.duplicates.reserve(dup_keys.size());
    for (const auto& [key, count] : dup_keys) {
        report.duplicates.push_back({std::bit_cast<double>(key), count});
    }
    return report;
}

EntropyReport shannon_entropy(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("shannon_entropy: empty input");
    const auto counts = count_keys(values);

    EntropyReport report;
    report.n_total = values.size();
    const auto n = static_cast<double>(report.n_total);

    if (counts.size() == report.n_total) {
        // All distinct: H is exactly log2(N) by definition, score exactly 1.
        report.entropy_bits = report.n_total > 1 ? std::log2(n) : 0.0;
        report.normalized = report.n_total > 1 ? 1.0 : 0.0;
        return report;
    }

    double h = 0.0;
    for (const auto& [key, count] : counts) {
        const double p = static_cast<double>(count) / n;
        h -= p * std::log2(p);
    }
    report.entropy_bits = std::max(0.0, h);
    report.normalized = report.n_total > 1 ? std::clamp(report.entropy_bits / std::log2(n), 0.0, 1.0) : 0.0;
    return report;
}

std::string RandomnessReport::to_json() const {
    nlohmann::json j;
    j["n_total"] = n_total;
    j["n_unique"] = n_unique;
    j["rate_pct"] = rate_pct;
    nlohmann::json dups = nlohmann::json::array();
    for (const DuplicateEntry& d : duplicates) {
        dups.push_back({{"value", d.value}, {"count", d.count}});
    }
    j["duplicates"] = std::move(dups);
    return j.dump();
}

std::string EntropyReport::to_json() const {
    nlohmann::json j;
    j["entropy_bits"] = entropy_bits;
    j["normalized"] = normalized;
    j["n_total"] = n_total;
    return j.dump();
}

} // namespace gridseal
