#include "gridseal/dataset.hpp"

#include "gridseal/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace gridseal {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
    return std::string(buf, ptr);
}

double parse_double(std::string_view field, size_t line_no, const char* column) {
    double v = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
        throw std::runtime_error("csv: line " + std::to_string(line_no) + ": non-numeric value in column " + column);
    }
    if (!std::isfinite(v)) {
        throw std::runtime_error("csv: line " + std::to_string(line_no) + ": non-finite value in column " + column);
    }
    return v;
}

} // namespace

void QosSample::validate() const {
    require(std::isfinite(delay_ms) && delay_ms >= 0.0, "QosSample: delay_ms must be finite and >= 0");
    require(std::isfinite(jitter_ms) && jitter_ms >= 0.0, "QosSample: jitter_ms must be finite and >= 0");
    require(std::isfinite(loss_pct) && loss_pct >= 0.0 && loss_pct <= 100.0,
            "QosSample: loss_pct must be in [0, 100]");
    require(std::isfinite(throughput_mbps) && throughput_mbps >= 0.0,
            "QosSample: throughput_mbps must be finite and >= 0");
}

std::vector<std::array<double, 3>> Dataset::feature_rows() const {
    std::vector<std::array<double, 3>> rows;
    rows.reserve(samples.size());
    for (size_t i = 0; i < samples.size(); ++i) rows.push_back(features(i));
    return rows;
}

std::vector<double> Dataset::targets() const {
    std::vector<double> out;
    out.reserve(samples.size());
    for (const QosSample& s : samples) out.push_back(s.throughput_mbps);
    return out;
}

void GeneratorParams::validate() const {
    require(delay_mean_ms > 0.0, "GeneratorParams: delay_mean_ms must be > 0");
    require(delay_sigma > 0.0, "GeneratorParams: delay_sigma must be > 0");
    require(jitter_scale_ms > 0.0, "GeneratorParams: jitter_scale_ms must be > 0");
    require(loss_alpha > 0.0, "GeneratorParams: loss_alpha must be > 0");
    require(loss_beta > 0.0, "GeneratorParams: loss_beta must be > 0");
    require(noise_sigma_mbps > 0.0, "GeneratorParams: noise_sigma_mbps must be > 0");
    require(capacity_mbps > 0.0, "GeneratorParams: capacity_mbps must be > 0");
}

Dataset generate_synthetic(const GeneratorParams& params) {
    params.validate();
    Dataset out;
    out.samples.reserve(params.n);

    rng::Xoshiro256 gen(params.seed);
    const double log_delay = std::log(params.delay_mean_ms);
    const double jitter_cap = 4.0 * params.jitter_scale_ms;

    for (uint64_t i = 0; i < params.n; ++i) {
        QosSample s;
        s.delay_ms = gen.lognormal(log_delay, params.delay_sigma);
        s.jitter_ms = gen.exponential_truncated(params.jitter_scale_ms, jitter_cap);
        s.loss_pct = 100.0 * gen.beta(params.loss_alpha, params.loss_beta);
        const double clean = params.capacity_mbps / (1.0 + 0.05 * s.delay_ms + 0.2 * s.jitter_ms) *
                             (1.0 - s.loss_pct / 100.0);
        s.throughput_mbps = std::max(0.0, clean + gen.normal(0.0, params.noise_sigma_mbps));
        out.samples.push_back(s);
    }
    return out;
}

std::string to_csv(const Dataset& d) {
    std::string out(kCsvHeader);
    out.push_back('\n');
    for (const QosSample& s : d.samples) {
        out += format_double(s.delay_ms);
        out.push_back(',');
        out += format_double(s.jitter_ms);
        out.push_back(',');
        out += format_double(s.loss_pct);
        out.push_back(',');
        out += format_double(s.throughput_mbps);
        out.push_back('\n');
    }
    return out;
}

Dataset parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    size_t line_no = 0;
    Dataset out;

    if (!std::getline(in, line)) throw std::runtime_error("csv: empty input, missing header");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kCsvHeader) {
        throw std::runtime_error("csv: line 1: expected header '" + std::string(kCsvHeader) + "'");
    }

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        std::array<std::string_view, 4> fields;
        std::string_view rest(line);
        for (int c = 0; c < 4; ++c) {
            const size_t comma = rest.find(',');
            if (c < 3) {
                if (comma == std::string_view::npos) {
                    throw std::runtime_error("csv: line " + std::to_string(line_no) + ": expected 4 columns");
                }
                fields[c] = rest.substr(0, comma);
                rest.remove_prefix(comma + 1);
            } else {
                if (comma != std::string_view::npos) {
                    throw std::runtime_error("csv: line " + std::to_string(line_no) + ": expected 4 columns");
                }
                fields[c] = rest;
            }
        }

        QosSample s;
        s.delay_ms = parse_double(fields[0], line_no, "delay_ms");
        s.jitter_ms = parse_double(fields[1], line_no, "jitter_ms");
        s.loss_pct = parse_double(fields[2], line_no, "loss_pct");
        s.throughput_mbps = parse_double(fields[3], line_no, "throughput_mbps");
        try {
            s.validate();
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error("csv: line " + std::to_string(line_no) + ": " + e.what());
        }
        out.samples.push_back(s);
    }
    return out;
}

void save_csv(const Dataset& d, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_csv: cannot open '" + path + "' for writing");
    const std::string text = to_csv(d);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw std::runtime_error("save_csv: write to '" + path + "' failed");
}

Dataset load_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_csv: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str());
}

std::pair<Dataset, Dataset> shuffle_split(const Dataset& d, double test_fraction, uint64_t seed) {
    if (d.empty()) throw std::invalid_argument("shuffle_split: dataset is empty");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw std::invalid_argument("shuffle_split: test_fraction must be in (0, 1)");
    }

    const size_t n = d.size();
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;

    rng::Xoshiro256 gen(seed);
    for (size_t i = n - 1; i > 0; --i) {
        const size_t j = gen.next_below(i + 1);
        std::swap(order[i], order[j]);
    }

    const auto n_test = static_cast<size_t>(std::llround(test_fraction * static_cast<double>(n)));
    Dataset test, train;
    test.samples.reserve(n_test);
    train.samples.reserve(n - n_test);
    for (size_t i = 0; i < n; ++i) {
        (i < n_test ? test : train).samples.push_back(d.samples[order[i]]);
    }
    return {std::move(train), std::move(test)};
}

} // namespace gridseal
