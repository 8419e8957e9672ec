#pragma once

#include <cstdint>
#include <deque>
#include <unordered_map>

#include "gridseal/regressor.hpp"
#include "gridseal/sha256.hpp"

namespace gridseal {

struct NetworkFeatures {
    double delay_ms = 0.0;
    double jitter_ms = 0.0;
    double loss_pct = 0.0;

    std::array<double, 3> as_row() const { return {delay_ms, jitter_ms, loss_pct}; }
    void validate() const; // throws std::invalid_argument
};

struct NonceCandidate {
    uint64_t nonce = 0;
    double prediction_mbps = 0.0;
    Hash256 feature_digest{}; // SHA-256 of the canonical feature encoding
    ml::ModelKind model_kind = ml::ModelKind::random_forest;
    uint64_t created_at_ms = 0;
};

// Whitening off: the nonce is the canonical binary64 bit pattern of the
// prediction, so it is invertible and distinct predictions give distinct
// nonces. Whitening on: first 8 bytes (big-endian) of SHA-256 over the
// little-endian prediction bytes.
uint64_t nonce_from_prediction(double prediction_mbps, bool whitening);

NonceCandidate derive_nonce(const ml::FittedModel& model, const NetworkFeatures& features,
                            bool whitening = false, uint64_t now_ms = 0);

// Bounded FIFO of recently used nonces.
class NonceWindow {
public:
    explicit NonceWindow(size_t capacity = 1024);

    bool contains(uint64_t nonce) const;
    void push(uint64_t nonce); // evicts the oldest entry when full
    size_t size() const { return order_.size(); }
    size_t capacity() const { return capacity_; }

private:
    size_t capacity_;
    std::deque<uint64_t> order_;
    std::unordered_map<uint64_t, uint32_t> counts_;
};

// Accept unless the candidate's nonce is bit-equal to one still in the window.
bool screen_duplicates(const NonceCandidate& candidate, const NonceWindow& history);

} // namespace gridseal
