#include "gridseal/nonce.hpp"

#include <cmath>
#include <stdexcept>

#include "gridseal/randomness.hpp"

namespace gridseal {

void NetworkFeatures::validate() const {
    if (!std::isfinite(delay_ms) || !std::isfinite(jitter_ms) || !std::isfinite(loss_pct)) {
        throw std::invalid_argument("NetworkFeatures: values must be finite");
    }
    if (loss_pct < 0.0 || loss_pct > 100.0) {
        throw std::invalid_argument("NetworkFeatures: loss_pct must be in [0, 100]");
    }
    if (delay_ms < 0.0 || jitter_ms < 0.0) {
        throw std::invalid_argument("NetworkFeatures: delay and jitter must be >= 0");
    }
}

namespace {

void append_u64_le(std::vector<uint8_t>& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(uint8_t(v >> (8 * i)));
}

} // namespace

uint64_t nonce_from_prediction(double prediction_mbps, bool whitening) {
    const uint64_t key = canonical_key(prediction_mbps); // rejects non-finite
    if (!whitening) return key;

    std::vector<uint8_t> bytes;
    bytes.reserve(8);
    append_u64_le(bytes, key);
    const Hash256 digest = sha256(bytes);
    uint64_t nonce = 0;
    for (int i = 0; i < 8; ++i) nonce = (nonce << 8) | digest[i];
    return nonce;
}

NonceCandidate derive_nonce(const ml::FittedModel& model, const NetworkFeatures& features,
                            bool whitening, uint64_t now_ms) {
    features.validate();

    NonceCandidate candidate;
    candidate.prediction_mbps = model.predict(features.as_row());
    if (!std::isfinite(candidate.prediction_mbps)) {
        throw std::runtime_error("derive_nonce: model produced a non-finite prediction");
    }
    candidate.nonce = nonce_from_prediction(candidate.prediction_mbps, whitening);
    candidate.model_kind = model.spec.kind;
    candidate.created_at_ms = now_ms;

    std::vector<uint8_t> encoded;
    encoded.reserve(24);
    for (double v : features.as_row()) append_u64_le(encoded, canonical_key(v));
    candidate.feature_digest = sha256(encoded);
    return candidate;
}

NonceWindow::NonceWindow(size_t capacity) : capacity_(capacity) {}

bool NonceWindow::contains(uint64_t nonce) const {
    return counts_.find(nonce) != counts_.end();
}

void NonceWindow::push(uint64_t nonce) {
    if (capacity_ == 0) return;
    if (order_.size() == capacity_) {
        const uint64_t oldest = order_.front();
        order_.pop_front();
        auto it = counts_.find(oldest);
        if (--it->second == 0) counts_.erase(it);
    }
    order_.push_back(nonce);
    ++counts_[nonce];
}

bool screen_duplicates(const NonceCandidate& candidate, const NonceWindow& history) {
    return !history.contains(candidate.nonce);
}

} // namespace gridseal
