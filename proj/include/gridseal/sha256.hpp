#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gridseal {

using Hash256 = std::array<uint8_t, 32>;

// Incremental SHA-256 (FIPS 180-4). Verified against the NIST test vectors
// in tests/test_blockchain.cpp.
class Sha256 {
public:
    Sha256();

    void update(const uint8_t* data, size_t len);
    void update(std::span<const uint8_t> data) { update(data.data(), data.size()); }
    Hash256 finish();

private:
    void process_block(const uint8_t* block);

    uint32_t state_[8];
    uint64_t total_len_ = 0;
    uint8_t buffer_[64];
    size_t buffered_ = 0;
};

Hash256 sha256(std::span<const uint8_t> data);
Hash256 sha256(std::string_view data);

std::string hex_encode(std::span<const uint8_t> bytes);
std::vector<uint8_t> hex_decode(std::string_view hex); // throws on malformed input

} // namespace gridseal
