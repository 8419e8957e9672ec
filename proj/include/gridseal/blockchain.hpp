#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gridseal/nonce.hpp"
#include "gridseal/sha256.hpp"

namespace gridseal::chain {

using TxId = std::array<uint8_t, 16>;
using PublicKey = std::array<uint8_t, 32>;
using SecretKey = std::array<uint8_t, 64>;
using Signature = std::array<uint8_t, 64>;

struct Transaction {
    TxId tx_id{};
    uint64_t producer_id = 0;
    uint64_t consumer_id = 0;
    double energy_kwh = 0.0;
    double unit_price = 0.0; // currency per kWh
    uint64_t contract_id = 0;
    uint64_t created_at_ms = 0;

    void validate() const; // throws std::invalid_argument
    bool operator==(const Transaction&) const = default;
};

enum class PriorityClass { critical, normal };

struct SmartEnergyContract {
    uint64_t contract_id = 0;
    uint64_t producer_id = 0;
    uint64_t consumer_id = 0;
    double unit_price = 0.0;
    bool disaster_mode = false;
    PriorityClass priority = PriorityClass::normal;

    void validate() const;
};

// Ed25519 via libsodium. keygen is deterministic in the seed; signatures are
// deterministic in (payload, key).
struct KeyPair {
    PublicKey public_key{};
    SecretKey secret_key{};
};

KeyPair keygen(uint64_t seed);
Signature sign(std::span<const uint8_t> payload, const SecretKey& sk);
bool verify(std::span<const uint8_t> payload, const Signature& sig, const PublicKey& pk);

struct SignedPayload {
    std::vector<Transaction> txs;
    uint64_t signer_id = 0;
    Signature signature{};

    // Canonical little-endian encoding of (txs, signer_id); what gets signed.
    std::vector<uint8_t> signing_bytes() const;
    // signing_bytes followed by the signature; the block hash covers this, so
    // tampering with any payload byte, signature included, breaks the hash.
    std::vector<uint8_t> wire_bytes() const;

    bool operator==(const SignedPayload&) const = default;
};

// The persisted slice of a NonceCandidate. model_kind is "genesis" for the
// genesis block, otherwise a regressor kind name.
struct BlockNonce {
    uint64_t nonce = 0;
    double prediction_mbps = 0.0;
    std::string model_kind = "genesis";

    bool operator==(const BlockNonce&) const = default;
};

struct Block {
    uint64_t index = 0;
    Hash256 prev_hash{};
    uint64_t timestamp_ms = 0;
    BlockNonce nonce;
    SignedPayload payload;
    Hash256 block_hash{};

    bool operator==(const Block&) const = default;
};

// SHA-256 over nonce || len(payload) || payload || prev_hash || timestamp,
// exactly as laid out in docs/ledger-format.md.
Hash256 hash_block_fields(uint64_t nonce, std::span<const uint8_t> payload_bytes,
                          const Hash256& prev_hash, uint64_t timestamp_ms);

Block make_genesis(uint64_t signer_id, const KeyPair& signer_keys);
Block build_candidate_block(std::vector<Transaction> txs, const NonceCandidate& nonce,
                            const Block& prev, uint64_t timestamp_ms, uint64_t signer_id,
                            const KeyPair& signer_keys);

enum class ViolationKind {
    missing_genesis,
    genesis_shape,
    index_continuity,
    prev_hash_link,
    timestamp_order,
    signature_invalid,
    hash_mismatch,
    nonce_encoding,
    nonce_reuse,
};

const char* to_string(ViolationKind kind);

struct Violation {
    ViolationKind kind;
    std::string detail;
};

// Pubkeys by signer id; signature checks are skipped for unknown signers.
struct KeyRegistry {
    std::map<uint64_t, PublicKey> pubkeys;
    const PublicKey* find(uint64_t signer_id) const;
};

std::vector<Violation> validate_genesis(const Block& block, const PublicKey* signer_pubkey);
// All violated checks, in check order: index, prev-hash link, timestamp,
// signature, hash recomputation, nonce/prediction consistency, nonce reuse.
std::vector<Violation> validate_block(const Block& block, const Block& prev,
                                      const PublicKey* signer_pubkey);

struct Ledger {
    std::vector<Block> blocks;

    const Block& tip() const { return blocks.back(); }
    size_t size() const { return blocks.size(); }
    bool empty() const { return blocks.empty(); }

    bool operator==(const Ledger&) const = default;
};

struct ChainCheck {
    bool ok = true;
    uint64_t first_bad_index = 0; // meaningful when !ok
    std::vector<Violation> violations;

    std::string message() const;
};

ChainCheck verify_chain(const Ledger& ledger, const KeyRegistry* keys = nullptr);

// JSON Lines persistence, one block per line. Field names and layout are the
// wire contract; parsing is strict (exact key set, typed values).
std::string block_to_json(const Block& block);
Block block_from_json(const std::string& line); // throws std::runtime_error
std::string ledger_to_jsonl(const Ledger& ledger);
Ledger ledger_from_jsonl(const std::string& text); // errors name the 1-based line
void save_ledger(const Ledger& ledger, const std::string& path);
Ledger load_ledger(const std::string& path);

} // namespace gridseal::chain
