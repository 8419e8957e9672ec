#include "gridseal/blockchain.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>
#include <sodium.h>

#include "gridseal/randomness.hpp"

namespace gridseal::chain {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

void ensure_sodium() {
    static std::once_flag once;
    std::call_once(once, [] {
        if (sodium_init() < 0) throw std::runtime_error("libsodium initialization failed");
    });
}

void append_u64_le(std::vector<uint8_t>& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(uint8_t(v >> (8 * i)));
}

void append_f64_le(std::vector<uint8_t>& out, double v) {
    uint64_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof(bits));
    append_u64_le(out, bits);
}

const std::array<const char*, 6> kBlockKinds = {"genesis",
                                                "gradient_boosting",
                                                "hist_gradient_boosting",
                                                "random_forest",
                                                "extra_trees",
                                                "knn"};

bool known_block_kind(const std::string& kind) {
    for (const char* k : kBlockKinds) {
        if (kind == k) return true;
    }
    return false;
}

} // namespace

void Transaction::validate() const {
    require(std::isfinite(energy_kwh) && energy_kwh > 0.0, "Transaction: energy_kwh must be > 0");
    require(std::isfinite(unit_price) && unit_price >= 0.0, "Transaction: unit_price must be >= 0");
    require(producer_id != consumer_id, "Transaction: producer and consumer must differ");
}

void SmartEnergyContract::validate() const {
    require(std::isfinite(unit_price) && unit_price >= 0.0, "SmartEnergyContract: unit_price must be >= 0");
    require(producer_id != consumer_id, "SmartEnergyContract: producer and consumer must differ");
}

KeyPair keygen(uint64_t seed) {
    ensure_sodium();
    // Stretch the 64-bit seed into the 32-byte Ed25519 seed.
    std::vector<uint8_t> material;
    material.reserve(16);
    const char* tag = "gridseal";
    material.insert(material.end(), tag, tag + 8);
    append_u64_le(material, seed);
    const Hash256 expanded = sha256(material);

    KeyPair keys;
    if (crypto_sign_seed_keypair(keys.public_key.data(), keys.secret_key.data(), expanded.data()) != 0) {
        throw std::runtime_error("keygen: crypto_sign_seed_keypair failed");
    }
    return keys;
}

Signature sign(std::span<const uint8_t> payload, const SecretKey& sk) {
    ensure_sodium();
    Signature sig{};
    if (crypto_sign_detached(sig.data(), nullptr, payload.data(), payload.size(), sk.data()) != 0) {
        throw std::runtime_error("sign: crypto_sign_detached failed");
    }
    return sig;
}

bool verify(std::span<const uint8_t> payload, const Signature& sig, const PublicKey& pk) {
    ensure_sodium();
    return crypto_sign_verify_detached(sig.data(), payload.data(), payload.size(), pk.data()) == 0;
}

std::vector<uint8_t> SignedPayload::signing_bytes() const {
    std::vector<uint8_t> out;
    out.reserve(8 + txs.size() * 64 + 8);
    append_u64_le(out, txs.size());
    for (const Transaction& tx : txs) {
        out.insert(out.end(), tx.tx_id.begin(), tx.tx_id.end());
        append_u64_le(out, tx.producer_id);
        append_u64_le(out, tx.consumer_id);
        append_f64_le(out, tx.energy_kwh);
        append_f64_le(out, tx.unit_price);
        append_u64_le(out, tx.contract_id);
        append_u64_le(out, tx.created_at_ms);
    }
    append_u64_le(out, signer_id);
    return out;
}

std::vector<uint8_t> SignedPayload::wire_bytes() const {
    std::vector<uint8_t> out = signing_bytes();
    out.insert(out.end(), signature.begin(), signature.end());
    return out;
}

Hash256 hash_block_fields(uint64_t nonce, std::span<const uint8_t> payload_bytes,
                          const Hash256& prev_hash, uint64_t timestamp_ms) {
    std::vector<uint8_t> preimage;
    preimage.reserve(8 + 8 + payload_bytes.size() + 32 + 8);
    append_u64_le(preimage, nonce);
    append_u64_le(preimage, payload_bytes.size());
    preimage.insert(preimage.end(), payload_bytes.begin(), payload_bytes.end());
    preimage.insert(preimage.end(), prev_hash.begin(), prev_hash.end());
    append_u64_le(preimage, timestamp_ms);
    return sha256(preimage);
}

Block make_genesis(uint64_t signer_id, const KeyPair& signer_keys) {
    Block genesis;
    genesis.index = 0;
    genesis.prev_hash.fill(0);
    genesis.timestamp_ms = 0;
    genesis.nonce = BlockNonce{0, 0.0, "genesis"};
    genesis.payload.signer_id = signer_id;
    genesis.payload.signature = sign(genesis.payload.signing_bytes(), signer_keys.secret_key);
    genesis.block_hash = hash_block_fields(genesis.nonce.nonce, genesis.payload.wire_bytes(),
                                           genesis.prev_hash, genesis.timestamp_ms);
    return genesis;
}

Block build_candidate_block(std::vector<Transaction> txs, const NonceCandidate& nonce,
                            const Block& prev, uint64_t timestamp_ms, uint64_t signer_id,
                            const KeyPair& signer_keys) {
    require(!txs.empty(), "build_candidate_block: transaction list is empty");
    require(timestamp_ms > prev.timestamp_ms, "build_candidate_block: timestamp must exceed predecessor's");
    for (const Transaction& tx : txs) tx.validate();

    Block block;
    block.index = prev.index + 1;
    block.prev_hash = prev.block_hash;
    block.timestamp_ms = timestamp_ms;
    block.nonce.nonce = nonce.nonce;
    block.nonce.prediction_mbps = nonce.prediction_mbps;
    block.nonce.model_kind = ml::to_string(nonce.model_kind);
    block.payload.txs = std::move(txs);
    block.payload.signer_id = signer_id;
    block.payload.signature = sign(block.payload.signing_bytes(), signer_keys.secret_key);
    block.block_hash = hash_block_fields(block.nonce.nonce, block.payload.wire_bytes(),
                                         block.prev_hash, block.timestamp_ms);
    return block;
}

const char* to_string(ViolationKind kind) {
    switch (kind) {
        case ViolationKind::missing_genesis: return "missing_genesis";
        case ViolationKind::genesis_shape: return "genesis_shape";
        case ViolationKind::index_continuity: return "index_continuity";
        case ViolationKind::prev_hash_link: return "prev_hash_link";
        case ViolationKind::timestamp_order: return "timestamp_order";
        case ViolationKind::signature_invalid: return "signature_invalid";
        case ViolationKind::hash_mismatch: return "hash_mismatch";
        case ViolationKind::nonce_encoding: return "nonce_encoding";
        case ViolationKind::nonce_reuse: return "nonce_reuse";
    }
    return "unknown";
}

const PublicKey* KeyRegistry::find(uint64_t signer_id) const {
    auto it = pubkeys.find(signer_id);
    return it == pubkeys.end() ? nullptr : &it->second;
}

namespace {

// The nonce must be the declared encoding of the stored prediction, plain or
// whitened; this makes the prediction field tamper-evident even though it is
// not part of the hash preimage.
bool nonce_matches_prediction(const BlockNonce& nonce) {
    if (!std::isfinite(nonce.prediction_mbps)) return false;
    return nonce.nonce == nonce_from_prediction(nonce.prediction_mbps, false) ||
           nonce.nonce == nonce_from_prediction(nonce.prediction_mbps, true);
}

void check_signature_and_hash(const Block& block, const PublicKey* signer_pubkey,
                              std::vector<Violation>& out) {
    if (signer_pubkey != nullptr &&
        !verify(block.payload.signing_bytes(), block.payload.signature, *signer_pubkey)) {
        out.push_back({ViolationKind::signature_invalid, "payload signature does not verify"});
    }
    const Hash256 expect = hash_block_fields(block.nonce.nonce, block.payload.wire_bytes(),
                                             block.prev_hash, block.timestamp_ms);
    if (expect != block.block_hash) {
        out.push_back({ViolationKind::hash_mismatch, "stored block_hash does not match recomputation"});
    }
    if (!nonce_matches_prediction(block.nonce)) {
        out.push_back({ViolationKind::nonce_encoding, "nonce is not an encoding of prediction_mbps"});
    }
}

} // namespace

std::vector<Violation> validate_genesis(const Block& block, const PublicKey* signer_pubkey) {
    std::vector<Violation> out;
    Hash256 zero{};
    if (block.index != 0 || block.prev_hash != zero || block.timestamp_ms != 0 ||
        block.nonce.nonce != 0 || block.nonce.prediction_mbps != 0.0 ||
        block.nonce.model_kind != "genesis" || !block.payload.txs.empty()) {
        out.push_back({ViolationKind::genesis_shape,
                       "genesis must have index 0, zero prev_hash, timestamp 0, nonce 0, empty payload"});
    }
    check_signature_and_hash(block, signer_pubkey, out);
    return out;
}

std::vector<Violation> validate_block(const Block& block, const Block& prev,
                                      const PublicKey* signer_pubkey) {
    std::vector<Violation> out;
    if (block.index != prev.index + 1) {
        out.push_back({ViolationKind::index_continuity,
                       "index " + std::to_string(block.index) + " does not follow " +
                           std::to_string(prev.index)});
    }
    if (block.prev_hash != prev.block_hash) {
        out.push_back({ViolationKind::prev_hash_link, "prev_hash does not match predecessor's hash"});
    }
    if (block.timestamp_ms <= prev.timestamp_ms) {
        out.push_back({ViolationKind::timestamp_order, "timestamp does not increase"});
    }
    check_signature_and_hash(block, signer_pubkey, out);
    if (block.nonce.nonce == prev.nonce.nonce) {
        out.push_back({ViolationKind::nonce_reuse, "nonce repeats the previous block's nonce"});
    }
    return out;
}

ChainCheck verify_chain(const Ledger& ledger, const KeyRegistry* keys) {
    ChainCheck result;
    if (ledger.empty()) {
        result.ok = false;
        result.first_bad_index = 0;
        result.violations.push_back({ViolationKind::missing_genesis, "ledger has no genesis block"});
        return result;
    }

    auto key_for = [&](uint64_t signer) -> const PublicKey* {
        return keys == nullptr ? nullptr : keys->find(signer);
    };

    std::vector<Violation> v = validate_genesis(ledger.blocks[0], key_for(ledger.blocks[0].payload.signer_id));
    if (!v.empty()) {
        result.ok = false;
        result.first_bad_index = 0;
        result.violations = std::move(v);
        return result;
    }
    for (size_t i = 1; i < ledger.blocks.size(); ++i) {
        v = validate_block(ledger.blocks[i], ledger.blocks[i - 1],
                           key_for(ledger.blocks[i].payload.signer_id));
        if (!v.empty()) {
            result.ok = false;
            result.first_bad_index = i;
            result.violations = std::move(v);
            return result;
        }
    }
    return result;
}

std::string ChainCheck::message() const {
    if (ok) return "ok";
    std::string msg = "violation at index " + std::to_string(first_bad_index) + ":";
    for (const Violation& v : violations) {
        msg += " [";
        msg += to_string(v.kind);
        msg += "] ";
        msg += v.detail;
    }
    return msg;
}

namespace {

template <typename T>
T get_strict(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) throw std::runtime_error(std::string("missing field '") + key + "'");
    return j.at(key).get<T>();
}

void check_exact_keys(const nlohmann::json& j, std::initializer_list<const char*> keys,
                      const char* what) {
    if (!j.is_object()) throw std::runtime_error(std::string(what) + " must be an object");
    if (j.size() != keys.size()) {
        throw std::runtime_error(std::string("unexpected field count in ") + what);
    }
    for (const char* k : keys) {
        if (!j.contains(k)) throw std::runtime_error(std::string("missing field '") + k + "' in " + what);
    }
}

template <size_t N>
std::array<uint8_t, N> fixed_hex(const std::string& hex, const char* what) {
    const std::vector<uint8_t> bytes = hex_decode(hex);
    if (bytes.size() != N) {
        throw std::runtime_error(std::string("bad length for ") + what + ": expected " +
                                 std::to_string(2 * N) + " hex chars");
    }
    std::array<uint8_t, N> out{};
    std::memcpy(out.data(), bytes.data(), N);
    return out;
}

} // namespace

std::string block_to_json(const Block& block) {
    nlohmann::json txs = nlohmann::json::array();
    for (const Transaction& tx : block.payload.txs) {
        txs.push_back({{"tx_id", hex_encode(tx.tx_id)},
                       {"producer_id", tx.producer_id},
                       {"consumer_id", tx.consumer_id},
                       {"energy_kwh", tx.energy_kwh},
                       {"unit_price", tx.unit_price},
                       {"contract_id", tx.contract_id},
                       {"created_at_ms", tx.created_at_ms}});
    }
    nlohmann::json j{{"index", block.index},
                     {"prev_hash", hex_encode(block.prev_hash)},
                     {"timestamp_ms", block.timestamp_ms},
                     {"nonce", block.nonce.nonce},
                     {"prediction_mbps", block.nonce.prediction_mbps},
                     {"model_kind", block.nonce.model_kind},
                     {"payload",
                      {{"txs", std::move(txs)},
                       {"signer_id", block.payload.signer_id},
                       {"signature", hex_encode(block.payload.signature)}}},
                     {"block_hash", hex_encode(block.block_hash)}};
    return j.dump();
}

Block block_from_json(const std::string& line) {
    const nlohmann::json j = nlohmann::json::parse(line);
    check_exact_keys(j,
                     {"index", "prev_hash", "timestamp_ms", "nonce", "prediction_mbps", "model_kind",
                      "payload", "block_hash"},
                     "block");

    Block block;
    block.index = get_strict<uint64_t>(j, "index");
    block.prev_hash = fixed_hex<32>(get_strict<std::string>(j, "prev_hash"), "prev_hash");
    block.timestamp_ms = get_strict<uint64_t>(j, "timestamp_ms");
    block.nonce.nonce = get_strict<uint64_t>(j, "nonce");
    block.nonce.prediction_mbps = get_strict<double>(j, "prediction_mbps");
    block.nonce.model_kind = get_strict<std::string>(j, "model_kind");
    if (!known_block_kind(block.nonce.model_kind)) {
        throw std::runtime_error("unknown model_kind '" + block.nonce.model_kind + "'");
    }
    if (!j.at("prediction_mbps").is_number()) {
        throw std::runtime_error("prediction_mbps must be a number");
    }

    const nlohmann::json& payload = j.at("payload");
    check_exact_keys(payload, {"txs", "signer_id", "signature"}, "payload");
    block.payload.signer_id = get_strict<uint64_t>(payload, "signer_id");
    block.payload.signature = fixed_hex<64>(get_strict<std::string>(payload, "signature"), "signature");
    if (!payload.at("txs").is_array()) throw std::runtime_error("payload.txs must be an array");
    for (const auto& jt : payload.at("txs")) {
        check_exact_keys(jt,
                         {"tx_id", "producer_id", "consumer_id", "energy_kwh", "unit_price",
                          "contract_id", "created_at_ms"},
                         "transaction");
        Transaction tx;
        tx.tx_id = fixed_hex<16>(get_strict<std::string>(jt, "tx_id"), "tx_id");
        tx.producer_id = get_strict<uint64_t>(jt, "producer_id");
        tx.consumer_id = get_strict<uint64_t>(jt, "consumer_id");
        tx.energy_kwh = get_strict<double>(jt, "energy_kwh");
        tx.unit_price = get_strict<double>(jt, "unit_price");
        tx.contract_id = get_strict<uint64_t>(jt, "contract_id");
        tx.created_at_ms = get_strict<uint64_t>(jt, "created_at_ms");
        block.payload.txs.push_back(tx);
    }

    block.block_hash = fixed_hex<32>(get_strict<std::string>(j, "block_hash"), "block_hash");
    return block;
}

std::string ledger_to_jsonl(const Ledger& ledger) {
    std::string out;
    for (const Block& block : ledger.blocks) {
        out += block_to_json(block);
        out.push_back('\n');
    }
    return out;
}

Ledger ledger_from_jsonl(const std::string& text) {
    Ledger ledger;
    std::istringstream in(text);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        try {
            ledger.blocks.push_back(block_from_json(line));
        } catch (const std::exception& e) {
            throw std::runtime_error("ledger: line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return ledger;
}

void save_ledger(const Ledger& ledger, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_ledger: cannot open '" + path + "'");
    const std::string text = ledger_to_jsonl(ledger);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw std::runtime_error("save_ledger: write failed");
}

Ledger load_ledger(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_ledger: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return ledger_from_jsonl(buf.str());
}

} // namespace gridseal::chain
