#pragma once

#include <cstdint>
#include <deque>
#include <mutex>
#include <string>
#include <unordered_set>

#include "radaa/token.hpp"

namespace radaa {

// Application-layer key-possession proof bound to one HTTP request and,
// optionally, to an access token (via ath). Wire form is
// "b64url(payload).b64url(signature)" where the payload is a JSON object
// {htm, htu, iat, jti, ath, pk} and the signature covers the ASCII bytes
// of the payload segment.
struct SenderProof {
    std::string htm;   // HTTP method, upper-case
    std::string htu;   // absolute request URI without query
    int64_t iat = 0;
    std::string jti;   // base64url of 96 random bits
    std::string ath;   // base64url SHA-256 of the access-token wire ("" hashes too)
    Bytes public_key;  // embedded sender public key (ed25519, 32 bytes)

    std::string wire;  // filled by make_sender_proof / parse
};

// Sliding-window replay filter over (scope-key, jti) pairs. Entries expire
// after `window` seconds; at capacity the oldest entry is evicted first.
// check_and_insert is atomic: of two concurrent calls with the same pair,
// exactly one returns true.
class ReplayCache {
public:
    explicit ReplayCache(int64_t window_seconds = 300, size_t capacity = 65536)
        : window_(window_seconds), capacity_(capacity) {}

    bool check_and_insert(const std::string& scope_key, const std::string& jti, int64_t now);

    size_t size() const;

private:
    void sweep(int64_t now);  // caller holds mu_

    int64_t window_;
    size_t capacity_;
    mutable std::mutex mu_;
    std::unordered_set<std::string> seen_;
    std::deque<std::pair<int64_t, std::string>> order_;
};

constexpr int64_t kProofFreshnessWindowSeconds = 60;

SenderProof make_sender_proof(const std::string& method, const std::string& uri,
                              const std::string& token_wire, const KeyPair& key,
                              int64_t now);

// Parses the wire form without verifying anything beyond structure.
SenderProof parse_sender_proof(const std::string& wire);

enum class ProofStatus {
    ACCEPTED,
    MALFORMED,
    BAD_SIGNATURE,
    BINDING_MISMATCH,
    METHOD_URI_MISMATCH,
    TOKEN_HASH_MISMATCH,
    STALE,
    REPLAYED,
};

const char* to_error_code(ProofStatus s);

// Full check chain: signature, key binding against cnf_thumbprint, htm/htu,
// ath against the presented token, freshness (|now - iat| <= 60 s), then
// replay. The jti is recorded in the cache only on acceptance.
ProofStatus verify_sender_proof(const std::string& proof_wire, const std::string& method,
                                const std::string& uri, const std::string& token_wire,
                                const std::string& cnf_thumbprint, ReplayCache& cache,
                                int64_t now, const std::string& replay_scope = "proof");

}  // namespace radaa
