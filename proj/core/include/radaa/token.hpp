#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "radaa/bytes.hpp"

namespace radaa {

enum class Algorithm { ED25519, HMAC_SHA256 };

std::string to_string(Algorithm alg);
Algorithm algorithm_from_string(const std::string& s);

enum class RiskClass { LOW, MEDIUM, HIGH };

std::string to_string(RiskClass c);
RiskClass risk_class_from_string(const std::string& s);

struct KeyPair {
    std::string key_id;
    Bytes public_key;   // empty for HMAC (symmetric)
    Bytes private_key;  // for HMAC this is the shared secret, >= 32 bytes
    Algorithm algorithm = Algorithm::ED25519;

    static KeyPair generate_ed25519(const std::string& key_id);
    static KeyPair generate_hmac(const std::string& key_id);
};

struct TokenClaims {
    std::string iss;
    std::string sub;
    std::string aud;
    std::string client_id;
    std::vector<std::string> scope;  // ordered, duplicate-free
    int64_t iat = 0;
    int64_t exp = 0;
    std::string jti;  // base64url of 128 random bits
    std::optional<std::string> cnf_thumbprint;
    int tal = 0;
    RiskClass risk_class = RiskClass::LOW;

    // Throws Error("invalid_claims") when an invariant is violated.
    void validate() const;

    bool operator==(const TokenClaims&) const = default;
};

struct SignedToken {
    std::string wire;  // "b64url(header).b64url(claims).b64url(signature)"
};

// Verification key registry keyed by kid. For ED25519 entries the bytes are
// the raw public key; for HMAC they are the shared secret.
struct VerificationKey {
    Bytes key;
    Algorithm algorithm = Algorithm::ED25519;
};
using KeyRegistry = std::map<std::string, VerificationKey>;

// base64url(SHA-256(raw public key)), no padding.
std::string derive_thumbprint(const Bytes& public_key);

std::string fresh_jti();

SignedToken sign_token(const TokenClaims& claims, const KeyPair& key);

// Signature and structural checks only; expiry is the policy layers' job.
TokenClaims verify_token(const std::string& wire, const KeyRegistry& keys);

// Test-only escape hatch: signs claims without running validate(), so
// expired-but-signature-valid tokens can be constructed.
SignedToken sign_token_unchecked(const TokenClaims& claims, const KeyPair& key);

// Sign-then-seal: the sealed payload wraps the complete signed envelope.
Bytes seal_claims(const SignedToken& token, const Bytes& audience_secret);
SignedToken unseal_claims(const Bytes& sealed, const Bytes& audience_secret);

}  // namespace radaa
