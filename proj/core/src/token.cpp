#include "radaa/token.hpp"

#include <nlohmann/json.hpp>

#include "radaa/crypto.hpp"
#include "radaa/error.hpp"

namespace radaa {

using nlohmann::json;

std::string to_string(Algorithm alg) {
    switch (alg) {
        case Algorithm::ED25519: return "ED25519";
        case Algorithm::HMAC_SHA256: return "HMAC_SHA256";
    }
    throw Error("unsupported_algorithm", "unknown algorithm enum value");
}

Algorithm algorithm_from_string(const std::string& s) {
    if (s == "ED25519") return Algorithm::ED25519;
    if (s == "HMAC_SHA256") return Algorithm::HMAC_SHA256;
    throw Error("unsupported_algorithm", "unknown algorithm: " + s);
}

std::string to_string(RiskClass c) {
    switch (c) {
        case RiskClass::LOW: return "LOW";
        case RiskClass::MEDIUM: return "MEDIUM";
        case RiskClass::HIGH: return "HIGH";
    }
    throw Error("invalid_risk_class", "unknown risk class enum value");
}

RiskClass risk_class_from_string(const std::string& s) {
    if (s == "LOW") return RiskClass::LOW;
    if (s == "MEDIUM") return RiskClass::MEDIUM;
    if (s == "HIGH") return RiskClass::HIGH;
    throw Error("invalid_risk_class", "unknown risk class: " + s);
}

KeyPair KeyPair::generate_ed25519(const std::string& key_id) {
    auto raw = crypto::ed25519_generate();
    return KeyPair{key_id, std::move(raw.public_key), std::move(raw.private_key),
                   Algorithm::ED25519};
}

KeyPair KeyPair::generate_hmac(const std::string& key_id) {
    return KeyPair{key_id, {}, crypto::random_bytes(32), Algorithm::HMAC_SHA256};
}

void TokenClaims::validate() const {
    if (exp <= iat) {
        throw Error("invalid_claims", "exp must be greater than iat");
    }
    if (scope.empty()) {
        throw Error("invalid_claims", "scope must be non-empty");
    }
    if (jti.empty()) {
        throw Error("invalid_claims", "jti missing");
    }
    if (tal >= 1 && !cnf_thumbprint.has_value()) {
        throw Error("invalid_claims", "cnf_thumbprint required at tal >= 1");
    }
}

std::string derive_thumbprint(const Bytes& public_key) {
    if (public_key.size() != 32) {
        throw Error("malformed_key", "expected a 32-byte public key");
    }
    return b64url_encode(crypto::sha256(public_key));
}

std::string fresh_jti() {
    return b64url_encode(crypto::random_bytes(16));
}

namespace {

json claims_to_json(const TokenClaims& c) {
    json j;
    j["iss"] = c.iss;
    j["sub"] = c.sub;
    j["aud"] = c.aud;
    j["client_id"] = c.client_id;
    j["scope"] = c.scope;
    j["iat"] = c.iat;
    j["exp"] = c.exp;
    j["jti"] = c.jti;
    if (c.cnf_thumbprint) {
        j["cnf_thumbprint"] = *c.cnf_thumbprint;
    }
    j["tal"] = c.tal;
    j["risk_class"] = to_string(c.risk_class);
    return j;
}

TokenClaims claims_from_json(const json& j) {
    TokenClaims c;
    c.iss = j.at("iss").get<std::string>();
    c.sub = j.at("sub").get<std::string>();
    c.aud = j.at("aud").get<std::string>();
    c.client_id = j.at("client_id").get<std::string>();
    c.scope = j.at("scope").get<std::vector<std::string>>();
    c.iat = j.at("iat").get<int64_t>();
    c.exp = j.at("exp").get<int64_t>();
    c.jti = j.at("jti").get<std::string>();
    if (j.contains("cnf_thumbprint")) {
        c.cnf_thumbprint = j.at("cnf_thumbprint").get<std::string>();
    }
    c.tal = j.at("tal").get<int>();
    c.risk_class = risk_class_from_string(j.at("risk_class").get<std::string>());
    return c;
}

Bytes compute_signature(Algorithm alg, const Bytes& key, const std::string& signing_input) {
    Bytes msg = to_bytes(signing_input);
    switch (alg) {
        case Algorithm::ED25519:
            return crypto::ed25519_sign(key, msg);
        case Algorithm::HMAC_SHA256:
            return crypto::hmac_sha256(key, msg);
    }
    throw Error("unsupported_algorithm", "cannot sign with unknown algorithm");
}

SignedToken sign_impl(const TokenClaims& claims, const KeyPair& key) {
    if (key.algorithm == Algorithm::HMAC_SHA256 && key.private_key.size() < 32) {
        throw Error("malformed_key", "HMAC key must be at least 32 bytes");
    }
    json header;
    header["alg"] = to_string(key.algorithm);
    header["typ"] = "radaa+token";
    header["kid"] = key.key_id;

    std::string header_seg = b64url_encode(header.dump());
    std::string claims_seg = b64url_encode(claims_to_json(claims).dump());
    std::string signing_input = header_seg + "." + claims_seg;

    Bytes sig = compute_signature(key.algorithm, key.private_key, signing_input);
    return SignedToken{signing_input + "." + b64url_encode(sig)};
}

}  // namespace

SignedToken sign_token(const TokenClaims& claims, const KeyPair& key) {
    claims.validate();
    return sign_impl(claims, key);
}

SignedToken sign_token_unchecked(const TokenClaims& claims, const KeyPair& key) {
    return sign_impl(claims, key);
}

TokenClaims verify_token(const std::string& wire, const KeyRegistry& keys) {
    size_t dot1 = wire.find('.');
    size_t dot2 = (dot1 == std::string::npos) ? std::string::npos : wire.find('.', dot1 + 1);
    if (dot1 == std::string::npos || dot2 == std::string::npos ||
        wire.find('.', dot2 + 1) != std::string::npos) {
        throw Error("malformed_token", "expected three dot-separated segments");
    }
    std::string header_seg = wire.substr(0, dot1);
    std::string claims_seg = wire.substr(dot1 + 1, dot2 - dot1 - 1);
    std::string sig_seg = wire.substr(dot2 + 1);

    json header;
    json claims_json;
    Bytes sig;
    try {
        header = json::parse(to_string(b64url_decode(header_seg)));
        claims_json = json::parse(to_string(b64url_decode(claims_seg)));
        sig = b64url_decode(sig_seg);
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw Error("malformed_token", std::string("segment decode failed: ") + e.what());
    }

    std::string kid = header.value("kid", "");
    auto it = keys.find(kid);
    if (it == keys.end()) {
        throw Error("unknown_kid", "no verification key for kid: " + kid);
    }
    Algorithm alg = algorithm_from_string(header.value("alg", ""));
    if (alg != it->second.algorithm) {
        throw Error("signature_mismatch", "header alg does not match registered key");
    }

    std::string signing_input = header_seg + "." + claims_seg;
    bool ok = false;
    switch (alg) {
        case Algorithm::ED25519:
            ok = crypto::ed25519_verify(it->second.key, to_bytes(signing_input), sig);
            break;
        case Algorithm::HMAC_SHA256:
            ok = crypto::hmac_sha256(it->second.key, to_bytes(signing_input)) == sig;
            break;
    }
    if (!ok) {
        throw Error("signature_mismatch", "token signature verification failed");
    }

    try {
        return claims_from_json(claims_json);
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw Error("malformed_token", std::string("claims decode failed: ") + e.what());
    }
}

Bytes seal_claims(const SignedToken& token, const Bytes& audience_secret) {
    return crypto::aes256gcm_seal(audience_secret, to_bytes(token.wire));
}

SignedToken unseal_claims(const Bytes& sealed, const Bytes& audience_secret) {
    return SignedToken{to_string(crypto::aes256gcm_open(audience_secret, sealed))};
}

}  // namespace radaa
