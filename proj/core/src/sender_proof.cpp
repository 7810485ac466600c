#include "radaa/sender_proof.hpp"

#include <nlohmann/json.hpp>

#include <cmath>

#include "radaa/crypto.hpp"
#include "radaa/error.hpp"

namespace radaa {

using nlohmann::json;

bool ReplayCache::check_and_insert(const std::string& scope_key, const std::string& jti,
                                   int64_t now) {
    std::string composite = scope_key + "\n" + jti;
    std::lock_guard lock(mu_);
    sweep(now);
    if (seen_.contains(composite)) {
        return false;
    }
    if (order_.size() >= capacity_) {
        seen_.erase(order_.front().second);
        order_.pop_front();
    }
    seen_.insert(composite);
    order_.emplace_back(now, composite);
    return true;
}

size_t ReplayCache::size() const {
    std::lock_guard lock(mu_);
    return seen_.size();
}

void ReplayCache::sweep(int64_t now) {
    while (!order_.empty() && order_.front().first + window_ <= now) {
        seen_.erase(order_.front().second);
        order_.pop_front();
    }
}

SenderProof make_sender_proof(const std::string& method, const std::string& uri,
                              const std::string& token_wire, const KeyPair& key,
                              int64_t now) {
    if (key.algorithm != Algorithm::ED25519) {
        throw Error("unsupported_algorithm", "sender proofs require an ed25519 key");
    }
    SenderProof p;
    p.htm = method;
    p.htu = uri;
    p.iat = now;
    p.jti = b64url_encode(crypto::random_bytes(12));
    p.ath = b64url_encode(crypto::sha256(token_wire));
    p.public_key = key.public_key;

    json payload;
    payload["htm"] = p.htm;
    payload["htu"] = p.htu;
    payload["iat"] = p.iat;
    payload["jti"] = p.jti;
    payload["ath"] = p.ath;
    payload["pk"] = b64url_encode(p.public_key);

    std::string payload_seg = b64url_encode(payload.dump());
    Bytes sig = crypto::ed25519_sign(key.private_key, to_bytes(payload_seg));
    p.wire = payload_seg + "." + b64url_encode(sig);
    return p;
}

SenderProof parse_sender_proof(const std::string& wire) {
    size_t dot = wire.find('.');
    if (dot == std::string::npos || wire.find('.', dot + 1) != std::string::npos) {
        throw Error("malformed_proof", "expected two dot-separated segments");
    }
    json payload;
    try {
        payload = json::parse(to_string(b64url_decode(wire.substr(0, dot))));
    } catch (const std::exception& e) {
        throw Error("malformed_proof", std::string("payload decode failed: ") + e.what());
    }
    SenderProof p;
    try {
        p.htm = payload.at("htm").get<std::string>();
        p.htu = payload.at("htu").get<std::string>();
        p.iat = payload.at("iat").get<int64_t>();
        p.jti = payload.at("jti").get<std::string>();
        p.ath = payload.at("ath").get<std::string>();
        p.public_key = b64url_decode(payload.at("pk").get<std::string>());
    } catch (const std::exception& e) {
        throw Error("malformed_proof", std::string("missing proof field: ") + e.what());
    }
    p.wire = wire;
    return p;
}

const char* to_error_code(ProofStatus s) {
    switch (s) {
        case ProofStatus::ACCEPTED: return "accepted";
        case ProofStatus::MALFORMED: return "malformed_proof";
        case ProofStatus::BAD_SIGNATURE: return "invalid_proof_signature";
        case ProofStatus::BINDING_MISMATCH: return "binding_mismatch";
        case ProofStatus::METHOD_URI_MISMATCH: return "method_uri_mismatch";
        case ProofStatus::TOKEN_HASH_MISMATCH: return "token_hash_mismatch";
        case ProofStatus::STALE: return "proof_stale";
        case ProofStatus::REPLAYED: return "proof_replayed";
    }
    return "malformed_proof";
}

ProofStatus verify_sender_proof(const std::string& proof_wire, const std::string& method,
                                const std::string& uri, const std::string& token_wire,
                                const std::string& cnf_thumbprint, ReplayCache& cache,
                                int64_t now, const std::string& replay_scope) {
    SenderProof p;
    try {
        p = parse_sender_proof(proof_wire);
    } catch (const std::exception&) {
        return ProofStatus::MALFORMED;
    }
    size_t dot = proof_wire.find('.');
    std::string payload_seg = proof_wire.substr(0, dot);
    Bytes sig;
    try {
        sig = b64url_decode(proof_wire.substr(dot + 1));
    } catch (const std::exception&) {
        return ProofStatus::MALFORMED;
    }
    if (p.public_key.size() != 32 ||
        !crypto::ed25519_verify(p.public_key, to_bytes(payload_seg), sig)) {
        return ProofStatus::BAD_SIGNATURE;
    }
    if (derive_thumbprint(p.public_key) != cnf_thumbprint) {
        return ProofStatus::BINDING_MISMATCH;
    }
    if (p.htm != method || p.htu != uri) {
        return ProofStatus::METHOD_URI_MISMATCH;
    }
    if (p.ath != b64url_encode(crypto::sha256(token_wire))) {
        return ProofStatus::TOKEN_HASH_MISMATCH;
    }
    if (std::llabs(now - p.iat) > kProofFreshnessWindowSeconds) {
        return ProofStatus::STALE;
    }
    if (!cache.check_and_insert(replay_scope, p.jti, now)) {
        return ProofStatus::REPLAYED;
    }
    return ProofStatus::ACCEPTED;
}

}  // namespace radaa
