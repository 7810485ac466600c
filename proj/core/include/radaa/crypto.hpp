#pragma once

#include <cstddef>
#include <string>

#include "radaa/bytes.hpp"

namespace radaa::crypto {

Bytes sha256(const Bytes& data);
Bytes sha256(std::string_view data);

Bytes hmac_sha256(const Bytes& key, const Bytes& data);

Bytes random_bytes(size_t n);

// Ed25519 raw keys: 32-byte public, 32-byte seed as private.
struct Ed25519KeyPair {
    Bytes public_key;
    Bytes private_key;
};

Ed25519KeyPair ed25519_generate();
Bytes ed25519_sign(const Bytes& private_key, const Bytes& message);
bool ed25519_verify(const Bytes& public_key, const Bytes& message, const Bytes& signature);

// AES-256-GCM with a random 12-byte nonce prepended to the ciphertext;
// the 16-byte tag is appended by OpenSSL convention.
Bytes aes256gcm_seal(const Bytes& key, const Bytes& plaintext);
// Throws Error("seal_auth_failure") on tag mismatch or truncation.
Bytes aes256gcm_open(const Bytes& key, const Bytes& sealed);

}  // namespace radaa::crypto
