#include "radaa/crypto.hpp"

#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/rand.h>
#include <openssl/sha.h>

#include <memory>

#include "radaa/error.hpp"

namespace radaa::crypto {

namespace {

struct EvpPkeyDeleter {
    void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
struct EvpMdCtxDeleter {
    void operator()(EVP_MD_CTX* c) const { EVP_MD_CTX_free(c); }
};
struct EvpCipherCtxDeleter {
    void operator()(EVP_CIPHER_CTX* c) const { EVP_CIPHER_CTX_free(c); }
};

using PkeyPtr = std::unique_ptr<EVP_PKEY, EvpPkeyDeleter>;
using MdCtxPtr = std::unique_ptr<EVP_MD_CTX, EvpMdCtxDeleter>;
using CipherCtxPtr = std::unique_ptr<EVP_CIPHER_CTX, EvpCipherCtxDeleter>;

constexpr size_t kGcmNonceLen = 12;
constexpr size_t kGcmTagLen = 16;

}  // namespace

Bytes sha256(const Bytes& data) {
    Bytes digest(SHA256_DIGEST_LENGTH);
    SHA256(data.data(), data.size(), digest.data());
    return digest;
}

Bytes sha256(std::string_view data) {
    return sha256(to_bytes(data));
}

Bytes hmac_sha256(const Bytes& key, const Bytes& data) {
    Bytes mac(SHA256_DIGEST_LENGTH);
    unsigned int len = 0;
    HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()),
         data.data(), data.size(), mac.data(), &len);
    mac.resize(len);
    return mac;
}

Bytes random_bytes(size_t n) {
    Bytes out(n);
    if (RAND_bytes(out.data(), static_cast<int>(n)) != 1) {
        throw Error("rng_failure", "RAND_bytes failed");
    }
    return out;
}

Ed25519KeyPair ed25519_generate() {
    EVP_PKEY* raw = nullptr;
    {
        EVP_PKEY_CTX* ctx = EVP_PKEY_CTX_new_id(EVP_PKEY_ED25519, nullptr);
        if (!ctx || EVP_PKEY_keygen_init(ctx) != 1 || EVP_PKEY_keygen(ctx, &raw) != 1) {
            EVP_PKEY_CTX_free(ctx);
            throw Error("keygen_failure", "ed25519 keygen failed");
        }
        EVP_PKEY_CTX_free(ctx);
    }
    PkeyPtr pkey(raw);

    Ed25519KeyPair kp;
    size_t len = 32;
    kp.public_key.resize(len);
    if (EVP_PKEY_get_raw_public_key(pkey.get(), kp.public_key.data(), &len) != 1) {
        throw Error("keygen_failure", "raw public key extraction failed");
    }
    len = 32;
    kp.private_key.resize(len);
    if (EVP_PKEY_get_raw_private_key(pkey.get(), kp.private_key.data(), &len) != 1) {
        throw Error("keygen_failure", "raw private key extraction failed");
    }
    return kp;
}

Bytes ed25519_sign(const Bytes& private_key, const Bytes& message) {
    PkeyPtr pkey(EVP_PKEY_new_raw_private_key(
        EVP_PKEY_ED25519, nullptr, private_key.data(), private_key.size()));
    if (!pkey) {
        throw Error("bad_key", "invalid ed25519 private key");
    }
    MdCtxPtr ctx(EVP_MD_CTX_new());
    if (EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, pkey.get()) != 1) {
        throw Error("sign_failure", "DigestSignInit failed");
    }
    size_t sig_len = 64;
    Bytes sig(sig_len);
    if (EVP_DigestSign(ctx.get(), sig.data(), &sig_len, message.data(), message.size()) != 1) {
        throw Error("sign_failure", "DigestSign failed");
    }
    sig.resize(sig_len);
    return sig;
}

bool ed25519_verify(const Bytes& public_key, const Bytes& message, const Bytes& signature) {
    PkeyPtr pkey(EVP_PKEY_new_raw_public_key(
        EVP_PKEY_ED25519, nullptr, public_key.data(), public_key.size()));
    if (!pkey) {
        return false;
    }
    MdCtxPtr ctx(EVP_MD_CTX_new());
    if (EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, pkey.get()) != 1) {
        return false;
    }
    return EVP_DigestVerify(ctx.get(), signature.data(), signature.size(),
                            message.data(), message.size()) == 1;
}

Bytes aes256gcm_seal(const Bytes& key, const Bytes& plaintext) {
    if (key.size() != 32) {
        throw Error("bad_key", "sealing key must be 32 bytes");
    }
    Bytes nonce = random_bytes(kGcmNonceLen);
    CipherCtxPtr ctx(EVP_CIPHER_CTX_new());
    if (EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, key.data(), nonce.data()) != 1) {
        throw Error("seal_failure", "EncryptInit failed");
    }
    Bytes out(nonce);
    out.resize(kGcmNonceLen + plaintext.size() + kGcmTagLen);
    int len = 0;
    if (EVP_EncryptUpdate(ctx.get(), out.data() + kGcmNonceLen, &len,
                          plaintext.data(), static_cast<int>(plaintext.size())) != 1) {
        throw Error("seal_failure", "EncryptUpdate failed");
    }
    int fin = 0;
    if (EVP_EncryptFinal_ex(ctx.get(), out.data() + kGcmNonceLen + len, &fin) != 1) {
        throw Error("seal_failure", "EncryptFinal failed");
    }
    if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, kGcmTagLen,
                            out.data() + kGcmNonceLen + len + fin) != 1) {
        throw Error("seal_failure", "tag extraction failed");
    }
    out.resize(kGcmNonceLen + len + fin + kGcmTagLen);
    return out;
}

Bytes aes256gcm_open(const Bytes& key, const Bytes& sealed) {
    if (key.size() != 32) {
        throw Error("bad_key", "sealing key must be 32 bytes");
    }
    if (sealed.size() < kGcmNonceLen + kGcmTagLen) {
        throw Error("seal_auth_failure", "sealed payload truncated");
    }
    const uint8_t* nonce = sealed.data();
    const uint8_t* ct = sealed.data() + kGcmNonceLen;
    size_t ct_len = sealed.size() - kGcmNonceLen - kGcmTagLen;
    const uint8_t* tag = sealed.data() + kGcmNonceLen + ct_len;

    CipherCtxPtr ctx(EVP_CIPHER_CTX_new());
    if (EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, key.data(), nonce) != 1) {
        throw Error("seal_failure", "DecryptInit failed");
    }
    Bytes out(ct_len);
    int len = 0;
    if (ct_len > 0 &&
        EVP_DecryptUpdate(ctx.get(), out.data(), &len, ct, static_cast<int>(ct_len)) != 1) {
        throw Error("seal_auth_failure", "decryption failed");
    }
    if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, kGcmTagLen,
                            const_cast<uint8_t*>(tag)) != 1) {
        throw Error("seal_failure", "tag set failed");
    }
    int fin = 0;
    if (EVP_DecryptFinal_ex(ctx.get(), out.data() + len, &fin) != 1) {
        throw Error("seal_auth_failure", "authentication tag mismatch");
    }
    out.resize(len + fin);
    return out;
}

}  // namespace radaa::crypto
