#include "radaa/pkce.hpp"

#include <cctype>

#include "radaa/crypto.hpp"
#include "radaa/error.hpp"

namespace radaa {

namespace {

bool is_unreserved(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) ||
           c == '-' || c == '.' || c == '_' || c == '~';
}

bool verifier_well_formed(const std::string& verifier) {
    if (verifier.size() < 43 || verifier.size() > 128) {
        return false;
    }
    for (char c : verifier) {
        if (!is_unreserved(c)) {
            return false;
        }
    }
    return true;
}

}  // namespace

PkceChallenge make_pkce_challenge(const std::string& verifier) {
    if (!verifier_well_formed(verifier)) {
        throw Error("invalid_verifier",
                    "verifier must be 43-128 unreserved characters");
    }
    return PkceChallenge{"S256", b64url_encode(crypto::sha256(verifier))};
}

bool verify_pkce(const std::string& verifier, const PkceChallenge& challenge) {
    if (challenge.method != "S256" || !verifier_well_formed(verifier)) {
        return false;
    }
    return b64url_encode(crypto::sha256(verifier)) == challenge.challenge;
}

std::string random_pkce_verifier() {
    // 32 random bytes -> 43 base64url chars, all unreserved.
    return b64url_encode(crypto::random_bytes(32));
}

}  // namespace radaa
