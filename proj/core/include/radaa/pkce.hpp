#pragma once

#include <string>

#include "radaa/bytes.hpp"

namespace radaa {

// S256 is the only accepted method.
struct PkceChallenge {
    std::string method = "S256";
    std::string challenge;  // base64url(SHA-256(ASCII(verifier))), 43 chars

    bool operator==(const PkceChallenge&) const = default;
};

// Verifier must be 43-128 characters drawn from [A-Za-z0-9-._~].
// Throws Error("invalid_verifier") otherwise.
PkceChallenge make_pkce_challenge(const std::string& verifier);

// True iff challenge.method is S256 and challenge matches S256(verifier).
// Malformed verifiers simply fail the check.
bool verify_pkce(const std::string& verifier, const PkceChallenge& challenge);

std::string random_pkce_verifier();

}  // namespace radaa
