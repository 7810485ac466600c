#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace radaa {

using Bytes = std::vector<uint8_t>;

inline Bytes to_bytes(std::string_view s) {
    return Bytes(s.begin(), s.end());
}

inline std::string to_string(const Bytes& b) {
    return std::string(b.begin(), b.end());
}

// Base64url without padding (RFC 4648 §5).
std::string b64url_encode(const Bytes& data);
std::string b64url_encode(std::string_view data);

// Throws std::invalid_argument on characters outside the alphabet.
Bytes b64url_decode(std::string_view encoded);

}  // namespace radaa
