#pragma once

#include <cstdint>
#include <functional>
#include <string>

namespace radaa {

using Clock = std::function<int64_t()>;

// Fault-injection switches. Each one disables a single mitigation so the
// harness can show that mitigation is load-bearing. All off in production.
struct FaultFlags {
    bool disable_pkce = false;
    bool disable_iss_check = false;     // honest client's issuer validation
    bool disable_sender_proof = false;  // resource-server proof verification
    bool disable_replay_cache = false;
    bool disable_audience_check = false;
    bool disable_rate_limit = false;
    bool disable_csp_header = false;
    bool disable_binding = false;  // client key-possession checks at the AS

    static FaultFlags with_disabled(const std::string& name);
};

}  // namespace radaa
