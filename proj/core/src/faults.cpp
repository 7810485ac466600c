#include "radaa/faults.hpp"

#include "radaa/error.hpp"

namespace radaa {

FaultFlags FaultFlags::with_disabled(const std::string& name) {
    FaultFlags f;
    if (name.empty()) return f;
    if (name == "pkce") f.disable_pkce = true;
    else if (name == "iss-check") f.disable_iss_check = true;
    else if (name == "sender-proof") f.disable_sender_proof = true;
    else if (name == "replay-cache") f.disable_replay_cache = true;
    else if (name == "audience-check") f.disable_audience_check = true;
    else if (name == "rate-limit") f.disable_rate_limit = true;
    else if (name == "csp-header") f.disable_csp_header = true;
    else if (name == "binding") f.disable_binding = true;
    else throw Error("unknown_fault", "no such mitigation switch: " + name);
    return f;
}

}  // namespace radaa
