#include "radaa/idp.hpp"

#include "radaa/error.hpp"

namespace radaa {

std::string StaticTableIdp::authenticate(const std::string& username,
                                         const std::string& secret) const {
    auto it = table_.find(username);
    if (it == table_.end() || it->second.secret != secret) {
        throw Error("authentication_failed", "bad credentials");
    }
    return it->second.subject;
}

void FederationRegistry::add(std::shared_ptr<IdentityProvider> idp) {
    providers_[idp->idp_id()] = std::move(idp);
}

std::string FederationRegistry::authenticate(const std::string& idp_id,
                                             const std::string& username,
                                             const std::string& secret) const {
    auto it = providers_.find(idp_id);
    if (it == providers_.end()) {
        throw Error("unknown_idp", "no such identity provider: " + idp_id);
    }
    return it->second->authenticate(username, secret);
}

bool FederationRegistry::has(const std::string& idp_id) const {
    return providers_.contains(idp_id);
}

}  // namespace radaa
