#pragma once

#include <map>
#include <memory>
#include <string>

namespace radaa {

// Federated identity-provider interface. Authentication is delegated here
// so the token path never touches credentials directly.
class IdentityProvider {
public:
    virtual ~IdentityProvider() = default;

    virtual std::string idp_id() const = 0;

    // Returns the mapped local subject id; throws Error("authentication_failed").
    virtual std::string authenticate(const std::string& username,
                                     const std::string& secret) const = 0;
};

// In-process stub backed by a static credential table.
class StaticTableIdp : public IdentityProvider {
public:
    struct Entry {
        std::string secret;
        std::string subject;
    };

    StaticTableIdp(std::string idp_id, std::map<std::string, Entry> table)
        : idp_id_(std::move(idp_id)), table_(std::move(table)) {}

    std::string idp_id() const override { return idp_id_; }
    std::string authenticate(const std::string& username,
                             const std::string& secret) const override;

private:
    std::string idp_id_;
    std::map<std::string, Entry> table_;
};

class FederationRegistry {
public:
    void add(std::shared_ptr<IdentityProvider> idp);

    // Throws Error("unknown_idp") or propagates authentication failure.
    std::string authenticate(const std::string& idp_id, const std::string& username,
                             const std::string& secret) const;

    bool has(const std::string& idp_id) const;

private:
    std::map<std::string, std::shared_ptr<IdentityProvider>> providers_;
};

}  // namespace radaa
