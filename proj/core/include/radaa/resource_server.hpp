#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "radaa/audit.hpp"
#include "radaa/engine.hpp"
#include "radaa/faults.hpp"
#include "radaa/sender_proof.hpp"
#include "radaa/store.hpp"
#include "radaa/token.hpp"

namespace radaa {

struct ResourceDescriptor {
    std::string path;
    std::string required_scope;
    bool elevated = false;  // derived: required_scope carries the elevated marker
    std::string payload;
};

struct AccessDecision {
    bool allow = false;
    int status = 401;  // 200, 401, or 403
    std::string reason;
    std::vector<std::string> effective_scopes;
    std::string payload;  // only on allow
};

class ResourceServer {
public:
    ResourceServer(std::string rs_id, KeyRegistry as_keys, Store& store, AuditLog& audit,
                   AdaptiveEngine& engine, FaultFlags faults = {}, Clock clock = nullptr);

    void add_resource(const ResourceDescriptor& r);
    std::optional<ResourceDescriptor> find_resource(const std::string& path) const;

    // Server-side reputation lookup overrides whatever the request claimed.
    void set_ip_reputation(std::map<std::string, double> table) {
        ip_reputation_ = std::move(table);
    }

    // Called when HIGH risk demands revocation of the presented token.
    std::function<void(const std::string& token_wire)> revoke_hook;

    AccessDecision access(const std::string& token_wire,
                          const std::optional<std::string>& proof_wire,
                          const std::string& method, const std::string& uri,
                          const std::string& path, const TransactionContext& ctx);

    const std::string& id() const { return rs_id_; }

private:
    std::optional<SubjectHistory> last_seen(const std::string& subject) const;

    std::string rs_id_;
    KeyRegistry as_keys_;
    Store& store_;
    AuditLog& audit_;
    AdaptiveEngine& engine_;
    FaultFlags faults_;
    Clock clock_;
    ReplayCache replay_cache_;
    std::map<std::string, ResourceDescriptor> resources_;
    std::map<std::string, double> ip_reputation_;
};

}  // namespace radaa
