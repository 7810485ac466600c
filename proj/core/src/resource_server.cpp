#include "radaa/resource_server.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>

#include "radaa/error.hpp"

namespace radaa {

using nlohmann::json;

namespace {

int64_t wall_clock() {
    return std::chrono::duration_cast<std::chrono::seconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

}  // namespace

ResourceServer::ResourceServer(std::string rs_id, KeyRegistry as_keys, Store& store,
                               AuditLog& audit, AdaptiveEngine& engine, FaultFlags faults,
                               Clock clock)
    : rs_id_(std::move(rs_id)),
      as_keys_(std::move(as_keys)),
      store_(store),
      audit_(audit),
      engine_(engine),
      faults_(faults),
      clock_(clock ? std::move(clock) : Clock(wall_clock)) {}

void ResourceServer::add_resource(const ResourceDescriptor& r) {
    ResourceDescriptor stored = r;
    stored.elevated = is_elevated_scope(r.required_scope);
    resources_[r.path] = stored;
}

std::optional<ResourceDescriptor> ResourceServer::find_resource(const std::string& path) const {
    auto it = resources_.find(path);
    if (it == resources_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::optional<SubjectHistory> ResourceServer::last_seen(const std::string& subject) const {
    if (subject.empty()) {
        return std::nullopt;
    }
    auto hist = store_.get("subject-history", subject);
    if (!hist || !hist->contains("ts")) {
        return std::nullopt;
    }
    return SubjectHistory{GeoPoint{hist->value("lat", 0.0), hist->value("lon", 0.0)},
                          hist->value("ts", int64_t{0})};
}

AccessDecision ResourceServer::access(const std::string& token_wire,
                                      const std::optional<std::string>& proof_wire,
                                      const std::string& method, const std::string& uri,
                                      const std::string& path, const TransactionContext& ctx) {
    auto deny = [&](int status, const std::string& reason, double score = 0.0,
                    RiskClass cls = RiskClass::LOW) {
        audit_.append(AuditRecord{clock_(), ctx.client_id.empty() ? "unknown" : ctx.client_id,
                                  "access_resource", score, cls, reason});
        return AccessDecision{false, status, reason, {}, ""};
    };

    TokenClaims claims;
    try {
        claims = verify_token(token_wire, as_keys_);
    } catch (const Error&) {
        return deny(401, "invalid_token");
    }
    int64_t now = clock_();
    if (now >= claims.exp) {
        return deny(401, "token_expired");
    }
    if (!faults_.disable_audience_check && claims.aud != rs_id_) {
        return deny(401, "audience_mismatch");
    }
    if (store_.get("revocations", claims.jti)) {
        return deny(401, "token_revoked");
    }

    if (claims.cnf_thumbprint && !faults_.disable_sender_proof) {
        if (!proof_wire) {
            return deny(401, "binding_mismatch");
        }
        ProofStatus s;
        if (faults_.disable_replay_cache) {
            ReplayCache throwaway(1, 4);
            s = verify_sender_proof(*proof_wire, method, uri, token_wire,
                                    *claims.cnf_thumbprint, throwaway, now, "rs");
        } else {
            s = verify_sender_proof(*proof_wire, method, uri, token_wire,
                                    *claims.cnf_thumbprint, replay_cache_, now, "rs");
        }
        if (s != ProofStatus::ACCEPTED) {
            return deny(401, to_error_code(s));
        }
    }

    auto resource = find_resource(path);
    if (!resource) {
        return deny(403, "unknown_resource");
    }

    TransactionContext ectx = ctx;
    ectx.tal = claims.tal;
    if (ectx.timestamp == 0) {
        ectx.timestamp = now;
    }
    if (auto rep = ip_reputation_.find(ectx.ip); rep != ip_reputation_.end()) {
        ectx.ip_reputation = rep->second;
    }
    RiskAssessment a = engine_.assess(ectx, last_seen(claims.sub));
    Decision d = engine_.decide_for(a, ProtocolStage::RESOURCE_ACCESS,
                                    std::set<std::string>(claims.scope.begin(),
                                                          claims.scope.end()));
    if (d.action == Action::DENY_AND_REVOKE) {
        if (revoke_hook) {
            revoke_hook(token_wire);
        } else {
            store_.put("revocations", claims.jti, json{{"at", now}});
        }
        return deny(403, "risk_denied", a.score, a.risk_class);
    }

    std::vector<std::string> effective = claims.scope;
    if (d.action == Action::LIMIT_SCOPES) {
        std::erase_if(effective, [&](const std::string& s) {
            return d.stripped_scopes.contains(s);
        });
    }

    if (std::find(effective.begin(), effective.end(), resource->required_scope) ==
        effective.end()) {
        bool risk_gated = d.action == Action::LIMIT_SCOPES &&
                          std::find(claims.scope.begin(), claims.scope.end(),
                                    resource->required_scope) != claims.scope.end();
        AccessDecision out{false, 403, risk_gated ? "risk_denied" : "insufficient_scope",
                           effective, ""};
        audit_.append(AuditRecord{now, claims.client_id, "access_resource", a.score,
                                  a.risk_class, out.reason});
        return out;
    }

    audit_.append(
        AuditRecord{now, claims.client_id, "access_resource", a.score, a.risk_class, "allow"});
    return AccessDecision{true, 200, "ok", effective, resource->payload};
}

}  // namespace radaa
