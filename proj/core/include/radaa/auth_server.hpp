#pragma once

#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "radaa/audit.hpp"
#include "radaa/config.hpp"
#include "radaa/engine.hpp"
#include "radaa/error.hpp"
#include "radaa/faults.hpp"
#include "radaa/idp.hpp"
#include "radaa/pkce.hpp"
#include "radaa/sender_proof.hpp"
#include "radaa/store.hpp"
#include "radaa/token.hpp"

namespace radaa {

struct ClientRecord {
    std::string client_id;
    std::string display_name;
    std::set<std::string> redirect_uris;
    std::set<std::string> registered_scopes;
    std::optional<Bytes> public_key;  // present iff tal = 1
    int tal = 0;
    std::optional<Bytes> sealing_key;  // 32 bytes, for cross-ecosystem exchange
};

struct ClientMetadata {
    std::string client_id;
    std::string display_name;
    std::set<std::string> redirect_uris;
    std::set<std::string> scopes;
};

struct TokenResponse {
    std::string access_token;
    std::string token_type;  // "radaa-pop" or "bearer"
    int64_t expires_in = 0;
    std::optional<std::string> refresh_token;
    std::vector<std::string> granted_scopes;
    std::optional<std::string> sealed_token;  // b64url AES-GCM envelope, exchange only
};

// Thrown when MEDIUM risk blocks a flow until step-up completes. Carries
// the challenge the caller must answer via complete_step_up.
class StepUpRequired : public Error {
public:
    StepUpRequired(std::string challenge_id_in)
        : Error("step_up_required", "additional verification required"),
          challenge_id(std::move(challenge_id_in)) {}

    std::string challenge_id;
};

class AuthServer {
public:
    AuthServer(Config config, Store& store, AuditLog& audit, AdaptiveEngine& engine,
               FederationRegistry& federation, FaultFlags faults = {}, Clock clock = nullptr);

    // -- client registration ------------------------------------------------

    // Server nonce the registering client must sign to prove key possession.
    std::string registration_nonce(const std::string& client_id);

    // tal = 1 only when a public key arrives with a valid signature over the
    // nonce previously handed out; anything else degrades to tal 0.
    ClientRecord register_client(const ClientMetadata& meta,
                                 const std::optional<Bytes>& public_key = std::nullopt,
                                 const std::optional<Bytes>& nonce_signature = std::nullopt);

    std::optional<ClientRecord> find_client(const std::string& client_id) const;
    void set_sealing_key(const std::string& client_id, const Bytes& key);

    // Resource servers allowed to call introspect.
    void register_resource_server(const std::string& rs_id, const Bytes& public_key);

    // -- protocol operations --------------------------------------------------

    struct ParResult {
        std::string request_uri;
        int64_t expires_in = 0;
    };

    // `body_request_uri` is any request_uri-like reference found in the
    // request body; per policy its mere presence is rejected.
    ParResult par(const std::string& client_id, const std::optional<std::string>& proof_wire,
                  const std::set<std::string>& scopes, const std::string& redirect_uri,
                  const PkceChallenge& pkce, const TransactionContext& ctx,
                  const std::optional<std::string>& state = std::nullopt,
                  const std::optional<std::string>& body_request_uri = std::nullopt);

    struct AuthorizeResult {
        std::string code;
        std::string iss;
        std::optional<std::string> state;
    };

    AuthorizeResult authorize(const std::string& request_uri, const std::string& idp_id,
                              const std::string& username, const std::string& secret,
                              const std::set<std::string>& consent,
                              const TransactionContext& ctx);

    TokenResponse token(const std::string& code, const std::string& pkce_verifier,
                        const std::string& client_id,
                        const std::optional<std::string>& proof_wire,
                        const TransactionContext& ctx);

    TokenResponse refresh(const std::string& refresh_token, const std::string& client_id,
                          const std::optional<std::string>& proof_wire,
                          const TransactionContext& ctx);

    // Idempotent; unknown references acknowledged silently.
    void revoke(const std::string& token_reference);

    struct Introspection {
        bool active = false;
        std::optional<TokenClaims> claims;
    };

    Introspection introspect(const std::string& token_wire, const std::string& caller_id,
                             const std::string& caller_proof_wire);

    TokenResponse exchange(const std::string& incoming_token,
                           const std::optional<std::string>& incoming_proof,
                           const std::string& target_audience, const TransactionContext& ctx);

    bool complete_step_up(const std::string& challenge_id, const std::string& answer);

    // -- shared state accessors ----------------------------------------------

    bool is_revoked(const std::string& jti) const;
    const KeyRegistry& verification_keys() const { return verification_keys_; }
    const std::string& issuer() const { return config_.issuer_id; }
    const Config& config() const { return config_; }

    // Fills tal / ip_reputation / device_known from server-side knowledge;
    // the caller supplies only the observable evidence.
    TransactionContext enrich_context(TransactionContext ctx, const std::string& client_id,
                                      const std::string& subject = "") const;
    std::optional<SubjectHistory> last_seen(const std::string& subject) const;

    // Delivery channel for step-up one-time codes (models the user's device).
    std::function<void(const std::string& subject, const std::string& challenge_id,
                       const std::string& code)>
        step_up_sink;

private:
    RiskAssessment assess(const TransactionContext& ctx, const std::string& subject) const;
    void gate(const RiskAssessment& a, ProtocolStage stage, const std::string& subject,
              const std::string& action, const std::string& actor);
    void require_client_proof(const ClientRecord& client,
                              const std::optional<std::string>& proof_wire,
                              const std::string& endpoint, const std::string& token_wire = "");
    void check_rate_limit(const std::string& client_id);
    std::string new_step_up_challenge(const std::string& subject);
    bool consume_satisfied_step_up(const std::string& subject);
    TokenResponse issue_tokens(const ClientRecord& client, const std::string& subject,
                               const std::vector<std::string>& scopes, RiskClass risk_class,
                               const std::string& aud, int64_t max_exp = 0,
                               const std::string& family = "");
    void revoke_family(const std::string& family);
    void record_history(const TransactionContext& ctx, const std::string& subject);
    void audit_event(const std::string& actor, const std::string& action,
                     const RiskAssessment& a, const std::string& outcome);

    Config config_;
    Store& store_;
    AuditLog& audit_;
    AdaptiveEngine& engine_;
    FederationRegistry& federation_;
    FaultFlags faults_;
    Clock clock_;

    KeyPair signing_key_;
    KeyRegistry verification_keys_;
    std::map<std::string, Bytes> resource_servers_;  // rs_id -> public key
    ReplayCache proof_cache_;

    std::mutex nonce_mu_;
    std::map<std::string, std::string> registration_nonces_;

    std::mutex rate_mu_;
    std::map<std::string, std::deque<int64_t>> par_times_;
};

}  // namespace radaa
