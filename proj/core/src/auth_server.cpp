#include "radaa/auth_server.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>

#include "radaa/crypto.hpp"

namespace radaa {

using nlohmann::json;

namespace {

int64_t wall_clock() {
    return std::chrono::duration_cast<std::chrono::seconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

json client_to_json(const ClientRecord& c) {
    json j;
    j["client_id"] = c.client_id;
    j["display_name"] = c.display_name;
    j["redirect_uris"] = c.redirect_uris;
    j["scopes"] = c.registered_scopes;
    if (c.public_key) {
        j["public_key"] = b64url_encode(*c.public_key);
    }
    j["tal"] = c.tal;
    if (c.sealing_key) {
        j["sealing_key"] = b64url_encode(*c.sealing_key);
    }
    return j;
}

ClientRecord client_from_json(const json& j) {
    ClientRecord c;
    c.client_id = j.at("client_id").get<std::string>();
    c.display_name = j.value("display_name", "");
    for (const auto& u : j.at("redirect_uris")) {
        c.redirect_uris.insert(u.get<std::string>());
    }
    for (const auto& s : j.at("scopes")) {
        c.registered_scopes.insert(s.get<std::string>());
    }
    if (j.contains("public_key")) {
        c.public_key = b64url_decode(j["public_key"].get<std::string>());
    }
    c.tal = j.at("tal").get<int>();
    if (j.contains("sealing_key")) {
        c.sealing_key = b64url_decode(j["sealing_key"].get<std::string>());
    }
    return c;
}

bool redirect_uri_valid(const std::string& uri) {
    if (uri.find("://") == std::string::npos) {
        return false;
    }
    return uri.find('#') == std::string::npos;
}

std::string step_up_code() {
    auto raw = crypto::random_bytes(4);
    uint32_t n = (raw[0] << 24) | (raw[1] << 16) | (raw[2] << 8) | raw[3];
    char buf[8];
    std::snprintf(buf, sizeof buf, "%06u", n % 1000000);
    return buf;
}

}  // namespace

AuthServer::AuthServer(Config config, Store& store, AuditLog& audit, AdaptiveEngine& engine,
                       FederationRegistry& federation, FaultFlags faults, Clock clock)
    : config_(std::move(config)),
      store_(store),
      audit_(audit),
      engine_(engine),
      federation_(federation),
      faults_(faults),
      clock_(clock ? std::move(clock) : Clock(wall_clock)),
      signing_key_(KeyPair::generate_ed25519("as-signing-1")) {
    verification_keys_[signing_key_.key_id] =
        VerificationKey{signing_key_.public_key, Algorithm::ED25519};
}

std::string AuthServer::registration_nonce(const std::string& client_id) {
    std::string nonce = b64url_encode(crypto::random_bytes(16));
    std::lock_guard lock(nonce_mu_);
    registration_nonces_[client_id] = nonce;
    return nonce;
}

ClientRecord AuthServer::register_client(const ClientMetadata& meta,
                                         const std::optional<Bytes>& public_key,
                                         const std::optional<Bytes>& nonce_signature) {
    if (meta.redirect_uris.empty()) {
        throw Error("invalid_client_metadata", "at least one redirect URI required");
    }
    if (meta.scopes.empty()) {
        throw Error("invalid_client_metadata", "scopes must be non-empty");
    }
    for (const auto& uri : meta.redirect_uris) {
        if (!redirect_uri_valid(uri)) {
            throw Error("invalid_redirect", "redirect URI must be absolute with no fragment: " + uri);
        }
    }

    ClientRecord rec;
    rec.client_id = meta.client_id;
    rec.display_name = meta.display_name;
    rec.redirect_uris = meta.redirect_uris;
    rec.registered_scopes = meta.scopes;

    if (public_key && nonce_signature) {
        std::string nonce;
        {
            std::lock_guard lock(nonce_mu_);
            auto it = registration_nonces_.find(meta.client_id);
            if (it != registration_nonces_.end()) {
                nonce = it->second;
                registration_nonces_.erase(it);
            }
        }
        if (!nonce.empty() && public_key->size() == 32 &&
            crypto::ed25519_verify(*public_key, to_bytes(nonce), *nonce_signature)) {
            rec.public_key = *public_key;
            rec.tal = 1;
        }
        // Failed possession proof: registration proceeds at tal 0.
    }

    store_.put("clients", rec.client_id, client_to_json(rec));
    return rec;
}

std::optional<ClientRecord> AuthServer::find_client(const std::string& client_id) const {
    auto j = store_.get("clients", client_id);
    if (!j) {
        return std::nullopt;
    }
    return client_from_json(*j);
}

void AuthServer::set_sealing_key(const std::string& client_id, const Bytes& key) {
    if (key.size() != 32) {
        throw Error("bad_key", "sealing key must be 32 bytes");
    }
    auto j = store_.get("clients", client_id);
    if (!j) {
        throw Error("unknown_client", "no such client: " + client_id);
    }
    (*j)["sealing_key"] = b64url_encode(key);
    store_.put("clients", client_id, *j);
}

void AuthServer::register_resource_server(const std::string& rs_id, const Bytes& public_key) {
    resource_servers_[rs_id] = public_key;
}

TransactionContext AuthServer::enrich_context(TransactionContext ctx,
                                              const std::string& client_id,
                                              const std::string& subject) const {
    if (auto client = find_client(client_id)) {
        ctx.tal = client->tal;
    }
    auto rep = config_.ip_reputation.find(ctx.ip);
    if (rep != config_.ip_reputation.end()) {
        ctx.ip_reputation = rep->second;
    }
    if (!subject.empty() && !ctx.device_id.empty()) {
        if (auto hist = store_.get("subject-history", subject)) {
            for (const auto& d : hist->value("devices", json::array())) {
                if (d.get<std::string>() == ctx.device_id) {
                    ctx.device_known = true;
                    break;
                }
            }
        }
    }
    if (ctx.timestamp == 0) {
        ctx.timestamp = clock_();
    }
    return ctx;
}

std::optional<SubjectHistory> AuthServer::last_seen(const std::string& subject) const {
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

RiskAssessment AuthServer::assess(const TransactionContext& ctx,
                                  const std::string& subject) const {
    return engine_.assess(ctx, last_seen(subject));
}

void AuthServer::audit_event(const std::string& actor, const std::string& action,
                             const RiskAssessment& a, const std::string& outcome) {
    audit_.append(AuditRecord{clock_(), actor, action, a.score, a.risk_class, outcome});
}

void AuthServer::gate(const RiskAssessment& a, ProtocolStage stage, const std::string& subject,
                      const std::string& action, const std::string& actor) {
    Decision d = engine_.decide_for(a, stage, {});
    switch (d.action) {
        case Action::PROCEED:
        case Action::LIMIT_SCOPES:
            return;
        case Action::STEP_UP:
            if (!subject.empty() && consume_satisfied_step_up(subject)) {
                return;
            }
            audit_event(actor, action, a, "step_up_required");
            throw StepUpRequired(subject.empty() ? "" : new_step_up_challenge(subject));
        case Action::DENY:
        case Action::DENY_AND_REVOKE:
            audit_event(actor, action, a, "risk_denied");
            throw Error("risk_denied", "transaction classified HIGH risk");
    }
}

void AuthServer::require_client_proof(const ClientRecord& client,
                                      const std::optional<std::string>& proof_wire,
                                      const std::string& endpoint,
                                      const std::string& token_wire) {
    if (client.tal == 0 || faults_.disable_binding) {
        return;
    }
    if (!proof_wire) {
        throw Error("binding_mismatch", "TAL1 client must present a key-possession proof");
    }
    std::string thumb = derive_thumbprint(*client.public_key);
    std::string uri = config_.issuer_id + endpoint;
    ProofStatus s = verify_sender_proof(*proof_wire, "POST", uri, token_wire, thumb,
                                        proof_cache_, clock_(), "as:" + endpoint);
    if (s != ProofStatus::ACCEPTED) {
        throw Error(to_error_code(s), "client possession proof rejected");
    }
}

void AuthServer::check_rate_limit(const std::string& client_id) {
    if (faults_.disable_rate_limit) {
        return;
    }
    int64_t now = clock_();
    std::lock_guard lock(rate_mu_);
    auto& times = par_times_[client_id];
    while (!times.empty() && times.front() + 60 <= now) {
        times.pop_front();
    }
    if (static_cast<int>(times.size()) >= config_.rate_limit_par_per_min) {
        // Breach feeds back into the engine: system-wide posture rises.
        engine_.set_posture(PostureLevel::ELEVATED);
        throw Error("rate_limited", "PAR rate limit exceeded for client " + client_id);
    }
    times.push_back(now);
}

AuthServer::ParResult AuthServer::par(const std::string& client_id,
                                      const std::optional<std::string>& proof_wire,
                                      const std::set<std::string>& scopes,
                                      const std::string& redirect_uri,
                                      const PkceChallenge& pkce, const TransactionContext& ctx,
                                      const std::optional<std::string>& state,
                                      const std::optional<std::string>& body_request_uri) {
    if (body_request_uri) {
        throw Error("invalid_request",
                    "request_uri references are not accepted in PAR bodies");
    }
    auto client = find_client(client_id);
    if (!client) {
        throw Error("unknown_client", "no such client: " + client_id);
    }
    check_rate_limit(client_id);
    if (pkce.method != "S256") {
        throw Error("invalid_request", "PKCE method must be S256");
    }
    if (!client->redirect_uris.contains(redirect_uri)) {
        throw Error("invalid_redirect", "redirect_uri not registered for client");
    }
    if (scopes.empty()) {
        throw Error("invalid_request", "scopes must be non-empty");
    }
    for (const auto& s : scopes) {
        if (!client->registered_scopes.contains(s)) {
            throw Error("invalid_scope", "scope not registered: " + s);
        }
    }
    require_client_proof(*client, proof_wire, "/par");

    TransactionContext ectx = enrich_context(ctx, client_id);
    RiskAssessment a = assess(ectx, "");
    if (engine_.decide_for(a, ProtocolStage::AUTHN, {}).action == Action::DENY) {
        audit_event(client_id, "par", a, "risk_denied");
        throw Error("risk_denied", "PAR rejected as HIGH risk");
    }

    std::string request_uri = "urn:radaa:request:" + b64url_encode(crypto::random_bytes(16));
    json rec;
    rec["client_id"] = client_id;
    rec["challenge"] = pkce.challenge;
    rec["redirect_uri"] = redirect_uri;
    rec["scopes"] = scopes;
    if (state) {
        rec["state"] = *state;
    }
    rec["created"] = clock_();
    rec["used"] = false;
    store_.put("par", request_uri, rec);

    audit_event(client_id, "par", a, "allow");
    return ParResult{request_uri, config_.par_ttl};
}

std::string AuthServer::new_step_up_challenge(const std::string& subject) {
    std::string id = b64url_encode(crypto::random_bytes(12));
    std::string code = step_up_code();
    json rec;
    rec["subject"] = subject;
    rec["answer"] = code;
    rec["expires"] = clock_() + config_.step_up_ttl;
    rec["satisfied"] = false;
    rec["voided"] = false;
    rec["consumed"] = false;
    store_.put("challenges", id, rec);
    if (step_up_sink) {
        step_up_sink(subject, id, code);
    }
    return id;
}

bool AuthServer::consume_satisfied_step_up(const std::string& subject) {
    for (auto& [id, rec] : store_.list("challenges")) {
        if (rec.value("subject", "") != subject || !rec.value("satisfied", false) ||
            rec.value("consumed", false) || rec.value("voided", false)) {
            continue;
        }
        json updated = rec;
        updated["consumed"] = true;
        if (store_.checked_put("challenges", id, rec, updated).success) {
            return true;
        }
    }
    return false;
}

bool AuthServer::complete_step_up(const std::string& challenge_id, const std::string& answer) {
    auto rec = store_.get("challenges", challenge_id);
    if (!rec) {
        throw Error("unknown_challenge", "no such step-up challenge");
    }
    if (rec->value("voided", false)) {
        throw Error("challenge_voided", "challenge already failed");
    }
    if (clock_() >= rec->value("expires", int64_t{0})) {
        throw Error("challenge_expired", "step-up challenge expired");
    }
    if (rec->value("satisfied", false)) {
        throw Error("challenge_voided", "challenge already answered");
    }
    json updated = *rec;
    bool pass = rec->value("answer", "") == answer;
    if (pass) {
        updated["satisfied"] = true;
    } else {
        updated["voided"] = true;  // single attempt
    }
    store_.checked_put("challenges", challenge_id, *rec, updated);
    return pass;
}

AuthServer::AuthorizeResult AuthServer::authorize(const std::string& request_uri,
                                                  const std::string& idp_id,
                                                  const std::string& username,
                                                  const std::string& secret,
                                                  const std::set<std::string>& consent,
                                                  const TransactionContext& ctx) {
    auto rec = store_.get("par", request_uri);
    if (!rec) {
        throw Error("invalid_request_uri", "unknown request_uri");
    }
    if (rec->value("used", false)) {
        throw Error("one_time_use", "request_uri already consumed");
    }
    if (clock_() >= rec->value("created", int64_t{0}) + config_.par_ttl) {
        throw Error("expired_request_uri", "request_uri expired");
    }
    std::string client_id = rec->value("client_id", "");

    std::string subject = federation_.authenticate(idp_id, username, secret);

    TransactionContext ectx = enrich_context(ctx, client_id, subject);
    RiskAssessment a = assess(ectx, subject);
    gate(a, ProtocolStage::AUTHN, subject, "authorize", subject);

    if (consent.empty()) {
        throw Error("consent_required", "no scopes approved");
    }
    std::set<std::string> par_scopes;
    for (const auto& s : rec->at("scopes")) {
        par_scopes.insert(s.get<std::string>());
    }
    for (const auto& s : consent) {
        if (!par_scopes.contains(s)) {
            throw Error("invalid_scope", "consent exceeds requested scopes: " + s);
        }
    }

    // Single use: first concurrent winner flips used=false -> true.
    json used = *rec;
    used["used"] = true;
    if (!store_.checked_put("par", request_uri, *rec, used).success) {
        throw Error("one_time_use", "request_uri already consumed");
    }

    std::string code = b64url_encode(crypto::random_bytes(16));
    json crec;
    crec["par_ref"] = request_uri;
    crec["subject"] = subject;
    crec["consented"] = consent;
    crec["issued"] = clock_();
    crec["redeemed"] = false;
    store_.put("codes", code, crec);

    record_history(ectx, subject);
    audit_event(subject, "authorize", a, "allow");

    AuthorizeResult out{code, config_.issuer_id, std::nullopt};
    if (rec->contains("state")) {
        out.state = rec->value("state", "");
    }
    return out;
}

void AuthServer::record_history(const TransactionContext& ctx, const std::string& subject) {
    if (subject.empty()) {
        return;
    }
    json hist = store_.get("subject-history", subject).value_or(json::object());
    hist["lat"] = ctx.geo.lat;
    hist["lon"] = ctx.geo.lon;
    hist["ts"] = ctx.timestamp;
    json devices = hist.value("devices", json::array());
    if (!ctx.device_id.empty()) {
        bool known = false;
        for (const auto& d : devices) {
            if (d.get<std::string>() == ctx.device_id) {
                known = true;
                break;
            }
        }
        if (!known) {
            devices.push_back(ctx.device_id);
        }
    }
    hist["devices"] = devices;
    store_.put("subject-history", subject, hist);
}

TokenResponse AuthServer::issue_tokens(const ClientRecord& client, const std::string& subject,
                                       const std::vector<std::string>& scopes,
                                       RiskClass risk_class, const std::string& aud,
                                       int64_t max_exp, const std::string& family_in) {
    int64_t now = clock_();
    int64_t ttl = client.tal >= 1 ? config_.access_ttl_tal1 : config_.access_ttl_tal0;
    int64_t exp = now + ttl;
    if (max_exp > 0) {
        exp = std::min(exp, max_exp);
    }

    std::vector<std::string> granted;
    for (const auto& s : scopes) {
        // TAL0 bearer tokens never carry elevated scopes.
        if (client.tal == 0 && is_elevated_scope(s)) {
            continue;
        }
        granted.push_back(s);
    }
    if (granted.empty()) {
        throw Error("invalid_scope", "no grantable scopes for this client");
    }

    // Rotation keeps the original family so reuse detection can revoke the
    // whole chain, successors included.
    std::string family =
        family_in.empty() ? b64url_encode(crypto::random_bytes(8)) : family_in;

    TokenClaims claims;
    claims.iss = config_.issuer_id;
    claims.sub = subject;
    claims.aud = aud;
    claims.client_id = client.client_id;
    claims.scope = granted;
    claims.iat = now;
    claims.exp = exp;
    claims.jti = fresh_jti();
    if (client.tal >= 1) {
        claims.cnf_thumbprint = derive_thumbprint(*client.public_key);
    }
    claims.tal = client.tal;
    claims.risk_class = risk_class;

    SignedToken tok = sign_token(claims, signing_key_);
    store_.put("tokens", claims.jti,
               json{{"family", family},
                    {"client_id", client.client_id},
                    {"subject", subject},
                    {"exp", exp}});

    TokenResponse resp;
    resp.access_token = tok.wire;
    resp.token_type = client.tal >= 1 ? "radaa-pop" : "bearer";
    resp.expires_in = exp - now;
    resp.granted_scopes = granted;

    if (client.tal >= 1) {
        std::string rid = b64url_encode(crypto::random_bytes(16));
        store_.put("refresh", rid,
                   json{{"client_id", client.client_id},
                        {"subject", subject},
                        {"scopes", granted},
                        {"family", family},
                        {"rotated", false},
                        {"expires", now + config_.refresh_ttl}});
        resp.refresh_token = rid;
    }
    return resp;
}

TokenResponse AuthServer::token(const std::string& code, const std::string& pkce_verifier,
                                const std::string& client_id,
                                const std::optional<std::string>& proof_wire,
                                const TransactionContext& ctx) {
    auto crec = store_.get("codes", code);
    if (!crec) {
        throw Error("invalid_grant", "unknown authorization code");
    }
    if (clock_() >= crec->value("issued", int64_t{0}) + config_.code_ttl) {
        throw Error("invalid_grant", "authorization code expired");
    }
    auto prec = store_.get("par", crec->value("par_ref", ""));
    if (!prec) {
        throw Error("invalid_grant", "dangling authorization code");
    }
    if (prec->value("client_id", "") != client_id) {
        throw Error("invalid_grant", "code was not issued to this client");
    }
    auto client = find_client(client_id);
    if (!client) {
        throw Error("unknown_client", "no such client: " + client_id);
    }

    require_client_proof(*client, proof_wire, "/token");

    if (!faults_.disable_pkce) {
        PkceChallenge stored{"S256", prec->value("challenge", "")};
        if (!verify_pkce(pkce_verifier, stored)) {
            throw Error("invalid_grant", "PKCE verifier does not match challenge");
        }
    }

    std::string subject = crec->value("subject", "");
    TransactionContext ectx = enrich_context(ctx, client_id, subject);
    RiskAssessment a = assess(ectx, subject);
    gate(a, ProtocolStage::TOKEN_ISSUE, subject, "token", client_id);

    // Single redemption.
    json redeemed = *crec;
    redeemed["redeemed"] = true;
    if (crec->value("redeemed", false) ||
        !store_.checked_put("codes", code, *crec, redeemed).success) {
        throw Error("invalid_grant", "authorization code already redeemed");
    }

    std::vector<std::string> scopes;
    for (const auto& s : crec->at("consented")) {
        scopes.push_back(s.get<std::string>());
    }
    TokenResponse resp = issue_tokens(*client, subject, scopes, a.risk_class, config_.rs_id);
    record_history(ectx, subject);
    audit_event(client_id, "token", a, "allow");
    return resp;
}

TokenResponse AuthServer::refresh(const std::string& refresh_token, const std::string& client_id,
                                  const std::optional<std::string>& proof_wire,
                                  const TransactionContext& ctx) {
    auto rrec = store_.get("refresh", refresh_token);
    if (!rrec) {
        throw Error("invalid_grant", "unknown refresh token");
    }
    if (rrec->value("client_id", "") != client_id) {
        throw Error("invalid_grant", "refresh token was not issued to this client");
    }
    auto client = find_client(client_id);
    if (!client) {
        throw Error("unknown_client", "no such client: " + client_id);
    }
    require_client_proof(*client, proof_wire, "/refresh");

    if (rrec->value("rotated", false) || is_revoked(refresh_token)) {
        // Reuse of a rotated refresh token: the whole grant chain goes.
        revoke_family(rrec->value("family", ""));
        throw Error("invalid_grant", "refresh token reuse detected; grant chain revoked");
    }
    if (clock_() >= rrec->value("expires", int64_t{0})) {
        throw Error("invalid_grant", "refresh token expired");
    }

    std::string subject = rrec->value("subject", "");
    TransactionContext ectx = enrich_context(ctx, client_id, subject);
    RiskAssessment a = assess(ectx, subject);
    gate(a, ProtocolStage::TOKEN_ISSUE, subject, "refresh", client_id);

    json rotated = *rrec;
    rotated["rotated"] = true;
    if (!store_.checked_put("refresh", refresh_token, *rrec, rotated).success) {
        revoke_family(rrec->value("family", ""));
        throw Error("invalid_grant", "refresh token reuse detected; grant chain revoked");
    }

    std::vector<std::string> scopes;
    for (const auto& s : rrec->at("scopes")) {
        scopes.push_back(s.get<std::string>());
    }
    TokenResponse resp = issue_tokens(*client, subject, scopes, a.risk_class, config_.rs_id, 0,
                                      rrec->value("family", ""));
    audit_event(client_id, "refresh", a, "allow");
    return resp;
}

void AuthServer::revoke_family(const std::string& family) {
    if (family.empty()) {
        return;
    }
    int64_t now = clock_();
    for (const auto& [jti, rec] : store_.list("tokens")) {
        if (rec.value("family", "") == family) {
            store_.put("revocations", jti, json{{"at", now}});
        }
    }
    for (auto& [rid, rec] : store_.list("refresh")) {
        if (rec.value("family", "") == family) {
            store_.put("revocations", rid, json{{"at", now}});
        }
    }
}

void AuthServer::revoke(const std::string& token_reference) {
    std::string ref = token_reference;
    if (token_reference.find('.') != std::string::npos) {
        // A full wire token: pull the jti out of the claims segment.
        try {
            TokenClaims claims = verify_token(token_reference, verification_keys_);
            ref = claims.jti;
        } catch (const std::exception&) {
            return;  // unknown/garbled references acknowledged silently
        }
    }
    if (auto rrec = store_.get("refresh", ref)) {
        revoke_family(rrec->value("family", ""));
    }
    store_.put("revocations", ref, json{{"at", clock_()}});
}

bool AuthServer::is_revoked(const std::string& jti) const {
    return store_.get("revocations", jti).has_value();
}

AuthServer::Introspection AuthServer::introspect(const std::string& token_wire,
                                                 const std::string& caller_id,
                                                 const std::string& caller_proof_wire) {
    if (!faults_.disable_binding) {
        auto rs = resource_servers_.find(caller_id);
        if (rs == resource_servers_.end()) {
            throw Error("unauthorized_caller", "introspection requires a registered resource server");
        }
        std::string thumb = derive_thumbprint(rs->second);
        ProofStatus s =
            verify_sender_proof(caller_proof_wire, "POST", config_.issuer_id + "/introspect",
                                token_wire, thumb, proof_cache_, clock_(), "as:/introspect");
        if (s != ProofStatus::ACCEPTED) {
            throw Error("unauthorized_caller", "introspection caller proof rejected");
        }
    }

    TokenClaims claims;
    try {
        claims = verify_token(token_wire, verification_keys_);
    } catch (const std::exception&) {
        return Introspection{false, std::nullopt};
    }
    bool active = clock_() < claims.exp && !is_revoked(claims.jti);
    if (!active) {
        return Introspection{false, std::nullopt};
    }
    return Introspection{true, claims};
}

TokenResponse AuthServer::exchange(const std::string& incoming_token,
                                   const std::optional<std::string>& incoming_proof,
                                   const std::string& target_audience,
                                   const TransactionContext& ctx) {
    TokenClaims claims;
    try {
        claims = verify_token(incoming_token, verification_keys_);
    } catch (const Error& e) {
        throw Error("invalid_token", std::string("incoming token rejected: ") + e.what());
    }
    if (clock_() >= claims.exp) {
        throw Error("invalid_token", "incoming token expired");
    }
    if (is_revoked(claims.jti)) {
        throw Error("invalid_token", "incoming token revoked");
    }
    if (claims.cnf_thumbprint) {
        if (!incoming_proof) {
            throw Error("binding_mismatch", "sender proof required for PoP token");
        }
        ProofStatus s = verify_sender_proof(*incoming_proof, "POST",
                                            config_.issuer_id + "/exchange", incoming_token,
                                            *claims.cnf_thumbprint, proof_cache_, clock_(),
                                            "as:/exchange");
        if (s != ProofStatus::ACCEPTED) {
            throw Error(to_error_code(s), "exchange sender proof rejected");
        }
    }

    auto target = find_client(target_audience);
    if (!target) {
        throw Error("unknown_audience", "target audience not registered: " + target_audience);
    }

    std::vector<std::string> scopes;
    for (const auto& s : claims.scope) {
        if (target->registered_scopes.contains(s)) {
            scopes.push_back(s);
        }
    }
    if (scopes.empty()) {
        throw Error("invalid_scope", "no scope overlap with target audience");
    }

    auto client = find_client(claims.client_id);
    if (!client) {
        throw Error("unknown_client", "issuing client no longer registered");
    }

    TransactionContext ectx = enrich_context(ctx, claims.client_id, claims.sub);
    RiskAssessment a = assess(ectx, claims.sub);
    gate(a, ProtocolStage::TOKEN_ISSUE, claims.sub, "exchange", claims.client_id);

    TokenResponse resp =
        issue_tokens(*client, claims.sub, scopes, a.risk_class, target_audience, claims.exp);
    resp.refresh_token.reset();  // exchanged tokens do not extend the grant chain

    if (target->sealing_key) {
        Bytes sealed = seal_claims(SignedToken{resp.access_token}, *target->sealing_key);
        resp.sealed_token = b64url_encode(sealed);
    }
    audit_event(claims.client_id, "exchange", a, "allow");
    return resp;
}

}  // namespace radaa
