#include "radaa/harness.hpp"

#include <httplib.h>

#include <atomic>
#include <sstream>
#include <thread>

#include "radaa/crypto.hpp"
#include "radaa/pkce.hpp"

namespace radaa {

using nlohmann::json;

std::string to_string(ScenarioId id) {
    switch (id) {
        case ScenarioId::HONEST_FLOW: return "HONEST_FLOW";
        case ScenarioId::CLIENT_IMPERSONATION: return "CLIENT_IMPERSONATION";
        case ScenarioId::CSRF: return "CSRF";
        case ScenarioId::MIXUP: return "MIXUP";
        case ScenarioId::CORS_PROBE: return "CORS_PROBE";
        case ScenarioId::XSS_HEADER: return "XSS_HEADER";
        case ScenarioId::DDOS_PAR: return "DDOS_PAR";
        case ScenarioId::TOKEN_INJECTION: return "TOKEN_INJECTION";
        case ScenarioId::TOKEN_REPLAY: return "TOKEN_REPLAY";
    }
    return "UNKNOWN";
}

ScenarioId scenario_from_string(const std::string& s) {
    for (ScenarioId id : all_scenarios()) {
        if (to_string(id) == s) {
            return id;
        }
    }
    throw Error("unknown_scenario", "no such scenario: " + s);
}

const std::vector<ScenarioId>& all_scenarios() {
    static const std::vector<ScenarioId> kAll = {
        ScenarioId::HONEST_FLOW,       ScenarioId::CLIENT_IMPERSONATION,
        ScenarioId::CSRF,              ScenarioId::MIXUP,
        ScenarioId::CORS_PROBE,        ScenarioId::XSS_HEADER,
        ScenarioId::DDOS_PAR,          ScenarioId::TOKEN_INJECTION,
        ScenarioId::TOKEN_REPLAY,
    };
    return kAll;
}

Scenario scenario_info(ScenarioId id) {
    switch (id) {
        case ScenarioId::HONEST_FLOW:
            return {id, "legitimate client completes the full delegation flow", false};
        case ScenarioId::CLIENT_IMPERSONATION:
            return {id, "attacker presents an honest client_id without its key", true};
        case ScenarioId::CSRF:
            return {id, "attacker-injected code redeemed without the victim's verifier", true};
        case ScenarioId::MIXUP:
            return {id, "rogue issuer answers; honest client validates iss", true};
        case ScenarioId::CORS_PROBE:
            return {id, "forged-Origin requests against introspection/revocation", true};
        case ScenarioId::XSS_HEADER:
            return {id, "responses must carry CSP; script-bearing params rejected", true};
        case ScenarioId::DDOS_PAR:
            return {id, "PAR flood with external request_uri references", true};
        case ScenarioId::TOKEN_INJECTION:
            return {id, "leaked access token injected into another legitimate client", true};
        case ScenarioId::TOKEN_REPLAY:
            return {id, "captured request and sender proof replayed verbatim", true};
    }
    throw Error("unknown_scenario", "bad scenario id");
}

// ---------------------------------------------------------------------------

Config Deployment::default_harness_config() {
    Config c;
    c.issuer_id = "https://as.radaa.example";
    c.rs_id = "rs.radaa.example";
    c.ip_reputation["198.51.100.10"] = 0.0;  // honest workstation
    c.ip_reputation["203.0.113.66"] = 0.9;   // attacker infrastructure
    c.idps["idp-main"]["alice"] = IdpCredential{"correct-horse", "alice"};
    c.idps["idp-main"]["mallory"] = IdpCredential{"evil-pass", "mallory"};
    c.idps["idp-partner"]["alice@partner"] = IdpCredential{"partner-pass", "alice"};
    c.resources.push_back({"files/report.txt", "files:read", "quarterly numbers"});
    c.resources.push_back({"admin/panel", "admin:elevated", "admin controls"});
    return c;
}

Deployment::Deployment(FaultFlags faults_in, Config config_in)
    : config(std::move(config_in)),
      faults(faults_in),
      store(config.store_dir),
      audit(config.audit_log_path),
      engine(config.weights, config.thresholds, config.knn_k, config.knn_capacity),
      honest_key(KeyPair::generate_ed25519("honest-1")),
      partner_key(KeyPair::generate_ed25519("partner-1")),
      attacker_key(KeyPair::generate_ed25519("attacker-1")),
      rs_key(KeyPair::generate_ed25519("rs-1")) {
    engine.set_posture(config.posture);
    engine.set_use_knn(config.engine_use_knn);

    for (const auto& [idp_id, table] : config.idps) {
        std::map<std::string, StaticTableIdp::Entry> entries;
        for (const auto& [user, cred] : table) {
            entries[user] = StaticTableIdp::Entry{cred.secret, cred.subject};
        }
        federation.add(std::make_shared<StaticTableIdp>(idp_id, std::move(entries)));
    }

    as = std::make_unique<AuthServer>(config, store, audit, engine, federation, faults);
    as->step_up_sink = [this](const std::string&, const std::string& id,
                              const std::string& code) {
        std::lock_guard lock(codes_mu);
        delivered_codes[id] = code;
    };

    auto seed_client = [&](const std::string& id, const std::set<std::string>& scopes,
                           const KeyPair* key) {
        ClientMetadata meta;
        meta.client_id = id;
        meta.display_name = id;
        meta.redirect_uris = {"https://" + id + ".example/cb"};
        meta.scopes = scopes;
        if (key) {
            std::string nonce = as->registration_nonce(id);
            Bytes sig = crypto::ed25519_sign(key->private_key, to_bytes(nonce));
            as->register_client(meta, key->public_key, sig);
        } else {
            as->register_client(meta);
        }
    };
    seed_client(honest_client, {"files:read", "files:write", "admin:elevated"}, &honest_key);
    seed_client(tal0_client, {"files:read"}, nullptr);
    seed_client(partner_client, {"files:read"}, &partner_key);
    as->set_sealing_key(partner_client, crypto::random_bytes(32));
    seed_client(attacker_client, {"files:read"}, nullptr);

    as->register_resource_server(config.rs_id, rs_key.public_key);

    rs = std::make_unique<ResourceServer>(config.rs_id, as->verification_keys(), store, audit,
                                          engine, faults);
    for (const auto& r : config.resources) {
        rs->add_resource(ResourceDescriptor{r.path, r.required_scope, false, r.payload});
    }
    rs->set_ip_reputation(config.ip_reputation);
    rs->revoke_hook = [this](const std::string& wire) { as->revoke(wire); };

    as_http = std::make_unique<HttpAuthService>(*as, faults);
    as_host = config.as_host;
    as_port = as_http->start(as_host, config.as_port);
    rs_http = std::make_unique<HttpResourceService>(*rs, faults);
    rs_host = config.rs_host;
    rs_port = rs_http->start(rs_host, config.rs_port);
}

Deployment::~Deployment() = default;

// ---------------------------------------------------------------------------

namespace {

int64_t now_s() {
    return std::chrono::duration_cast<std::chrono::seconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

struct Evidence {
    ScenarioResult result;

    void step(const std::string& name, const std::string& observed) {
        result.evidence.emplace_back(name, observed);
    }
};

json honest_context(const Deployment& dep, const std::string& subject = "alice") {
    json ctx;
    ctx["subject"] = subject;
    ctx["ip"] = "198.51.100.10";
    ctx["geo"] = {{"lat", 40.7128}, {"lon", -74.0060}};
    ctx["device_id"] = "laptop-01";
    ctx["nids_malicious"] = false;
    return ctx;
}

json attacker_context() {
    // Residential proxy: clean enough that the risk engine alone does not
    // stop the attack, so each protocol mitigation is what gets exercised.
    json ctx;
    ctx["ip"] = "203.0.113.99";
    ctx["ip_reputation"] = 0.2;
    ctx["geo"] = {{"lat", 55.0}, {"lon", 83.0}};
    ctx["device_id"] = "botnet-07";
    ctx["nids_malicious"] = false;
    return ctx;
}

std::string err_code(const httplib::Result& r) {
    if (!r) {
        return "transport_error";
    }
    try {
        return json::parse(r->body).value("error", "http_" + std::to_string(r->status));
    } catch (...) {
        return "http_" + std::to_string(r->status);
    }
}

// Answers a step-up challenge using the code the server delivered out of
// band (the harness sink stands in for the user's second factor).
void answer_step_up(Deployment& dep, httplib::Client& as_client, const json& err) {
    std::string challenge_id = err.value("challenge_id", "");
    std::string code;
    {
        std::lock_guard lock(dep.codes_mu);
        auto it = dep.delivered_codes.find(challenge_id);
        if (it != dep.delivered_codes.end()) {
            code = it->second;
        }
    }
    json su{{"challenge_id", challenge_id}, {"answer", code}};
    as_client.Post("/step-up", su.dump(), "application/json");
}

struct HonestGrant {
    std::string access_token;
    std::optional<std::string> refresh_token;
    bool ok = false;
    std::string failure;
};

// Scripted honest client: PAR -> authorize (with iss validation) -> token,
// answering a step-up challenge if one is demanded.
HonestGrant honest_obtain_token(Deployment& dep, httplib::Client& as_client,
                                const std::string& client_id, const KeyPair* key) {
    HonestGrant grant;
    std::string verifier = random_pkce_verifier();
    PkceChallenge challenge = make_pkce_challenge(verifier);

    json par_body;
    par_body["client_id"] = client_id;
    par_body["scopes"] = {"files:read"};
    par_body["redirect_uri"] = "https://" + client_id + ".example/cb";
    par_body["pkce"] = {{"method", challenge.method}, {"challenge", challenge.challenge}};
    par_body["context"] = honest_context(dep);
    if (key) {
        par_body["proof"] =
            make_sender_proof("POST", dep.config.issuer_id + "/par", "", *key, now_s()).wire;
    }
    auto par_res = as_client.Post("/par", par_body.dump(), "application/json");
    if (!par_res || par_res->status != 201) {
        grant.failure = "par:" + err_code(par_res);
        return grant;
    }
    std::string request_uri = json::parse(par_res->body).at("request_uri");

    json auth_body;
    auth_body["request_uri"] = request_uri;
    auth_body["idp_id"] = "idp-main";
    auth_body["username"] = "alice";
    auth_body["secret"] = "correct-horse";
    auth_body["consent"] = {"files:read"};
    auth_body["context"] = honest_context(dep);
    auto auth_res = as_client.Post("/authorize", auth_body.dump(), "application/json");
    if (auth_res && auth_res->status == 401) {
        json err = json::parse(auth_res->body);
        if (err.value("error", "") == "step_up_required") {
            answer_step_up(dep, as_client, err);
            auth_res = as_client.Post("/authorize", auth_body.dump(), "application/json");
        }
    }
    if (!auth_res || auth_res->status != 200) {
        grant.failure = "authorize:" + err_code(auth_res);
        return grant;
    }
    json auth_out = json::parse(auth_res->body);

    // Mix-up mitigation lives in the client: validate the issuer.
    if (!dep.faults.disable_iss_check &&
        auth_out.value("iss", "") != dep.config.issuer_id) {
        grant.failure = "authorize:iss_mismatch";
        return grant;
    }

    json tok_body;
    tok_body["grant_type"] = "authorization_code";
    tok_body["code"] = auth_out.at("code");
    tok_body["code_verifier"] = verifier;
    tok_body["client_id"] = client_id;
    tok_body["context"] = honest_context(dep);
    if (key) {
        tok_body["proof"] =
            make_sender_proof("POST", dep.config.issuer_id + "/token", "", *key, now_s()).wire;
    }
    auto tok_res = as_client.Post("/token", tok_body.dump(), "application/json");
    if (tok_res && tok_res->status == 401) {
        json err = json::parse(tok_res->body);
        if (err.value("error", "") == "step_up_required") {
            answer_step_up(dep, as_client, err);
            if (key) {
                tok_body["proof"] =
                    make_sender_proof("POST", dep.config.issuer_id + "/token", "", *key, now_s())
                        .wire;
            }
            tok_res = as_client.Post("/token", tok_body.dump(), "application/json");
        }
    }
    if (!tok_res || tok_res->status != 200) {
        grant.failure = "token:" + err_code(tok_res);
        return grant;
    }
    json tok_out = json::parse(tok_res->body);
    grant.access_token = tok_out.at("access_token");
    if (tok_out.contains("refresh_token")) {
        grant.refresh_token = tok_out["refresh_token"].get<std::string>();
    }
    grant.ok = true;
    return grant;
}

httplib::Result get_resource(Deployment& dep, httplib::Client& rs_client,
                             const std::string& path, const std::string& token,
                             const KeyPair* proof_key, const json& ctx,
                             std::string* proof_out = nullptr) {
    httplib::Headers headers;
    if (proof_key) {
        std::string uri = dep.config.rs_id + "/resource/" + path;
        std::string proof = make_sender_proof("GET", uri, token, *proof_key, now_s()).wire;
        headers.emplace("Sender-Proof", proof);
        headers.emplace("Authorization", "PoP " + token);
        if (proof_out) {
            *proof_out = proof;
        }
    } else {
        headers.emplace("Authorization", "Bearer " + token);
    }
    headers.emplace("X-Radaa-Context", ctx.dump());
    return rs_client.Get("/resource/" + path, headers);
}

void learn(Deployment& dep, const json& ctx_json, RiskClass label) {
    TransactionContext ctx = context_from_json(ctx_json);
    dep.engine.observe(extract_features(ctx, std::nullopt), label);
}

// -- individual scenario scripts --------------------------------------------

ScenarioResult scenario_honest(Deployment& dep) {
    Evidence ev;
    httplib::Client as_client(dep.as_host, dep.as_port);
    httplib::Client rs_client(dep.rs_host, dep.rs_port);

    HonestGrant grant = honest_obtain_token(dep, as_client, dep.honest_client, &dep.honest_key);
    ev.result.attempted = 1;
    if (!grant.ok) {
        ev.step("grant", grant.failure);
        ev.result.blocked = true;
        return ev.result;
    }
    ev.step("grant", "issued");

    auto res = get_resource(dep, rs_client, "files/report.txt", grant.access_token,
                            &dep.honest_key, honest_context(dep));
    bool got_payload = res && res->status == 200 &&
                       json::parse(res->body).value("payload", "") == "quarterly numbers";
    ev.step("resource", got_payload ? "200" : err_code(res));
    ev.result.blocked = !got_payload;
    if (got_payload) {
        learn(dep, honest_context(dep), RiskClass::LOW);
    }
    return ev.result;
}

ScenarioResult scenario_client_impersonation(Deployment& dep) {
    Evidence ev;
    httplib::Client as_client(dep.as_host, dep.as_port);
    bool got_token = false;

    // The attacker claims the honest TAL1 client_id. Attempt 1: no proof at
    // all. Attempt 2: proof signed with the attacker's own key.
    for (int attempt = 0; attempt < 2; ++attempt) {
        std::string verifier = random_pkce_verifier();
        PkceChallenge challenge = make_pkce_challenge(verifier);
        json par_body;
        par_body["client_id"] = dep.honest_client;
        par_body["scopes"] = {"files:read"};
        par_body["redirect_uri"] = "https://" + dep.honest_client + ".example/cb";
        par_body["pkce"] = {{"method", challenge.method}, {"challenge", challenge.challenge}};
        par_body["context"] = attacker_context();
        if (attempt == 1) {
            par_body["proof"] = make_sender_proof("POST", dep.config.issuer_id + "/par", "",
                                                  dep.attacker_key, now_s())
                                    .wire;
        }
        ev.result.attempted++;
        auto par_res = as_client.Post("/par", par_body.dump(), "application/json");
        ev.step("par_attempt_" + std::to_string(attempt), err_code(par_res));
        if (!par_res || par_res->status != 201) {
            continue;
        }
        // PAR got through; try to drive the rest of the flow with stolen
        // resource-owner credentials.
        std::string request_uri = json::parse(par_res->body).at("request_uri");
        json auth_body;
        auth_body["request_uri"] = request_uri;
        auth_body["idp_id"] = "idp-main";
        auth_body["username"] = "mallory";
        auth_body["secret"] = "evil-pass";
        auth_body["consent"] = {"files:read"};
        auth_body["context"] = attacker_context();
        auto auth_res = as_client.Post("/authorize", auth_body.dump(), "application/json");
        if (!auth_res || auth_res->status != 200) {
            ev.step("authorize", err_code(auth_res));
            continue;
        }
        json tok_body;
        tok_body["code"] = json::parse(auth_res->body).at("code");
        tok_body["code_verifier"] = verifier;
        tok_body["client_id"] = dep.honest_client;
        tok_body["context"] = attacker_context();
        if (attempt == 1) {
            tok_body["proof"] = make_sender_proof("POST", dep.config.issuer_id + "/token", "",
                                                  dep.attacker_key, now_s())
                                    .wire;
        }
        auto tok_res = as_client.Post("/token", tok_body.dump(), "application/json");
        ev.step("token", err_code(tok_res));
        if (tok_res && tok_res->status == 200) {
            got_token = true;
        }
    }
    ev.result.blocked = !got_token;
    if (ev.result.blocked) {
        learn(dep, attacker_context(), RiskClass::HIGH);
    }
    return ev.result;
}

ScenarioResult scenario_csrf(Deployment& dep) {
    Evidence ev;
    httplib::Client as_client(dep.as_host, dep.as_port);

    // The attacker runs a flow of their own (TAL0 client needs no key) and
    // obtains a code bound to the ATTACKER's PKCE challenge...
    std::string attacker_verifier = random_pkce_verifier();
    PkceChallenge attacker_challenge = make_pkce_challenge(attacker_verifier);
    json par_body;
    par_body["client_id"] = dep.tal0_client;
    par_body["scopes"] = {"files:read"};
    par_body["redirect_uri"] = "https://" + dep.tal0_client + ".example/cb";
    par_body["pkce"] = {{"method", attacker_challenge.method},
                        {"challenge", attacker_challenge.challenge}};
    par_body["context"] = attacker_context();
    auto par_res = as_client.Post("/par", par_body.dump(), "application/json");
    if (!par_res || par_res->status != 201) {
        ev.step("attacker_par", err_code(par_res));
        ev.result.attempted = 1;
        ev.result.blocked = true;
        return ev.result;
    }
    json auth_body;
    auth_body["request_uri"] = json::parse(par_res->body).at("request_uri");
    auth_body["idp_id"] = "idp-main";
    auth_body["username"] = "mallory";
    auth_body["secret"] = "evil-pass";
    auth_body["consent"] = {"files:read"};
    auth_body["context"] = attacker_context();
    auto auth_res = as_client.Post("/authorize", auth_body.dump(), "application/json");
    if (auth_res && auth_res->status == 401) {
        json err = json::parse(auth_res->body);
        if (err.value("error", "") == "step_up_required") {
            // The attacker is a real (low-trust) user of their own account, so
            // they can answer their own step-up. The mitigation under test is
            // the verifier check at redemption, not the attacker's login.
            answer_step_up(dep, as_client, err);
            auth_res = as_client.Post("/authorize", auth_body.dump(), "application/json");
        }
    }
    if (!auth_res || auth_res->status != 200) {
        ev.step("attacker_authorize", err_code(auth_res));
        ev.result.attempted = 1;
        ev.result.blocked = true;
        return ev.result;
    }
    std::string injected_code = json::parse(auth_res->body).at("code");

    // ...then injects that code into the victim's session. The victim's
    // client redeems it with the VICTIM's verifier.
    std::string victim_verifier = random_pkce_verifier();
    json tok_body;
    tok_body["code"] = injected_code;
    tok_body["code_verifier"] = victim_verifier;
    tok_body["client_id"] = dep.tal0_client;
    tok_body["context"] = honest_context(dep);
    ev.result.attempted = 1;
    auto tok_res = as_client.Post("/token", tok_body.dump(), "application/json");
    if (tok_res && tok_res->status == 401) {
        json err = json::parse(tok_res->body);
        if (err.value("error", "") == "step_up_required") {
            // The account under redemption is the attacker's own, so the
            // attacker relays the step-up answer to keep the attack alive.
            answer_step_up(dep, as_client, err);
            tok_res = as_client.Post("/token", tok_body.dump(), "application/json");
        }
    }
    ev.step("victim_redeems_injected_code", err_code(tok_res));
    ev.result.blocked = !(tok_res && tok_res->status == 200);
    if (ev.result.blocked) {
        learn(dep, attacker_context(), RiskClass::HIGH);
    }
    return ev.result;
}

ScenarioResult scenario_mixup(Deployment& dep) {
    Evidence ev;

    // A rogue authorization server stands up and answers the honest client's
    // authorization request with its own code and issuer id, hoping the
    // client forwards the code + verifier to it afterwards.
    httplib::Server rogue;
    std::atomic<bool> captured_verifier{false};
    rogue.Post("/authorize", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(json{{"code", "rogue-code"}, {"iss", "https://evil.example"}}.dump(),
                        "application/json");
    });
    rogue.Post("/token", [&](const httplib::Request& req, httplib::Response& res) {
        json body = json::parse(req.body);
        if (!body.value("code_verifier", "").empty()) {
            captured_verifier = true;  // the attack's success condition
        }
        res.set_content(json{{"error", "server_error"}}.dump(), "application/json");
    });
    int rogue_port = rogue.bind_to_any_port("127.0.0.1");
    std::thread rogue_thread([&] { rogue.listen_after_bind(); });
    rogue.wait_until_ready();

    // Honest client starts at the real AS but its authorize leg is hijacked
    // to the rogue server.
    httplib::Client as_client(dep.as_host, dep.as_port);
    httplib::Client rogue_client("127.0.0.1", rogue_port);

    std::string verifier = random_pkce_verifier();
    PkceChallenge challenge = make_pkce_challenge(verifier);
    json par_body;
    par_body["client_id"] = dep.honest_client;
    par_body["scopes"] = {"files:read"};
    par_body["redirect_uri"] = "https://" + dep.honest_client + ".example/cb";
    par_body["pkce"] = {{"method", challenge.method}, {"challenge", challenge.challenge}};
    par_body["context"] = honest_context(dep);
    par_body["proof"] =
        make_sender_proof("POST", dep.config.issuer_id + "/par", "", dep.honest_key, now_s())
            .wire;
    as_client.Post("/par", par_body.dump(), "application/json");

    auto auth_res = rogue_client.Post("/authorize", json::object().dump(), "application/json");
    ev.result.attempted = 1;
    bool client_aborted = true;
    if (auth_res && auth_res->status == 200) {
        json out = json::parse(auth_res->body);
        bool iss_ok = out.value("iss", "") == dep.config.issuer_id;
        if (dep.faults.disable_iss_check || iss_ok) {
            // Client believes the response; sends code + verifier onward.
            client_aborted = false;
            json tok{{"code", out.at("code")}, {"code_verifier", verifier},
                     {"client_id", dep.honest_client}};
            rogue_client.Post("/token", tok.dump(), "application/json");
        }
    }
    ev.step("iss_validation", client_aborted ? "rejected_rogue_issuer" : "accepted");
    rogue.stop();
    rogue_thread.join();

    ev.result.blocked = !captured_verifier.load();
    if (ev.result.blocked) {
        learn(dep, attacker_context(), RiskClass::HIGH);
    }
    return ev.result;
}

bool has_permissive_cors(const httplib::Result& r) {
    if (!r) {
        return false;
    }
    return r->has_header("Access-Control-Allow-Origin") ||
           r->has_header("Access-Control-Allow-Methods") ||
           r->has_header("Access-Control-Allow-Headers") ||
           r->has_header("Access-Control-Allow-Credentials");
}

ScenarioResult scenario_cors_probe(Deployment& dep) {
    Evidence ev;
    httplib::Client as_client(dep.as_host, dep.as_port);

    HonestGrant grant = honest_obtain_token(dep, as_client, dep.honest_client, &dep.honest_key);
    if (!grant.ok) {
        ev.step("setup", grant.failure);
        ev.result.blocked = false;  // cannot even establish the baseline
        return ev.result;
    }

    bool attacker_gained = false;

    // Forged-Origin introspection without a resource-server proof.
    httplib::Headers forged{{"Origin", "https://evil.example"}};
    json body{{"token", grant.access_token}};
    ev.result.attempted++;
    auto res = as_client.Post("/introspect", forged, body.dump(), "application/json");
    ev.step("introspect_forged_origin", err_code(res));
    if (res && res->status == 200 && json::parse(res->body).value("active", false)) {
        attacker_gained = true;
    }
    if (has_permissive_cors(res)) {
        attacker_gained = true;
    }

    // Preflight probe: no permissive headers may come back.
    ev.result.attempted++;
    auto pre = as_client.Options("/introspect", forged);
    ev.step("preflight", pre ? std::to_string(pre->status) : "transport_error");
    if (has_permissive_cors(pre)) {
        attacker_gained = true;
    }

    // Forged-Origin revocation response must also stay non-permissive.
    ev.result.attempted++;
    auto rev = as_client.Post("/revoke", forged, json{{"token", "nonexistent"}}.dump(),
                              "application/json");
    ev.step("revoke_forged_origin", rev ? std::to_string(rev->status) : "transport_error");
    if (has_permissive_cors(rev)) {
        attacker_gained = true;
    }

    ev.result.blocked = !attacker_gained;
    if (ev.result.blocked) {
        learn(dep, attacker_context(), RiskClass::HIGH);
    }
    return ev.result;
}

ScenarioResult scenario_xss_header(Deployment& dep) {
    Evidence ev;
    httplib::Client as_client(dep.as_host, dep.as_port);
    httplib::Client rs_client(dep.rs_host, dep.rs_port);

    bool attack_succeeded = false;
    auto check_csp = [&](const std::string& name, const httplib::Result& r) {
        ev.result.attempted++;
        bool has = r && r->get_header_value("Content-Security-Policy") == "default-src 'none'";
        ev.step(name, has ? "csp_present" : "csp_missing");
        if (!has) {
            attack_succeeded = true;
        }
    };

    check_csp("par_error", as_client.Post("/par", "{}", "application/json"));
    check_csp("token_error", as_client.Post("/token", "{}", "application/json"));
    check_csp("introspect_error", as_client.Post("/introspect", "{}", "application/json"));
    check_csp("rs_error", rs_client.Get("/resource/files/report.txt"));

    // Input validation: script-bearing scope parameter must be rejected.
    json par_body;
    par_body["client_id"] = dep.tal0_client;
    par_body["scopes"] = {"<script>alert(1)</script>"};
    par_body["redirect_uri"] = "https://" + dep.tal0_client + ".example/cb";
    par_body["pkce"] = {{"method", "S256"}, {"challenge", std::string(43, 'x')}};
    ev.result.attempted++;
    auto res = as_client.Post("/par", par_body.dump(), "application/json");
    ev.step("script_scope", err_code(res));
    if (res && res->status == 201) {
        attack_succeeded = true;
    }

    ev.result.blocked = !attack_succeeded;
    if (ev.result.blocked) {
        learn(dep, attacker_context(), RiskClass::HIGH);
    }
    return ev.result;
}

ScenarioResult scenario_ddos_par(Deployment& dep) {
    Evidence ev;
    constexpr int kFlood = 200;
    constexpr int kThreads = 8;

    std::atomic<int> accepted{0};
    std::atomic<int> rejected{0};
    std::vector<std::thread> threads;
    for (int t = 0; t < kThreads; ++t) {
        threads.emplace_back([&, t] {
            httplib::Client c(dep.as_host, dep.as_port);
            for (int i = t; i < kFlood; i += kThreads) {
                std::string verifier = random_pkce_verifier();
                PkceChallenge challenge = make_pkce_challenge(verifier);
                json body;
                body["client_id"] = dep.attacker_client;
                body["scopes"] = {"files:read"};
                body["redirect_uri"] = "https://" + dep.attacker_client + ".example/cb";
                body["pkce"] = {{"method", challenge.method},
                                {"challenge", challenge.challenge}};
                body["context"] = attacker_context();
                if (i % 4 == 0) {
                    // Externally supplied request_uri reference.
                    body["request_uri"] = "https://evil.example/payload";
                }
                auto res = c.Post("/par", body.dump(), "application/json");
                if (res && res->status == 201) {
                    accepted++;
                } else {
                    rejected++;
                }
            }
        });
    }
    for (auto& t : threads) {
        t.join();
    }
    ev.result.attempted = kFlood;
    ev.step("flood_accepted", std::to_string(accepted.load()));
    ev.step("flood_rejected", std::to_string(rejected.load()));

    // Resilience means the honest client still completes mid-attack.
    httplib::Client as_client(dep.as_host, dep.as_port);
    httplib::Client rs_client(dep.rs_host, dep.rs_port);
    HonestGrant grant = honest_obtain_token(dep, as_client, dep.honest_client, &dep.honest_key);
    bool honest_ok = false;
    if (grant.ok) {
        auto res = get_resource(dep, rs_client, "files/report.txt", grant.access_token,
                                &dep.honest_key, honest_context(dep));
        honest_ok = res && res->status == 200;
    }
    ev.step("honest_flow", honest_ok ? "completed" : ("failed:" + grant.failure));

    bool attack_succeeded =
        accepted.load() > dep.config.rate_limit_par_per_min || !honest_ok;
    ev.result.blocked = !attack_succeeded;
    if (ev.result.blocked) {
        learn(dep, attacker_context(), RiskClass::HIGH);
    }
    return ev.result;
}

ScenarioResult scenario_token_injection(Deployment& dep) {
    Evidence ev;
    httplib::Client as_client(dep.as_host, dep.as_port);
    httplib::Client rs_client(dep.rs_host, dep.rs_port);

    HonestGrant grant = honest_obtain_token(dep, as_client, dep.honest_client, &dep.honest_key);
    if (!grant.ok) {
        ev.step("setup", grant.failure);
        ev.result.blocked = false;
        return ev.result;
    }
    std::string leaked = grant.access_token;
    bool attack_succeeded = false;

    // Attempt (a): another legitimate client (partner) presents the leaked
    // token, signing the sender proof with its own key.
    ev.result.attempted++;
    auto res_a = get_resource(dep, rs_client, "files/report.txt", leaked, &dep.partner_key,
                              honest_context(dep));
    ev.step("inject_with_partner_key", err_code(res_a));
    if (res_a && res_a->status == 200) {
        attack_succeeded = true;
    }

    // Attempt (b): exchange the token for the partner audience, then present
    // the partner-audience token at this resource server.
    json ex_body;
    ex_body["token"] = leaked;
    ex_body["proof"] = make_sender_proof("POST", dep.config.issuer_id + "/exchange", leaked,
                                         dep.honest_key, now_s())
                           .wire;
    ex_body["target_audience"] = dep.partner_client;
    ex_body["context"] = honest_context(dep);
    auto ex_res = as_client.Post("/exchange", ex_body.dump(), "application/json");
    if (ex_res && ex_res->status == 200) {
        std::string foreign_aud_token = json::parse(ex_res->body).at("access_token");
        ev.result.attempted++;
        auto res_b = get_resource(dep, rs_client, "files/report.txt", foreign_aud_token,
                                  &dep.honest_key, honest_context(dep));
        ev.step("inject_foreign_audience", err_code(res_b));
        if (res_b && res_b->status == 200) {
            attack_succeeded = true;
        }
    } else {
        ev.step("exchange", err_code(ex_res));
    }

    ev.result.blocked = !attack_succeeded;
    if (ev.result.blocked) {
        learn(dep, attacker_context(), RiskClass::HIGH);
    }
    return ev.result;
}

ScenarioResult scenario_token_replay(Deployment& dep) {
    Evidence ev;
    httplib::Client as_client(dep.as_host, dep.as_port);
    httplib::Client rs_client(dep.rs_host, dep.rs_port);

    HonestGrant grant = honest_obtain_token(dep, as_client, dep.honest_client, &dep.honest_key);
    if (!grant.ok) {
        ev.step("setup", grant.failure);
        ev.result.blocked = false;
        return ev.result;
    }
    std::string proof;
    auto first = get_resource(dep, rs_client, "files/report.txt", grant.access_token,
                              &dep.honest_key, honest_context(dep), &proof);
    if (!first || first->status != 200) {
        ev.step("setup", err_code(first));
        ev.result.blocked = false;
        return ev.result;
    }
    ev.step("original_request", "200");

    // The attacker captured the whole request and replays it byte-for-byte.
    httplib::Headers headers{{"Authorization", "PoP " + grant.access_token},
                             {"Sender-Proof", proof},
                             {"X-Radaa-Context", attacker_context().dump()}};
    ev.result.attempted = 1;
    auto replay = rs_client.Get("/resource/files/report.txt", headers);
    ev.step("replay", err_code(replay));
    bool attack_succeeded = replay && replay->status == 200;

    ev.result.blocked = !attack_succeeded;
    if (ev.result.blocked) {
        learn(dep, attacker_context(), RiskClass::HIGH);
    }
    return ev.result;
}

}  // namespace

ScenarioResult run_scenario(ScenarioId id, Deployment& dep) {
    ScenarioResult r;
    switch (id) {
        case ScenarioId::HONEST_FLOW: r = scenario_honest(dep); break;
        case ScenarioId::CLIENT_IMPERSONATION: r = scenario_client_impersonation(dep); break;
        case ScenarioId::CSRF: r = scenario_csrf(dep); break;
        case ScenarioId::MIXUP: r = scenario_mixup(dep); break;
        case ScenarioId::CORS_PROBE: r = scenario_cors_probe(dep); break;
        case ScenarioId::XSS_HEADER: r = scenario_xss_header(dep); break;
        case ScenarioId::DDOS_PAR: r = scenario_ddos_par(dep); break;
        case ScenarioId::TOKEN_INJECTION: r = scenario_token_injection(dep); break;
        case ScenarioId::TOKEN_REPLAY: r = scenario_token_replay(dep); break;
    }
    r.id = id;
    return r;
}

ResilienceMatrix run_all(FaultFlags faults) {
    ResilienceMatrix m;
    m.pass = true;
    for (ScenarioId id : all_scenarios()) {
        Deployment dep(faults);  // fresh stores per scenario
        ScenarioResult r = run_scenario(id, dep);
        if (r.blocked != scenario_info(id).expected_blocked) {
            m.pass = false;
        }
        m.results.push_back(std::move(r));
    }
    return m;
}

std::string render_matrix(const ResilienceMatrix& m) {
    std::ostringstream out;
    out << "THREAT VECTOR         EXPECTED   OBSERVED   RESULT\n";
    out << "-----------------------------------------------------\n";
    for (const auto& r : m.results) {
        Scenario info = scenario_info(r.id);
        bool ok = r.blocked == info.expected_blocked;
        std::string name = to_string(r.id);
        name.resize(22, ' ');
        out << name << (info.expected_blocked ? "blocked " : "allowed ") << "  "
            << (r.blocked ? "blocked " : "allowed ") << "  " << (ok ? "PASS" : "FAIL") << "\n";
    }
    out << "-----------------------------------------------------\n";
    out << "MATRIX: " << (m.pass ? "PASS" : "FAIL") << "\n";
    return out.str();
}

json matrix_to_json(const ResilienceMatrix& m) {
    json results = json::array();
    for (const auto& r : m.results) {
        Scenario info = scenario_info(r.id);
        json evidence = json::array();
        for (const auto& [step, observed] : r.evidence) {
            evidence.push_back({{"step", step}, {"observed", observed}});
        }
        results.push_back({{"id", to_string(r.id)},
                           {"description", info.description},
                           {"expected_blocked", info.expected_blocked},
                           {"attempted", r.attempted},
                           {"blocked", r.blocked},
                           {"pass", r.blocked == info.expected_blocked},
                           {"evidence", evidence}});
    }
    return json{{"results", results}, {"pass", m.pass}};
}

}  // namespace radaa
