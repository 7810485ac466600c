#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>
#include <memory>

#include "radaa/auth_server.hpp"
#include "radaa/crypto.hpp"

using namespace radaa;
using nlohmann::json;

namespace {

constexpr int64_t kEpoch = 1'700'000'000;

struct Fixture {
    int64_t now = kEpoch;
    Config cfg;
    Store store;
    AuditLog audit;
    AdaptiveEngine engine;
    FederationRegistry fed;
    std::unique_ptr<AuthServer> as;

    KeyPair app_key = KeyPair::generate_ed25519("app-key");
    KeyPair rs_key = KeyPair::generate_ed25519("rs-key");

    std::map<std::string, std::pair<std::string, std::string>> challenges;  // id -> (subject, code)

    explicit Fixture(FaultFlags faults = {}) {
        cfg.issuer_id = "https://as.example";
        cfg.rs_id = "rs.example";
        cfg.ip_reputation = {{"198.51.100.10", 0.0}, {"203.0.113.66", 0.9}};
        fed.add(std::make_shared<StaticTableIdp>(
            "idp-main", std::map<std::string, StaticTableIdp::Entry>{
                            {"alice", {"correct-horse", "alice"}},
                            {"mallory", {"evil-pass", "mallory"}}}));
        fed.add(std::make_shared<StaticTableIdp>(
            "idp-partner", std::map<std::string, StaticTableIdp::Entry>{
                               {"alice@partner", {"partner-pass", "alice"}}}));
        as = std::make_unique<AuthServer>(cfg, store, audit, engine, fed, faults,
                                          [this] { return now; });
        as->step_up_sink = [this](const std::string& subject, const std::string& id,
                                  const std::string& code) {
            challenges[id] = {subject, code};
        };
        as->register_resource_server("rs.example", rs_key.public_key);

        register_keyed("app", app_key, {"files:read", "files:write", "admin:elevated"});
        as->register_client(
            ClientMetadata{"plain", "Plain", {"https://plain.example/cb"}, {"files:read"}});
    }

    ClientRecord register_keyed(const std::string& id, const KeyPair& key,
                                std::set<std::string> scopes) {
        std::string nonce = as->registration_nonce(id);
        Bytes sig = crypto::ed25519_sign(key.private_key, to_bytes(nonce));
        return as->register_client(
            ClientMetadata{id, id, {"https://" + id + ".example/cb"}, std::move(scopes)},
            key.public_key, sig);
    }

    TransactionContext good_ctx() const {
        TransactionContext ctx;
        ctx.ip = "198.51.100.10";
        ctx.geo = {40.7, -74.0};
        ctx.device_id = "laptop-1";
        ctx.timestamp = now;
        return ctx;
    }

    std::string client_proof(const KeyPair& key, const std::string& endpoint,
                             const std::string& token_wire = "") {
        return make_sender_proof("POST", cfg.issuer_id + endpoint, token_wire, key, now).wire;
    }

    AuthServer::ParResult push(const std::string& client_id, const std::string& verifier,
                               const KeyPair* key = nullptr,
                               std::set<std::string> scopes = {"files:read"}) {
        std::optional<std::string> proof;
        if (key) {
            proof = client_proof(*key, "/par");
        }
        return as->par(client_id, proof, scopes, "https://" + client_id + ".example/cb",
                       make_pkce_challenge(verifier), good_ctx());
    }

    TokenResponse full_grant(const std::string& client_id, const KeyPair* key,
                             std::set<std::string> scopes = {"files:read"}) {
        std::string verifier = random_pkce_verifier();
        auto par = push(client_id, verifier, key, scopes);
        auto auth = as->authorize(par.request_uri, "idp-main", "alice", "correct-horse", scopes,
                                  good_ctx());
        std::optional<std::string> proof;
        if (key) {
            proof = client_proof(*key, "/token");
        }
        return as->token(auth.code, verifier, client_id, proof, good_ctx());
    }
};

std::string error_code(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

}  // namespace

TEST_CASE("registration grants tal 1 only for a proven key") {
    Fixture fx;

    SUBCASE("valid nonce signature") {
        KeyPair k = KeyPair::generate_ed25519("k");
        ClientRecord rec = fx.register_keyed("keyed", k, {"files:read"});
        CHECK(rec.tal == 1);
        CHECK(rec.public_key == k.public_key);
    }
    SUBCASE("wrong key degrades to tal 0") {
        KeyPair k = KeyPair::generate_ed25519("k");
        KeyPair other = KeyPair::generate_ed25519("other");
        std::string nonce = fx.as->registration_nonce("degraded");
        Bytes sig = crypto::ed25519_sign(other.private_key, to_bytes(nonce));
        ClientRecord rec = fx.as->register_client(
            ClientMetadata{"degraded", "d", {"https://d.example/cb"}, {"files:read"}},
            k.public_key, sig);
        CHECK(rec.tal == 0);
        CHECK_FALSE(rec.public_key.has_value());
    }
    SUBCASE("no nonce requested means tal 0") {
        KeyPair k = KeyPair::generate_ed25519("k");
        Bytes sig = crypto::ed25519_sign(k.private_key, to_bytes("whatever"));
        ClientRecord rec = fx.as->register_client(
            ClientMetadata{"nononce", "n", {"https://n.example/cb"}, {"files:read"}},
            k.public_key, sig);
        CHECK(rec.tal == 0);
    }
    SUBCASE("metadata validation") {
        CHECK(error_code([&] {
                  fx.as->register_client(ClientMetadata{"x", "x", {}, {"files:read"}});
              }) == "invalid_client_metadata");
        CHECK(error_code([&] {
                  fx.as->register_client(
                      ClientMetadata{"x", "x", {"https://x.example/cb"}, {}});
              }) == "invalid_client_metadata");
        CHECK(error_code([&] {
                  fx.as->register_client(
                      ClientMetadata{"x", "x", {"relative/cb"}, {"files:read"}});
              }) == "invalid_redirect");
        CHECK(error_code([&] {
                  fx.as->register_client(
                      ClientMetadata{"x", "x", {"https://x.example/cb#frag"}, {"files:read"}});
              }) == "invalid_redirect");
    }
}

TEST_CASE("par validation") {
    Fixture fx;
    std::string v = random_pkce_verifier();

    CHECK(error_code([&] { fx.push("ghost", v); }) == "unknown_client");
    CHECK(error_code([&] {
              PkceChallenge plain = make_pkce_challenge(v);
              plain.method = "plain";
              fx.as->par("plain", std::nullopt, {"files:read"}, "https://plain.example/cb",
                         plain, fx.good_ctx());
          }) == "invalid_request");
    CHECK(error_code([&] {
              fx.as->par("plain", std::nullopt, {"files:read"}, "https://evil.example/cb",
                         make_pkce_challenge(v), fx.good_ctx());
          }) == "invalid_redirect");
    CHECK(error_code([&] { fx.push("plain", v, nullptr, {"admin:elevated"}); }) ==
          "invalid_scope");
    CHECK(error_code([&] { fx.push("plain", v, nullptr, {}); }) == "invalid_request");
    CHECK(error_code([&] {
              fx.as->par("plain", std::nullopt, {"files:read"}, "https://plain.example/cb",
                         make_pkce_challenge(v), fx.good_ctx(), std::nullopt,
                         std::string("urn:radaa:request:smuggled"));
          }) == "invalid_request");

    auto par = fx.push("plain", v);
    CHECK(par.request_uri.rfind("urn:radaa:request:", 0) == 0);
    CHECK(par.expires_in == 60);
}

TEST_CASE("request_uri is one-time and short-lived") {
    Fixture fx;
    std::string v = random_pkce_verifier();

    SUBCASE("single use") {
        auto par = fx.push("plain", v);
        fx.as->authorize(par.request_uri, "idp-main", "alice", "correct-horse", {"files:read"},
                         fx.good_ctx());
        CHECK(error_code([&] {
                  fx.as->authorize(par.request_uri, "idp-main", "alice", "correct-horse",
                                   {"files:read"}, fx.good_ctx());
              }) == "one_time_use");
    }
    SUBCASE("expires after 60 seconds") {
        auto par = fx.push("plain", v);
        fx.now += 61;
        CHECK(error_code([&] {
                  fx.as->authorize(par.request_uri, "idp-main", "alice", "correct-horse",
                                   {"files:read"}, fx.good_ctx());
              }) == "expired_request_uri");
    }
    SUBCASE("unknown reference") {
        CHECK(error_code([&] {
                  fx.as->authorize("urn:radaa:request:ghost", "idp-main", "alice",
                                   "correct-horse", {"files:read"}, fx.good_ctx());
              }) == "invalid_request_uri");
    }
}

TEST_CASE("authorize authenticates through the federation and honors consent") {
    Fixture fx;
    std::string v = random_pkce_verifier();

    SUBCASE("bad credentials") {
        auto par = fx.push("plain", v);
        CHECK(error_code([&] {
                  fx.as->authorize(par.request_uri, "idp-main", "alice", "wrong",
                                   {"files:read"}, fx.good_ctx());
              }) == "authentication_failed");
        CHECK(error_code([&] {
                  fx.as->authorize(par.request_uri, "idp-nope", "alice", "correct-horse",
                                   {"files:read"}, fx.good_ctx());
              }) == "unknown_idp");
    }
    SUBCASE("consent cannot exceed the pushed scopes") {
        auto par = fx.push("app", v, &fx.app_key, {"files:read"});
        CHECK(error_code([&] {
                  fx.as->authorize(par.request_uri, "idp-main", "alice", "correct-horse",
                                   {"files:read", "files:write"}, fx.good_ctx());
              }) == "invalid_scope");
        CHECK(error_code([&] {
                  fx.as->authorize(par.request_uri, "idp-main", "alice", "correct-horse", {},
                                   fx.good_ctx());
              }) == "consent_required");
    }
    SUBCASE("result carries the issuer and echoes state") {
        auto par = fx.as->par("plain", std::nullopt, {"files:read"}, "https://plain.example/cb",
                              make_pkce_challenge(v), fx.good_ctx(), std::string("xyzzy"));
        auto auth = fx.as->authorize(par.request_uri, "idp-main", "alice", "correct-horse",
                                     {"files:read"}, fx.good_ctx());
        CHECK(auth.iss == "https://as.example");
        CHECK(auth.state == "xyzzy");
    }
    SUBCASE("two identity providers map to the same local subject") {
        auto par1 = fx.push("plain", v);
        auto a1 = fx.as->authorize(par1.request_uri, "idp-main", "alice", "correct-horse",
                                   {"files:read"}, fx.good_ctx());
        std::string v2 = random_pkce_verifier();
        auto par2 = fx.push("plain", v2);
        auto a2 = fx.as->authorize(par2.request_uri, "idp-partner", "alice@partner",
                                   "partner-pass", {"files:read"}, fx.good_ctx());
        TokenClaims c1 = verify_token(
            fx.as->token(a1.code, v, "plain", std::nullopt, fx.good_ctx()).access_token,
            fx.as->verification_keys());
        TokenClaims c2 = verify_token(
            fx.as->token(a2.code, v2, "plain", std::nullopt, fx.good_ctx()).access_token,
            fx.as->verification_keys());
        CHECK(c1.sub == "alice");
        CHECK(c2.sub == "alice");
    }
}

TEST_CASE("token issuance differs by trust assurance level") {
    Fixture fx;

    SUBCASE("tal1 gets a bound pop token with a refresh token") {
        TokenResponse r = fx.full_grant("app", &fx.app_key);
        CHECK(r.token_type == "radaa-pop");
        CHECK(r.expires_in == 900);
        CHECK(r.refresh_token.has_value());
        TokenClaims c = verify_token(r.access_token, fx.as->verification_keys());
        CHECK(c.tal == 1);
        CHECK(c.cnf_thumbprint == derive_thumbprint(fx.app_key.public_key));
        CHECK(c.aud == "rs.example");
        CHECK(c.iss == "https://as.example");
        CHECK(c.scope == std::vector<std::string>{"files:read"});
    }
    SUBCASE("tal0 gets a short bearer token and no refresh") {
        TokenResponse r = fx.full_grant("plain", nullptr);
        CHECK(r.token_type == "bearer");
        CHECK(r.expires_in == 300);
        CHECK_FALSE(r.refresh_token.has_value());
        TokenClaims c = verify_token(r.access_token, fx.as->verification_keys());
        CHECK(c.tal == 0);
        CHECK_FALSE(c.cnf_thumbprint.has_value());
    }
    SUBCASE("tal0 never receives elevated scopes") {
        fx.as->register_client(ClientMetadata{
            "lowpriv", "l", {"https://lowpriv.example/cb"}, {"files:read", "admin:elevated"}});
        TokenResponse r = fx.full_grant("lowpriv", nullptr, {"files:read", "admin:elevated"});
        CHECK(r.granted_scopes == std::vector<std::string>{"files:read"});
        CHECK(error_code([&] { fx.full_grant("lowpriv", nullptr, {"admin:elevated"}); }) ==
              "invalid_scope");
    }
}

TEST_CASE("token endpoint rejections") {
    Fixture fx;
    std::string v = random_pkce_verifier();

    SUBCASE("pkce verifier must match") {
        auto par = fx.push("plain", v);
        auto auth = fx.as->authorize(par.request_uri, "idp-main", "alice", "correct-horse",
                                     {"files:read"}, fx.good_ctx());
        CHECK(error_code([&] {
                  fx.as->token(auth.code, random_pkce_verifier(), "plain", std::nullopt,
                               fx.good_ctx());
              }) == "invalid_grant");
        // the failed attempt did not burn the code
        CHECK_NOTHROW(fx.as->token(auth.code, v, "plain", std::nullopt, fx.good_ctx()));
    }
    SUBCASE("code is single-use") {
        auto par = fx.push("plain", v);
        auto auth = fx.as->authorize(par.request_uri, "idp-main", "alice", "correct-horse",
                                     {"files:read"}, fx.good_ctx());
        fx.as->token(auth.code, v, "plain", std::nullopt, fx.good_ctx());
        CHECK(error_code([&] {
                  fx.as->token(auth.code, v, "plain", std::nullopt, fx.good_ctx());
              }) == "invalid_grant");
    }
    SUBCASE("code expires after 60 seconds") {
        auto par = fx.push("plain", v);
        auto auth = fx.as->authorize(par.request_uri, "idp-main", "alice", "correct-horse",
                                     {"files:read"}, fx.good_ctx());
        fx.now += 61;
        CHECK(error_code([&] {
                  fx.as->token(auth.code, v, "plain", std::nullopt, fx.good_ctx());
              }) == "invalid_grant");
    }
    SUBCASE("code is bound to the requesting client") {
        auto par = fx.push("plain", v);
        auto auth = fx.as->authorize(par.request_uri, "idp-main", "alice", "correct-horse",
                                     {"files:read"}, fx.good_ctx());
        CHECK(error_code([&] {
                  fx.as->token(auth.code, v, "app", fx.client_proof(fx.app_key, "/token"),
                               fx.good_ctx());
              }) == "invalid_grant");
    }
    SUBCASE("unknown code") {
        CHECK(error_code([&] {
                  fx.as->token("nope", v, "plain", std::nullopt, fx.good_ctx());
              }) == "invalid_grant");
    }
}

TEST_CASE("tal1 endpoints demand a key-possession proof") {
    Fixture fx;
    std::string v = random_pkce_verifier();
    auto par = fx.push("app", v, &fx.app_key);
    auto auth = fx.as->authorize(par.request_uri, "idp-main", "alice", "correct-horse",
                                 {"files:read"}, fx.good_ctx());

    SUBCASE("missing proof") {
        CHECK(error_code([&] {
                  fx.as->token(auth.code, v, "app", std::nullopt, fx.good_ctx());
              }) == "binding_mismatch");
    }
    SUBCASE("proof from the wrong key") {
        KeyPair rogue = KeyPair::generate_ed25519("rogue");
        CHECK(error_code([&] {
                  fx.as->token(auth.code, v, "app", fx.client_proof(rogue, "/token"),
                               fx.good_ctx());
              }) == "binding_mismatch");
    }
    SUBCASE("proof for the wrong endpoint") {
        CHECK(error_code([&] {
                  fx.as->token(auth.code, v, "app", fx.client_proof(fx.app_key, "/par"),
                               fx.good_ctx());
              }) == "method_uri_mismatch");
    }
    SUBCASE("par also requires the proof") {
        CHECK(error_code([&] { fx.push("app", random_pkce_verifier(), nullptr); }) ==
              "binding_mismatch");
    }
    SUBCASE("binding fault waives the requirement") {
        Fixture unbound(FaultFlags::with_disabled("binding"));
        auto par2 = unbound.push("app", v, nullptr);
        auto auth2 = unbound.as->authorize(par2.request_uri, "idp-main", "alice",
                                           "correct-horse", {"files:read"}, unbound.good_ctx());
        CHECK_NOTHROW(unbound.as->token(auth2.code, v, "app", std::nullopt, unbound.good_ctx()));
    }
}

TEST_CASE("refresh rotation revokes the chain on reuse") {
    Fixture fx;
    TokenResponse first = fx.full_grant("app", &fx.app_key);
    REQUIRE(first.refresh_token.has_value());

    TokenResponse second = fx.as->refresh(*first.refresh_token, "app",
                                          fx.client_proof(fx.app_key, "/refresh"), fx.good_ctx());
    REQUIRE(second.refresh_token.has_value());
    CHECK(second.access_token != first.access_token);
    CHECK(*second.refresh_token != *first.refresh_token);

    auto rs_proof = [&](const std::string& tok) {
        return make_sender_proof("POST", fx.cfg.issuer_id + "/introspect", tok, fx.rs_key,
                                 fx.now)
            .wire;
    };
    CHECK(fx.as->introspect(second.access_token, "rs.example", rs_proof(second.access_token))
              .active);

    // replaying the rotated token kills the whole family, new tokens included
    CHECK(error_code([&] {
              fx.as->refresh(*first.refresh_token, "app",
                             fx.client_proof(fx.app_key, "/refresh"), fx.good_ctx());
          }) == "invalid_grant");
    CHECK_FALSE(
        fx.as->introspect(second.access_token, "rs.example", rs_proof(second.access_token))
            .active);
    CHECK(error_code([&] {
              fx.as->refresh(*second.refresh_token, "app",
                             fx.client_proof(fx.app_key, "/refresh"), fx.good_ctx());
          }) == "invalid_grant");
}

TEST_CASE("refresh token expiry and client binding") {
    Fixture fx;
    TokenResponse r = fx.full_grant("app", &fx.app_key);

    SUBCASE("expires after eight hours") {
        fx.now += 28801;
        CHECK(error_code([&] {
                  fx.as->refresh(*r.refresh_token, "app",
                                 fx.client_proof(fx.app_key, "/refresh"), fx.good_ctx());
              }) == "invalid_grant");
    }
    SUBCASE("wrong client") {
        CHECK(error_code([&] {
                  fx.as->refresh(*r.refresh_token, "plain", std::nullopt, fx.good_ctx());
              }) == "invalid_grant");
    }
    SUBCASE("unknown token") {
        CHECK(error_code([&] {
                  fx.as->refresh("bogus", "app", fx.client_proof(fx.app_key, "/refresh"),
                                 fx.good_ctx());
              }) == "invalid_grant");
    }
}

TEST_CASE("revocation is idempotent and accepts wire tokens") {
    Fixture fx;
    TokenResponse r = fx.full_grant("app", &fx.app_key);
    TokenClaims c = verify_token(r.access_token, fx.as->verification_keys());

    CHECK_FALSE(fx.as->is_revoked(c.jti));
    fx.as->revoke(r.access_token);  // full wire form
    CHECK(fx.as->is_revoked(c.jti));
    fx.as->revoke(r.access_token);  // second call is a no-op
    CHECK(fx.as->is_revoked(c.jti));
    CHECK_NOTHROW(fx.as->revoke("garbage.that.is-not-a-token"));
    CHECK_NOTHROW(fx.as->revoke("opaque-reference"));

    // revoking the refresh token takes the family down
    TokenResponse r2 = fx.full_grant("app", &fx.app_key);
    TokenClaims c2 = verify_token(r2.access_token, fx.as->verification_keys());
    fx.as->revoke(*r2.refresh_token);
    CHECK(fx.as->is_revoked(c2.jti));
}

TEST_CASE("introspection requires a registered caller and reports liveness") {
    Fixture fx;
    TokenResponse r = fx.full_grant("app", &fx.app_key);
    auto rs_proof = [&](const std::string& tok) {
        return make_sender_proof("POST", fx.cfg.issuer_id + "/introspect", tok, fx.rs_key,
                                 fx.now)
            .wire;
    };

    SUBCASE("unregistered caller") {
        CHECK(error_code([&] {
                  fx.as->introspect(r.access_token, "who-dis", rs_proof(r.access_token));
              }) == "unauthorized_caller");
    }
    SUBCASE("registered caller with a bad proof") {
        KeyPair rogue = KeyPair::generate_ed25519("rogue");
        std::string bad =
            make_sender_proof("POST", fx.cfg.issuer_id + "/introspect", r.access_token, rogue,
                              fx.now)
                .wire;
        CHECK(error_code([&] { fx.as->introspect(r.access_token, "rs.example", bad); }) ==
              "unauthorized_caller");
    }
    SUBCASE("active while fresh, inactive past expiry") {
        auto in = fx.as->introspect(r.access_token, "rs.example", rs_proof(r.access_token));
        CHECK(in.active);
        CHECK(in.claims->sub == "alice");
        fx.now += 901;
        CHECK_FALSE(fx.as->introspect(r.access_token, "rs.example", rs_proof(r.access_token))
                        .active);
    }
    SUBCASE("inactive after revocation") {
        fx.as->revoke(r.access_token);
        CHECK_FALSE(fx.as->introspect(r.access_token, "rs.example", rs_proof(r.access_token))
                        .active);
    }
    SUBCASE("garbage tokens are inactive, not errors") {
        CHECK_FALSE(fx.as->introspect("junk", "rs.example", rs_proof("junk")).active);
    }
}

TEST_CASE("token exchange narrows scope, audience and lifetime") {
    Fixture fx;
    KeyPair partner_key = KeyPair::generate_ed25519("partner");
    fx.register_keyed("partner", partner_key, {"files:read"});
    Bytes sealing = crypto::random_bytes(32);
    fx.as->set_sealing_key("partner", sealing);

    TokenResponse r = fx.full_grant("app", &fx.app_key, {"files:read", "files:write"});
    auto xproof = [&](const std::string& tok) {
        return make_sender_proof("POST", fx.cfg.issuer_id + "/exchange", tok, fx.app_key, fx.now)
            .wire;
    };

    SUBCASE("happy path") {
        fx.now += 500;  // the exchanged lifetime must not outlive the original
        TokenResponse ex =
            fx.as->exchange(r.access_token, xproof(r.access_token), "partner", fx.good_ctx());
        TokenClaims c = verify_token(ex.access_token, fx.as->verification_keys());
        CHECK(c.aud == "partner");
        CHECK(c.scope == std::vector<std::string>{"files:read"});  // intersection only
        CHECK(c.sub == "alice");
        TokenClaims orig = verify_token(r.access_token, fx.as->verification_keys());
        CHECK(c.exp <= orig.exp);
        CHECK_FALSE(ex.refresh_token.has_value());

        REQUIRE(ex.sealed_token.has_value());
        SignedToken unsealed = unseal_claims(b64url_decode(*ex.sealed_token), sealing);
        CHECK(unsealed.wire == ex.access_token);
    }
    SUBCASE("pop tokens cannot be exchanged without the holder's proof") {
        CHECK(error_code([&] {
                  fx.as->exchange(r.access_token, std::nullopt, "partner", fx.good_ctx());
              }) == "binding_mismatch");
    }
    SUBCASE("no scope overlap") {
        TokenResponse w = fx.full_grant("app", &fx.app_key, {"files:write"});
        CHECK(error_code([&] {
                  fx.as->exchange(w.access_token, xproof(w.access_token), "partner",
                                  fx.good_ctx());
              }) == "invalid_scope");
    }
    SUBCASE("unknown audience") {
        CHECK(error_code([&] {
                  fx.as->exchange(r.access_token, xproof(r.access_token), "nowhere",
                                  fx.good_ctx());
              }) == "unknown_audience");
    }
    SUBCASE("expired and revoked inputs are rejected") {
        fx.now += 901;
        CHECK(error_code([&] {
                  fx.as->exchange(r.access_token, xproof(r.access_token), "partner",
                                  fx.good_ctx());
              }) == "invalid_token");
        fx.now -= 901;
        fx.as->revoke(r.access_token);
        CHECK(error_code([&] {
                  fx.as->exchange(r.access_token, xproof(r.access_token), "partner",
                                  fx.good_ctx());
              }) == "invalid_token");
    }
}

TEST_CASE("medium risk demands step-up before authorization proceeds") {
    Fixture fx;
    std::string v = random_pkce_verifier();
    auto par = fx.push("app", v, &fx.app_key);

    TransactionContext risky = fx.good_ctx();
    risky.ip = "203.0.113.66";  // reputation 0.9 -> score 0.375 at tal 1, MEDIUM

    std::string challenge_id;
    try {
        fx.as->authorize(par.request_uri, "idp-main", "alice", "correct-horse", {"files:read"},
                         risky);
        FAIL("expected StepUpRequired");
    } catch (const StepUpRequired& e) {
        challenge_id = e.challenge_id;
    }
    REQUIRE_FALSE(challenge_id.empty());
    REQUIRE(fx.challenges.count(challenge_id) == 1);
    CHECK(fx.challenges[challenge_id].first == "alice");

    SUBCASE("correct answer unblocks one retry") {
        CHECK(fx.as->complete_step_up(challenge_id, fx.challenges[challenge_id].second));
        auto auth = fx.as->authorize(par.request_uri, "idp-main", "alice", "correct-horse",
                                     {"files:read"}, risky);
        CHECK_FALSE(auth.code.empty());
        // the satisfaction was consumed; an equally risky attempt from yet
        // another device blocks again
        std::string v2 = random_pkce_verifier();
        auto par2 = fx.push("app", v2, &fx.app_key);
        TransactionContext risky2 = risky;
        risky2.device_id = "burner-2";
        CHECK_THROWS_AS(fx.as->authorize(par2.request_uri, "idp-main", "alice", "correct-horse",
                                         {"files:read"}, risky2),
                        StepUpRequired);
    }
    SUBCASE("one wrong answer voids the challenge") {
        CHECK_FALSE(fx.as->complete_step_up(challenge_id, "000000x"));
        CHECK(error_code([&] {
                  fx.as->complete_step_up(challenge_id, fx.challenges[challenge_id].second);
              }) == "challenge_voided");
    }
    SUBCASE("challenges expire") {
        fx.now += 301;
        CHECK(error_code([&] {
                  fx.as->complete_step_up(challenge_id, fx.challenges[challenge_id].second);
              }) == "challenge_expired");
    }
    SUBCASE("unknown challenge") {
        CHECK(error_code([&] { fx.as->complete_step_up("nope", "123456"); }) ==
              "unknown_challenge");
    }
}

TEST_CASE("high risk is denied outright") {
    Fixture fx;
    std::string v = random_pkce_verifier();
    auto par = fx.push("plain", v);

    TransactionContext hostile = fx.good_ctx();
    hostile.ip = "203.0.113.66";
    hostile.nids_malicious = true;
    // 0.9*0.25 + 0.20 + 0.15 (unknown device) + 0.15 (tal0) = 0.725 -> HIGH
    CHECK(error_code([&] {
              fx.as->authorize(par.request_uri, "idp-main", "alice", "correct-horse",
                               {"files:read"}, hostile);
          }) == "risk_denied");
}

TEST_CASE("par rate limit escalates the global posture") {
    Fixture fx;
    for (int i = 0; i < 20; ++i) {
        fx.push("plain", random_pkce_verifier());
    }
    CHECK(fx.engine.posture() == PostureLevel::NORMAL);
    CHECK(error_code([&] { fx.push("plain", random_pkce_verifier()); }) == "rate_limited");
    CHECK(fx.engine.posture() == PostureLevel::ELEVATED);

    // the window slides: a minute later the client is welcome again
    fx.now += 60;
    CHECK_NOTHROW(fx.push("plain", random_pkce_verifier()));

    Fixture unlimited(FaultFlags::with_disabled("rate-limit"));
    for (int i = 0; i < 30; ++i) {
        CHECK_NOTHROW(unlimited.push("plain", random_pkce_verifier()));
    }
}

TEST_CASE("known devices lower the risk surface on later visits") {
    Fixture fx;
    fx.full_grant("app", &fx.app_key);  // records laptop-1 for alice
    TransactionContext ctx = fx.good_ctx();
    ctx = fx.as->enrich_context(ctx, "app", "alice");
    CHECK(ctx.device_known);
    CHECK(ctx.tal == 1);
    CHECK(ctx.ip_reputation == 0.0);

    TransactionContext fresh = fx.good_ctx();
    fresh.device_id = "never-seen";
    CHECK_FALSE(fx.as->enrich_context(fresh, "app", "alice").device_known);

    auto seen = fx.as->last_seen("alice");
    REQUIRE(seen.has_value());
    CHECK(seen->geo.lat == doctest::Approx(40.7));
    CHECK(seen->timestamp == fx.now);
}

TEST_CASE("audit trail reflects allow and deny outcomes") {
    Fixture fx;
    fx.full_grant("app", &fx.app_key);
    std::string v = random_pkce_verifier();
    auto par = fx.push("plain", v);
    TransactionContext hostile = fx.good_ctx();
    hostile.ip = "203.0.113.66";
    hostile.device_id = "burner";  // the earlier grant made laptop-1 a known device
    hostile.nids_malicious = true;
    error_code([&] {
        fx.as->authorize(par.request_uri, "idp-main", "alice", "correct-horse", {"files:read"},
                         hostile);
    });

    bool saw_allow = false;
    bool saw_deny = false;
    for (const auto& rec : fx.audit.records()) {
        if (rec.action == "token" && rec.outcome == "allow") saw_allow = true;
        if (rec.action == "authorize" && rec.outcome == "risk_denied") saw_deny = true;
    }
    CHECK(saw_allow);
    CHECK(saw_deny);
}
