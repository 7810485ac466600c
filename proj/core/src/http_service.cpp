#include "radaa/http_service.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "radaa/error.hpp"

namespace radaa {

using nlohmann::json;

namespace {

constexpr const char* kCspValue = "default-src 'none'";

int status_for(const std::string& code) {
    if (code == "invalid_token" || code == "token_expired" || code == "unauthorized_caller" ||
        code == "authentication_failed" || code == "step_up_required" ||
        code == "binding_mismatch" || code == "invalid_proof_signature" ||
        code == "proof_replayed" || code == "proof_stale" || code == "token_hash_mismatch" ||
        code == "method_uri_mismatch") {
        return 401;
    }
    if (code == "risk_denied" || code == "insufficient_scope") {
        return 403;
    }
    if (code == "rate_limited") {
        return 429;
    }
    return 400;
}

void write_error(httplib::Response& res, const std::string& code,
                 const std::string& description, const json& extra = json::object()) {
    json body = extra;
    body["error"] = code;
    body["error_description"] = description;
    res.status = status_for(code);
    res.set_content(body.dump(), "application/json");
}

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) {
        return json::object();
    }
    return json::parse(req.body);
}

template <typename Fn>
void handle(const httplib::Request& req, httplib::Response& res, Fn&& fn) {
    try {
        fn();
    } catch (const StepUpRequired& e) {
        write_error(res, e.code(), e.what(), json{{"challenge_id", e.challenge_id}});
    } catch (const Error& e) {
        write_error(res, e.code(), e.what());
    } catch (const json::exception& e) {
        write_error(res, "invalid_request", e.what());
    } catch (const std::exception& e) {
        write_error(res, "server_error", e.what());
    }
}

std::set<std::string> string_set(const json& arr) {
    std::set<std::string> out;
    for (const auto& v : arr) {
        out.insert(v.get<std::string>());
    }
    return out;
}

void validate_scope_params(const std::set<std::string>& scopes) {
    for (const auto& s : scopes) {
        if (!scope_param_valid(s)) {
            throw Error("invalid_request", "scope contains forbidden characters");
        }
    }
}

}  // namespace

bool scope_param_valid(const std::string& value) {
    if (value.empty() || value.size() > 256) {
        return false;
    }
    for (char c : value) {
        bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ||
                  c == '.' || c == ':' || c == '~' || c == '/';
        if (!ok) {
            return false;
        }
    }
    return true;
}

TransactionContext context_from_json(const json& j) {
    TransactionContext ctx;
    ctx.subject = j.value("subject", "");
    ctx.client_id = j.value("client_id", "");
    ctx.ip = j.value("ip", "");
    ctx.ip_reputation = j.value("ip_reputation", 0.0);
    if (j.contains("geo")) {
        ctx.geo.lat = j["geo"].value("lat", 0.0);
        ctx.geo.lon = j["geo"].value("lon", 0.0);
    }
    ctx.timestamp = j.value("timestamp", int64_t{0});
    ctx.device_id = j.value("device_id", "");
    ctx.device_known = j.value("device_known", false);
    ctx.nids_malicious = j.value("nids_malicious", false);
    ctx.tal = j.value("tal", 0);
    return ctx;
}

json context_to_json(const TransactionContext& ctx) {
    json j;
    j["subject"] = ctx.subject;
    j["client_id"] = ctx.client_id;
    j["ip"] = ctx.ip;
    j["ip_reputation"] = ctx.ip_reputation;
    j["geo"] = {{"lat", ctx.geo.lat}, {"lon", ctx.geo.lon}};
    j["timestamp"] = ctx.timestamp;
    j["device_id"] = ctx.device_id;
    j["device_known"] = ctx.device_known;
    j["nids_malicious"] = ctx.nids_malicious;
    j["tal"] = ctx.tal;
    return j;
}

// ---------------------------------------------------------------------------

HttpAuthService::HttpAuthService(AuthServer& as, FaultFlags faults)
    : as_(as), faults_(faults), server_(std::make_unique<httplib::Server>()) {
    route();
}

HttpAuthService::~HttpAuthService() {
    stop();
}

void HttpAuthService::route() {
    if (!faults_.disable_csp_header) {
        server_->set_post_routing_handler([](const httplib::Request&, httplib::Response& res) {
            res.set_header("Content-Security-Policy", kCspValue);
        });
    }

    server_->Post("/par", [this](const httplib::Request& req, httplib::Response& res) {
        handle(req, res, [&] {
            json body = parse_body(req);
            auto scopes = string_set(body.value("scopes", json::array()));
            validate_scope_params(scopes);
            PkceChallenge pkce;
            pkce.method = body.at("pkce").value("method", "");
            pkce.challenge = body.at("pkce").value("challenge", "");
            std::optional<std::string> state;
            if (body.contains("state")) {
                state = body["state"].get<std::string>();
            }
            std::optional<std::string> body_request_uri;
            if (body.contains("request_uri")) {
                body_request_uri = body["request_uri"].get<std::string>();
            }
            std::optional<std::string> proof;
            if (body.contains("proof")) {
                proof = body["proof"].get<std::string>();
            }
            auto ctx = context_from_json(body.value("context", json::object()));
            auto result = as_.par(body.at("client_id").get<std::string>(), proof, scopes,
                                  body.at("redirect_uri").get<std::string>(), pkce, ctx, state,
                                  body_request_uri);
            res.status = 201;
            res.set_content(
                json{{"request_uri", result.request_uri}, {"expires_in", result.expires_in}}
                    .dump(),
                "application/json");
        });
    });

    auto authorize_handler = [this](const std::string& request_uri, const std::string& idp_id,
                                    const std::string& username, const std::string& secret,
                                    const std::set<std::string>& consent,
                                    const TransactionContext& ctx, httplib::Response& res) {
        auto result = as_.authorize(request_uri, idp_id, username, secret, consent, ctx);
        json out{{"code", result.code}, {"iss", result.iss}};
        if (result.state) {
            out["state"] = *result.state;
        }
        res.set_content(out.dump(), "application/json");
    };

    server_->Post("/authorize", [this, authorize_handler](const httplib::Request& req,
                                                          httplib::Response& res) {
        handle(req, res, [&] {
            json body = parse_body(req);
            auto consent = string_set(body.value("consent", json::array()));
            validate_scope_params(consent);
            auto ctx = context_from_json(body.value("context", json::object()));
            authorize_handler(body.at("request_uri").get<std::string>(),
                              body.at("idp_id").get<std::string>(),
                              body.at("username").get<std::string>(),
                              body.at("secret").get<std::string>(), consent, ctx, res);
        });
    });

    server_->Get("/authorize", [this, authorize_handler](const httplib::Request& req,
                                                         httplib::Response& res) {
        handle(req, res, [&] {
            std::set<std::string> consent;
            std::string consent_param = req.get_param_value("consent");
            size_t start = 0;
            while (start < consent_param.size()) {
                size_t comma = consent_param.find(',', start);
                if (comma == std::string::npos) {
                    comma = consent_param.size();
                }
                if (comma > start) {
                    consent.insert(consent_param.substr(start, comma - start));
                }
                start = comma + 1;
            }
            validate_scope_params(consent);
            authorize_handler(req.get_param_value("request_uri"),
                              req.get_param_value("idp_id"), req.get_param_value("username"),
                              req.get_param_value("secret"), consent, TransactionContext{}, res);
        });
    });

    server_->Post("/token", [this](const httplib::Request& req, httplib::Response& res) {
        handle(req, res, [&] {
            json body = parse_body(req);
            std::optional<std::string> proof;
            if (body.contains("proof")) {
                proof = body["proof"].get<std::string>();
            }
            auto ctx = context_from_json(body.value("context", json::object()));
            auto resp = as_.token(body.at("code").get<std::string>(),
                                  body.value("code_verifier", ""),
                                  body.at("client_id").get<std::string>(), proof, ctx);
            json out{{"access_token", resp.access_token},
                     {"token_type", resp.token_type},
                     {"expires_in", resp.expires_in},
                     {"granted_scopes", resp.granted_scopes}};
            if (resp.refresh_token) {
                out["refresh_token"] = *resp.refresh_token;
            }
            res.set_content(out.dump(), "application/json");
        });
    });

    server_->Post("/refresh", [this](const httplib::Request& req, httplib::Response& res) {
        handle(req, res, [&] {
            json body = parse_body(req);
            std::optional<std::string> proof;
            if (body.contains("proof")) {
                proof = body["proof"].get<std::string>();
            }
            auto ctx = context_from_json(body.value("context", json::object()));
            auto resp = as_.refresh(body.at("refresh_token").get<std::string>(),
                                    body.at("client_id").get<std::string>(), proof, ctx);
            json out{{"access_token", resp.access_token},
                     {"token_type", resp.token_type},
                     {"expires_in", resp.expires_in},
                     {"granted_scopes", resp.granted_scopes}};
            if (resp.refresh_token) {
                out["refresh_token"] = *resp.refresh_token;
            }
            res.set_content(out.dump(), "application/json");
        });
    });

    server_->Post("/revoke", [this](const httplib::Request& req, httplib::Response& res) {
        handle(req, res, [&] {
            json body = parse_body(req);
            as_.revoke(body.at("token").get<std::string>());
            res.set_content(json{{"revoked", true}}.dump(), "application/json");
        });
    });

    server_->Post("/introspect", [this](const httplib::Request& req, httplib::Response& res) {
        handle(req, res, [&] {
            json body = parse_body(req);
            auto result = as_.introspect(body.at("token").get<std::string>(),
                                         body.value("caller_id", ""),
                                         body.value("proof", ""));
            json out{{"active", result.active}};
            if (result.claims) {
                out["claims"] = {{"iss", result.claims->iss},
                                 {"sub", result.claims->sub},
                                 {"aud", result.claims->aud},
                                 {"client_id", result.claims->client_id},
                                 {"scope", result.claims->scope},
                                 {"iat", result.claims->iat},
                                 {"exp", result.claims->exp},
                                 {"jti", result.claims->jti},
                                 {"tal", result.claims->tal}};
            }
            res.set_content(out.dump(), "application/json");
        });
    });

    server_->Post("/exchange", [this](const httplib::Request& req, httplib::Response& res) {
        handle(req, res, [&] {
            json body = parse_body(req);
            std::optional<std::string> proof;
            if (body.contains("proof")) {
                proof = body["proof"].get<std::string>();
            }
            auto ctx = context_from_json(body.value("context", json::object()));
            auto resp = as_.exchange(body.at("token").get<std::string>(), proof,
                                     body.at("target_audience").get<std::string>(), ctx);
            json out{{"access_token", resp.access_token},
                     {"token_type", resp.token_type},
                     {"expires_in", resp.expires_in},
                     {"granted_scopes", resp.granted_scopes}};
            if (resp.sealed_token) {
                out["sealed_token"] = *resp.sealed_token;
            }
            res.set_content(out.dump(), "application/json");
        });
    });

    server_->Post("/step-up", [this](const httplib::Request& req, httplib::Response& res) {
        handle(req, res, [&] {
            json body = parse_body(req);
            bool pass = as_.complete_step_up(body.at("challenge_id").get<std::string>(),
                                             body.at("answer").get<std::string>());
            if (!pass) {
                write_error(res, "step_up_failed", "wrong answer; challenge voided");
                return;
            }
            res.set_content(json{{"status", "pass"}}.dump(), "application/json");
        });
    });
}

int HttpAuthService::start(const std::string& host, int port) {
    int bound = port;
    if (port == 0) {
        bound = server_->bind_to_any_port(host);
    } else {
        server_->bind_to_port(host, port);
    }
    base_url_ = "http://" + host + ":" + std::to_string(bound);
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return bound;
}

void HttpAuthService::stop() {
    if (server_) {
        server_->stop();
    }
    if (thread_.joinable()) {
        thread_.join();
    }
}

// ---------------------------------------------------------------------------

HttpResourceService::HttpResourceService(ResourceServer& rs, FaultFlags faults)
    : rs_(rs), faults_(faults), server_(std::make_unique<httplib::Server>()) {
    route();
}

HttpResourceService::~HttpResourceService() {
    stop();
}

void HttpResourceService::route() {
    if (!faults_.disable_csp_header) {
        server_->set_post_routing_handler([](const httplib::Request&, httplib::Response& res) {
            res.set_header("Content-Security-Policy", kCspValue);
        });
    }

    server_->Get(R"(/resource/(.+))", [this](const httplib::Request& req,
                                             httplib::Response& res) {
        handle(req, res, [&] {
            std::string path = req.matches[1];
            std::string auth = req.get_header_value("Authorization");
            std::string token;
            if (auth.rfind("PoP ", 0) == 0) {
                token = auth.substr(4);
            } else if (auth.rfind("Bearer ", 0) == 0) {
                token = auth.substr(7);
            } else {
                write_error(res, "invalid_token", "missing or malformed Authorization header");
                return;
            }
            std::optional<std::string> proof;
            if (req.has_header("Sender-Proof")) {
                proof = req.get_header_value("Sender-Proof");
            }
            TransactionContext ctx;
            if (req.has_header("X-Radaa-Context")) {
                ctx = context_from_json(json::parse(req.get_header_value("X-Radaa-Context")));
            }
            // Canonical proof URI is host-independent.
            std::string uri = rs_.id() + "/resource/" + path;
            AccessDecision d = rs_.access(token, proof, "GET", uri, path, ctx);
            if (!d.allow) {
                write_error(res, d.reason, "resource access denied",
                            json{{"effective_scopes", d.effective_scopes}});
                res.status = d.status;
                return;
            }
            res.set_content(
                json{{"payload", d.payload}, {"effective_scopes", d.effective_scopes}}.dump(),
                "application/json");
        });
    });
}

int HttpResourceService::start(const std::string& host, int port) {
    int bound = port;
    if (port == 0) {
        bound = server_->bind_to_any_port(host);
    } else {
        server_->bind_to_port(host, port);
    }
    base_url_ = "http://" + host + ":" + std::to_string(bound);
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return bound;
}

void HttpResourceService::stop() {
    if (server_) {
        server_->stop();
    }
    if (thread_.joinable()) {
        thread_.join();
    }
}

}  // namespace radaa
