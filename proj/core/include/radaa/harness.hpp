#pragma once

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "radaa/auth_server.hpp"
#include "radaa/http_service.hpp"
#include "radaa/resource_server.hpp"

namespace radaa {

enum class ScenarioId {
    HONEST_FLOW,
    CLIENT_IMPERSONATION,
    CSRF,
    MIXUP,
    CORS_PROBE,
    XSS_HEADER,
    DDOS_PAR,
    TOKEN_INJECTION,
    TOKEN_REPLAY,
};

std::string to_string(ScenarioId id);
ScenarioId scenario_from_string(const std::string& s);
const std::vector<ScenarioId>& all_scenarios();

struct Scenario {
    ScenarioId id;
    std::string description;
    bool expected_blocked;  // false only for HONEST_FLOW
};

Scenario scenario_info(ScenarioId id);

struct ScenarioResult {
    ScenarioId id;
    int attempted = 0;
    bool blocked = false;
    std::vector<std::pair<std::string, std::string>> evidence;  // (step, observed code)
};

struct ResilienceMatrix {
    std::vector<ScenarioResult> results;
    bool pass = false;
};

// One self-contained in-process deployment: shared store/engine, an AS and
// an RS each listening on a loopback port, seeded clients (one TAL1 honest,
// one TAL0, one attacker-controlled) and a stub federation.
struct Deployment {
    explicit Deployment(FaultFlags faults = {}, Config config = default_harness_config());
    ~Deployment();

    Deployment(const Deployment&) = delete;
    Deployment& operator=(const Deployment&) = delete;

    static Config default_harness_config();

    Config config;
    FaultFlags faults;
    Store store;
    AuditLog audit;
    AdaptiveEngine engine;
    FederationRegistry federation;
    std::unique_ptr<AuthServer> as;
    std::unique_ptr<ResourceServer> rs;
    std::unique_ptr<HttpAuthService> as_http;
    std::unique_ptr<HttpResourceService> rs_http;

    std::string as_host;
    int as_port = 0;
    std::string rs_host;
    int rs_port = 0;

    // Seeded actor key material.
    KeyPair honest_key;
    KeyPair partner_key;
    KeyPair attacker_key;
    KeyPair rs_key;

    // Step-up codes "delivered" to subjects, keyed by challenge id.
    std::map<std::string, std::string> delivered_codes;
    std::mutex codes_mu;

    std::string honest_client = "honest-app";
    std::string tal0_client = "lowtrust-app";
    std::string partner_client = "partner-app";
    std::string attacker_client = "attacker-app";
};

ScenarioResult run_scenario(ScenarioId id, Deployment& dep);

// Each scenario runs in a fresh deployment (isolation by construction).
ResilienceMatrix run_all(FaultFlags faults = {});

std::string render_matrix(const ResilienceMatrix& m);
nlohmann::json matrix_to_json(const ResilienceMatrix& m);

}  // namespace radaa
