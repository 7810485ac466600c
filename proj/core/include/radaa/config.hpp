#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "radaa/engine.hpp"

namespace radaa {

struct SeededClient {
    std::string client_id;
    std::string display_name;
    std::set<std::string> redirect_uris;
    std::set<std::string> scopes;
    bool with_key = true;  // TAL1 candidates get an ed25519 keypair at deploy time
    bool with_sealing_key = false;
};

struct IdpCredential {
    std::string secret;
    std::string subject;  // local subject the external identity maps to
};

struct ResourceConfig {
    std::string path;
    std::string required_scope;
    std::string payload;
};

struct Config {
    std::string issuer_id;

    std::string as_host = "127.0.0.1";
    int as_port = 0;  // 0 = pick a free port
    std::string rs_host = "127.0.0.1";
    int rs_port = 0;
    std::string rs_id = "resource-server";

    // Token lifetimes (seconds) per trust assurance level.
    int64_t access_ttl_tal0 = 300;
    int64_t access_ttl_tal1 = 900;
    int64_t refresh_ttl = 28800;
    int64_t par_ttl = 60;
    int64_t code_ttl = 60;
    int64_t step_up_ttl = 300;

    RiskThresholds thresholds{};
    RiskWeights weights{};
    PostureLevel posture = PostureLevel::NORMAL;

    int knn_k = 5;
    size_t knn_capacity = 10000;
    bool engine_use_knn = false;

    std::map<std::string, double> ip_reputation;  // address -> [0,1]

    // idp_id -> (username -> credential)
    std::map<std::string, std::map<std::string, IdpCredential>> idps;

    std::vector<SeededClient> clients;
    std::vector<ResourceConfig> resources;

    int rate_limit_par_per_min = 20;

    std::string store_dir;       // empty = in-memory
    std::string audit_log_path;  // empty = in-memory only
};

// Parses and validates. Throws Error("config_parse") with position info or
// Error("config_invalid") naming the offending field.
Config load_config(const std::string& path);
Config parse_config(const std::string& text);

PostureLevel posture_from_string(const std::string& s);
std::string to_string(PostureLevel p);

}  // namespace radaa
