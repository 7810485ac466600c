#include "radaa/config.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

#include "radaa/error.hpp"

namespace radaa {

using nlohmann::json;

PostureLevel posture_from_string(const std::string& s) {
    if (s == "NORMAL") return PostureLevel::NORMAL;
    if (s == "ELEVATED") return PostureLevel::ELEVATED;
    if (s == "CRITICAL") return PostureLevel::CRITICAL;
    throw Error("config_invalid", "posture: unknown level " + s);
}

std::string to_string(PostureLevel p) {
    switch (p) {
        case PostureLevel::NORMAL: return "NORMAL";
        case PostureLevel::ELEVATED: return "ELEVATED";
        case PostureLevel::CRITICAL: return "CRITICAL";
    }
    return "NORMAL";
}

namespace {

void validate(const Config& c) {
    if (c.issuer_id.empty()) {
        throw Error("config_invalid", "issuer_id: required");
    }
    if (!(0.0 < c.thresholds.low && c.thresholds.low < c.thresholds.high &&
          c.thresholds.high < 1.0)) {
        throw Error("config_invalid",
                    "thresholds: require 0 < low < high < 1");
    }
    double sum = 0.0;
    for (double w : c.weights.w) {
        if (w < 0.0) {
            throw Error("config_invalid", "weights: must be non-negative");
        }
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw Error("config_invalid", "weights: must sum to 1.0");
    }
    if (c.knn_k <= 0 || c.knn_k % 2 == 0) {
        throw Error("config_invalid", "knn.k: must be a positive odd integer");
    }
    for (const auto& [ip, rep] : c.ip_reputation) {
        if (rep < 0.0 || rep > 1.0) {
            throw Error("config_invalid", "ip_reputation: value for " + ip + " outside [0,1]");
        }
    }
    if (c.rate_limit_par_per_min <= 0) {
        throw Error("config_invalid", "rate_limit_par_per_min: must be positive");
    }
}

}  // namespace

Config parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error("config_parse", e.what());  // nlohmann includes byte position
    }

    Config c;
    c.issuer_id = j.value("issuer_id", "");
    c.as_host = j.value("as_host", c.as_host);
    c.as_port = j.value("as_port", c.as_port);
    c.rs_host = j.value("rs_host", c.rs_host);
    c.rs_port = j.value("rs_port", c.rs_port);
    c.rs_id = j.value("rs_id", c.rs_id);

    if (j.contains("lifetimes")) {
        const auto& l = j["lifetimes"];
        c.access_ttl_tal0 = l.value("access_tal0", c.access_ttl_tal0);
        c.access_ttl_tal1 = l.value("access_tal1", c.access_ttl_tal1);
        c.refresh_ttl = l.value("refresh", c.refresh_ttl);
        c.par_ttl = l.value("par", c.par_ttl);
        c.code_ttl = l.value("code", c.code_ttl);
        c.step_up_ttl = l.value("step_up", c.step_up_ttl);
    }
    if (j.contains("thresholds")) {
        c.thresholds.low = j["thresholds"].value("low", c.thresholds.low);
        c.thresholds.high = j["thresholds"].value("high", c.thresholds.high);
    }
    if (j.contains("weights")) {
        const auto& w = j["weights"];
        if (!w.is_array() || w.size() != c.weights.w.size()) {
            throw Error("config_invalid", "weights: expected an array of 5 numbers");
        }
        for (size_t i = 0; i < c.weights.w.size(); ++i) {
            c.weights.w[i] = w[i].get<double>();
        }
    }
    if (j.contains("posture")) {
        c.posture = posture_from_string(j["posture"].get<std::string>());
    }
    if (j.contains("knn")) {
        c.knn_k = j["knn"].value("k", c.knn_k);
        c.knn_capacity = j["knn"].value("capacity", c.knn_capacity);
    }
    c.engine_use_knn = j.value("engine_use_knn", c.engine_use_knn);

    if (j.contains("ip_reputation")) {
        for (auto& [ip, rep] : j["ip_reputation"].items()) {
            c.ip_reputation[ip] = rep.get<double>();
        }
    }
    if (j.contains("idps")) {
        for (auto& [idp_id, table] : j["idps"].items()) {
            for (auto& [user, cred] : table.items()) {
                c.idps[idp_id][user] = IdpCredential{
                    cred.at("secret").get<std::string>(),
                    cred.at("subject").get<std::string>(),
                };
            }
        }
    }
    if (j.contains("clients")) {
        for (const auto& cj : j["clients"]) {
            SeededClient sc;
            sc.client_id = cj.at("client_id").get<std::string>();
            sc.display_name = cj.value("display_name", sc.client_id);
            for (const auto& u : cj.value("redirect_uris", json::array())) {
                sc.redirect_uris.insert(u.get<std::string>());
            }
            for (const auto& s : cj.value("scopes", json::array())) {
                sc.scopes.insert(s.get<std::string>());
            }
            sc.with_key = cj.value("with_key", true);
            sc.with_sealing_key = cj.value("with_sealing_key", false);
            c.clients.push_back(std::move(sc));
        }
    }
    if (j.contains("resources")) {
        for (const auto& rj : j["resources"]) {
            c.resources.push_back(ResourceConfig{
                rj.at("path").get<std::string>(),
                rj.at("required_scope").get<std::string>(),
                rj.value("payload", ""),
            });
        }
    }
    c.rate_limit_par_per_min = j.value("rate_limit_par_per_min", c.rate_limit_par_per_min);
    c.store_dir = j.value("store_dir", c.store_dir);
    c.audit_log_path = j.value("audit_log_path", c.audit_log_path);

    validate(c);
    return c;
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("config_parse", "cannot open config file: " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

}  // namespace radaa
