#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <thread>

#include "radaa/audit.hpp"
#include "radaa/config.hpp"
#include "radaa/error.hpp"
#include "radaa/store.hpp"

using namespace radaa;
using nlohmann::json;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("radaa-test-" + std::to_string(::getpid()) + "-" +
                std::to_string(reinterpret_cast<uintptr_t>(this)));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

std::string error_message(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("store namespaces are fixed at construction") {
    Store s;
    CHECK_THROWS_AS(s.put("nonsense", "k", json{}), Error);
    CHECK_THROWS_AS(s.get("nonsense", "k"), Error);
    CHECK(Store::default_namespaces().count("tokens") == 1);
    CHECK(Store::default_namespaces().count("refresh") == 1);
}

TEST_CASE("store basic put/get/list/erase") {
    Store s;
    CHECK_FALSE(s.get("tokens", "a").has_value());
    s.put("tokens", "a", json{{"x", 1}});
    CHECK(s.get("tokens", "a").value() == json{{"x", 1}});
    s.put("tokens", "b", json{{"x", 2}});
    CHECK(s.list("tokens").size() == 2);
    s.erase("tokens", "a");
    CHECK_FALSE(s.get("tokens", "a").has_value());
    CHECK(s.list("tokens").size() == 1);
}

TEST_CASE("checked_put enforces the expected prior value") {
    Store s;
    // absent key: expected_prior must be nullopt
    CHECK_FALSE(s.checked_put("codes", "c", json{{"used", false}}, json{{"used", true}}).success);
    CHECK(s.checked_put("codes", "c", std::nullopt, json{{"used", false}}).success);
    // present key: nullopt no longer matches
    CHECK_FALSE(s.checked_put("codes", "c", std::nullopt, json{{"used", true}}).success);
    // wrong prior fails, right prior succeeds exactly once
    CHECK_FALSE(s.checked_put("codes", "c", json{{"used", true}}, json{{"used", true}}).success);
    CHECK(s.checked_put("codes", "c", json{{"used", false}}, json{{"used", true}}).success);
    CHECK_FALSE(s.checked_put("codes", "c", json{{"used", false}}, json{{"used", true}}).success);
    CHECK(s.get("codes", "c").value() == json{{"used", true}});
}

TEST_CASE("checked_put admits exactly one winner under contention") {
    for (int rep = 0; rep < 50; ++rep) {
        Store s;
        s.put("codes", "c", json{{"used", false}});
        std::atomic<int> wins{0};
        std::vector<std::thread> threads;
        for (int t = 0; t < 16; ++t) {
            threads.emplace_back([&] {
                if (s.checked_put("codes", "c", json{{"used", false}}, json{{"used", true}})
                        .success) {
                    wins++;
                }
            });
        }
        for (auto& th : threads) th.join();
        CHECK(wins == 1);
    }
}

TEST_CASE("store contents survive a restart") {
    TempDir dir;
    {
        Store s(dir.path.string());
        s.put("clients", "app", json{{"tal", 1}});
        s.put("revocations", "jti-1", json{{"at", 123}});
        s.checked_put("codes", "c", std::nullopt, json{{"used", false}});
        s.erase("clients", "gone");
    }
    Store back(dir.path.string());
    CHECK(back.get("clients", "app").value() == json{{"tal", 1}});
    CHECK(back.get("revocations", "jti-1").value() == json{{"at", 123}});
    CHECK(back.get("codes", "c").value() == json{{"used", false}});
}

TEST_CASE("audit log orders appends and counts clock skew") {
    AuditLog log;
    log.append({100, "alice", "authorize", 0.1, RiskClass::LOW, "allow"});
    log.append({101, "alice", "token", 0.1, RiskClass::LOW, "allow"});
    log.append({99, "bob", "token", 0.9, RiskClass::HIGH, "deny"});  // skewed but kept
    auto recs = log.records();
    REQUIRE(recs.size() == 3);
    CHECK(recs[0].actor == "alice");
    CHECK(recs[2].actor == "bob");
    CHECK(recs[2].outcome == "deny");
    CHECK(log.skew_events() == 1);
}

TEST_CASE("audit log writes one JSON object per line") {
    TempDir dir;
    std::string path = (dir.path / "audit.jsonl").string();
    {
        AuditLog log(path);
        log.append({100, "alice", "authorize", 0.1, RiskClass::LOW, "allow"});
        log.append({101, "mallory", "token", 0.8, RiskClass::HIGH, "deny"});
    }
    std::ifstream in(path);
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        json j = json::parse(line);  // throws if a line is not standalone JSON
        CHECK(j.contains("ts"));
        CHECK(j.contains("actor"));
        CHECK(j.contains("outcome"));
        ++n;
    }
    CHECK(n == 2);
}

TEST_CASE("config defaults") {
    Config c = parse_config(R"({"issuer_id": "https://as.example"})");
    CHECK(c.issuer_id == "https://as.example");
    CHECK(c.access_ttl_tal0 == 300);
    CHECK(c.access_ttl_tal1 == 900);
    CHECK(c.refresh_ttl == 28800);
    CHECK(c.par_ttl == 60);
    CHECK(c.code_ttl == 60);
    CHECK(c.thresholds.low == 0.35);
    CHECK(c.thresholds.high == 0.70);
    CHECK(c.weights.w == std::array<double, 5>{0.25, 0.25, 0.15, 0.20, 0.15});
    CHECK(c.posture == PostureLevel::NORMAL);
    CHECK(c.knn_k == 5);
    CHECK(c.knn_capacity == 10000);
    CHECK(c.rate_limit_par_per_min == 20);
    CHECK_FALSE(c.engine_use_knn);
}

TEST_CASE("config parses nested sections") {
    Config c = parse_config(R"({
        "issuer_id": "https://as.example",
        "lifetimes": {"access_tal0": 60, "refresh": 3600},
        "thresholds": {"low": 0.2, "high": 0.8},
        "weights": [0.2, 0.2, 0.2, 0.2, 0.2],
        "posture": "ELEVATED",
        "knn": {"k": 7, "capacity": 100},
        "engine_use_knn": true,
        "ip_reputation": {"10.0.0.1": 0.5},
        "idps": {"idp-a": {"alice": {"secret": "pw", "subject": "alice"}}},
        "clients": [{"client_id": "app", "scopes": ["files:read"], "with_key": false}],
        "resources": [{"path": "files/x", "required_scope": "files:read", "payload": "hi"}]
    })");
    CHECK(c.access_ttl_tal0 == 60);
    CHECK(c.refresh_ttl == 3600);
    CHECK(c.thresholds.low == 0.2);
    CHECK(c.posture == PostureLevel::ELEVATED);
    CHECK(c.knn_k == 7);
    CHECK(c.engine_use_knn);
    CHECK(c.ip_reputation.at("10.0.0.1") == 0.5);
    CHECK(c.idps.at("idp-a").at("alice").subject == "alice");
    REQUIRE(c.clients.size() == 1);
    CHECK_FALSE(c.clients[0].with_key);
    REQUIRE(c.resources.size() == 1);
    CHECK(c.resources[0].payload == "hi");
}

TEST_CASE("config validation names the offending field") {
    auto parse_err = [](const std::string& text) {
        return error_message([&] { parse_config(text); });
    };
    CHECK(parse_err(R"({})").find("issuer_id") != std::string::npos);
    CHECK(parse_err(R"({"issuer_id": "x", "thresholds": {"low": 0.8, "high": 0.3}})")
              .find("thresholds") != std::string::npos);
    CHECK(parse_err(R"({"issuer_id": "x", "weights": [1, 0, 0, 0, 0.5]})").find("weights") !=
          std::string::npos);
    CHECK(parse_err(R"({"issuer_id": "x", "weights": [-0.5, 0.5, 0.5, 0.25, 0.25]})")
              .find("weights") != std::string::npos);
    CHECK(parse_err(R"({"issuer_id": "x", "weights": [1, 0, 0]})").find("weights") !=
          std::string::npos);
    CHECK(parse_err(R"({"issuer_id": "x", "knn": {"k": 4}})").find("knn.k") != std::string::npos);
    CHECK(parse_err(R"({"issuer_id": "x", "posture": "PANIC"})").find("posture") !=
          std::string::npos);
    CHECK(parse_err(R"({"issuer_id": "x", "ip_reputation": {"1.2.3.4": 1.5}})")
              .find("ip_reputation") != std::string::npos);
    CHECK(parse_err(R"({"issuer_id": "x", "rate_limit_par_per_min": 0})")
              .find("rate_limit_par_per_min") != std::string::npos);
}

TEST_CASE("config parse errors carry position info") {
    try {
        parse_config("{not json");
        FAIL("expected config_parse");
    } catch (const Error& e) {
        CHECK(e.code() == "config_parse");
        CHECK(std::string(e.what()).find("parse error at") != std::string::npos);
    }
    CHECK(error_message([] { load_config("/nonexistent/radaa.json"); }).find("cannot open") !=
          std::string::npos);
}

TEST_CASE("posture string round trip") {
    for (PostureLevel p :
         {PostureLevel::NORMAL, PostureLevel::ELEVATED, PostureLevel::CRITICAL}) {
        CHECK(posture_from_string(to_string(p)) == p);
    }
    CHECK_THROWS_AS(posture_from_string("???"), Error);
}
