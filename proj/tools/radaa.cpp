// Command-line surface: serve, simulate, classify, report, gen-keys.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <thread>
#include <fstream>
#include <iostream>
#include <sstream>

#include "radaa/config.hpp"
#include "radaa/harness.hpp"
#include "radaa/http_service.hpp"
#include "radaa/token.hpp"

using nlohmann::json;

namespace {

radaa::Config resolve_config(const std::string& config_path) {
    std::string path = config_path;
    if (path.empty()) {
        if (const char* env = std::getenv("RADAA_CONFIG")) {
            path = env;
        }
    }
    if (path.empty()) {
        return radaa::Deployment::default_harness_config();
    }
    return radaa::load_config(path);
}

std::string read_input(const std::string& path) {
    std::ostringstream ss;
    if (path.empty() || path == "-") {
        ss << std::cin.rdbuf();
    } else {
        std::ifstream in(path);
        if (!in) {
            throw radaa::Error("io_error", "cannot open " + path);
        }
        ss << in.rdbuf();
    }
    return ss.str();
}

int cmd_classify(const std::string& config_path, const std::string& input_path) {
    radaa::Config cfg = resolve_config(config_path);
    radaa::AdaptiveEngine engine(cfg.weights, cfg.thresholds, cfg.knn_k, cfg.knn_capacity);
    engine.set_posture(cfg.posture);
    engine.set_use_knn(cfg.engine_use_knn);

    json doc = json::parse(read_input(input_path));
    radaa::TransactionContext ctx = radaa::context_from_json(
        doc.contains("context") ? doc["context"] : doc);
    if (auto rep = cfg.ip_reputation.find(ctx.ip); rep != cfg.ip_reputation.end()) {
        ctx.ip_reputation = rep->second;
    }

    std::optional<radaa::SubjectHistory> last_seen;
    if (doc.contains("last_seen")) {
        const auto& ls = doc["last_seen"];
        last_seen = radaa::SubjectHistory{
            radaa::GeoPoint{ls.at("geo").value("lat", 0.0), ls.at("geo").value("lon", 0.0)},
            ls.value("timestamp", int64_t{0})};
    }

    radaa::RiskAssessment a = engine.assess(ctx, last_seen);
    radaa::Decision d =
        engine.decide_for(a, radaa::ProtocolStage::RESOURCE_ACCESS, {});
    json out{{"score", a.score},
             {"class", radaa::to_string(a.risk_class)},
             {"decision", radaa::to_string(d.action)}};
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_gen_keys(const std::string& key_id, const std::string& algorithm,
                 const std::string& out_path) {
    radaa::KeyPair kp;
    if (algorithm == "ed25519") {
        kp = radaa::KeyPair::generate_ed25519(key_id);
    } else if (algorithm == "hmac") {
        kp = radaa::KeyPair::generate_hmac(key_id);
    } else {
        std::cerr << "unknown algorithm: " << algorithm << "\n";
        return 2;
    }
    json out{{"key_id", kp.key_id},
             {"algorithm", radaa::to_string(kp.algorithm)},
             {"public_key_b64", radaa::b64url_encode(kp.public_key)},
             {"private_key_b64", radaa::b64url_encode(kp.private_key)}};
    if (out_path.empty() || out_path == "-") {
        std::cout << out.dump(2) << "\n";
    } else {
        std::ofstream f(out_path);
        f << out.dump(2) << "\n";
        std::cout << "wrote " << out_path << "\n";
    }
    return 0;
}

int cmd_simulate(const std::string& scenario, const std::string& fault,
                 const std::string& report_path) {
    radaa::FaultFlags faults = radaa::FaultFlags::with_disabled(fault);
    radaa::ResilienceMatrix matrix;
    if (scenario == "all") {
        matrix = radaa::run_all(faults);
    } else {
        radaa::ScenarioId id = radaa::scenario_from_string(scenario);
        radaa::Deployment dep(faults);
        radaa::ScenarioResult r = radaa::run_scenario(id, dep);
        matrix.results.push_back(r);
        matrix.pass = r.blocked == radaa::scenario_info(id).expected_blocked;
    }
    std::cout << radaa::render_matrix(matrix);
    if (!report_path.empty()) {
        std::ofstream f(report_path);
        f << radaa::matrix_to_json(matrix).dump(2) << "\n";
        std::ofstream t(report_path + ".txt");
        t << radaa::render_matrix(matrix);
    }
    return matrix.pass ? 0 : 1;
}

int cmd_report(const std::string& in_path) {
    json doc = json::parse(read_input(in_path));
    radaa::ResilienceMatrix m;
    m.pass = doc.value("pass", false);
    for (const auto& r : doc.value("results", json::array())) {
        radaa::ScenarioResult sr;
        sr.id = radaa::scenario_from_string(r.at("id").get<std::string>());
        sr.attempted = r.value("attempted", 0);
        sr.blocked = r.value("blocked", false);
        m.results.push_back(sr);
    }
    std::cout << radaa::render_matrix(m);
    return 0;
}

int cmd_serve(const std::string& config_path) {
    radaa::Config cfg = resolve_config(config_path);
    if (cfg.as_port == 0) cfg.as_port = 8470;
    if (cfg.rs_port == 0) cfg.rs_port = 8471;
    radaa::Deployment dep({}, cfg);
    std::cout << "authorization server: " << dep.as_http->base_url() << "\n";
    std::cout << "resource server:      " << dep.rs_http->base_url() << "\n";
    std::cout << "issuer: " << cfg.issuer_id << "  (Ctrl-C to stop)\n";
    static std::atomic<bool> running{true};
    std::signal(SIGINT, [](int) { running = false; });
    std::signal(SIGTERM, [](int) { running = false; });
    while (running) {
        std::this_thread::sleep_for(std::chrono::milliseconds(200));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"RAD-AA reference deployment"};
    app.require_subcommand(1);

    std::string config_path;

    auto* serve = app.add_subcommand("serve", "run the authorization and resource servers");
    serve->add_option("--config", config_path, "config file path (or RADAA_CONFIG)");

    std::string scenario = "all";
    std::string fault;
    std::string report_path;
    auto* simulate = app.add_subcommand("simulate", "run threat scenarios");
    simulate->add_option("--scenario", scenario, "scenario id or 'all'");
    simulate->add_option("--fault", fault, "disable one mitigation");
    simulate->add_option("--report", report_path, "write JSON report here");

    std::string classify_input;
    auto* classify = app.add_subcommand("classify", "score a transaction context");
    classify->add_option("--config", config_path, "config file path");
    classify->add_option("input", classify_input, "context JSON file ('-' for stdin)");

    std::string report_in;
    auto* report = app.add_subcommand("report", "render a matrix JSON as text");
    report->add_option("input", report_in, "matrix JSON file ('-' for stdin)");

    std::string key_id = "key-1";
    std::string algorithm = "ed25519";
    std::string key_out;
    auto* gen_keys = app.add_subcommand("gen-keys", "generate a signing keypair");
    gen_keys->add_option("--key-id", key_id, "key identifier");
    gen_keys->add_option("--algorithm", algorithm, "ed25519 or hmac");
    gen_keys->add_option("--out", key_out, "output file (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (serve->parsed()) return cmd_serve(config_path);
        if (simulate->parsed()) return cmd_simulate(scenario, fault, report_path);
        if (classify->parsed()) return cmd_classify(config_path, classify_input);
        if (report->parsed()) return cmd_report(report_in);
        if (gen_keys->parsed()) return cmd_gen_keys(key_id, algorithm, key_out);
    } catch (const radaa::Error& e) {
        std::cerr << "error (" << e.code() << "): " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
