#pragma once

#include <memory>
#include <string>
#include <thread>

#include "radaa/auth_server.hpp"
#include "radaa/resource_server.hpp"

namespace httplib {
class Server;
}

namespace radaa {

// HTTP+JSON frontends. Every response carries
// "Content-Security-Policy: default-src 'none'" (unless fault-injected away)
// and no permissive cross-origin headers, ever. Origin headers are treated
// as untrusted noise.
class HttpAuthService {
public:
    HttpAuthService(AuthServer& as, FaultFlags faults = {});
    ~HttpAuthService();

    // Binds and serves on a background thread. Returns the bound port.
    int start(const std::string& host, int port);
    void stop();

    std::string base_url() const { return base_url_; }

private:
    void route();

    AuthServer& as_;
    FaultFlags faults_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    std::string base_url_;
};

class HttpResourceService {
public:
    HttpResourceService(ResourceServer& rs, FaultFlags faults = {});
    ~HttpResourceService();

    int start(const std::string& host, int port);
    void stop();

    std::string base_url() const { return base_url_; }

private:
    void route();

    ResourceServer& rs_;
    FaultFlags faults_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    std::string base_url_;
};

// Shared helpers for request plumbing.
TransactionContext context_from_json(const nlohmann::json& j);
nlohmann::json context_to_json(const TransactionContext& ctx);

// Script-bearing or otherwise out-of-alphabet parameter values are rejected
// outright (input validation per the XSS mitigation).
bool scope_param_valid(const std::string& value);

}  // namespace radaa
