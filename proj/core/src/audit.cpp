#include "radaa/audit.hpp"

#include <nlohmann/json.hpp>

#include <fstream>

#include "radaa/error.hpp"

namespace radaa {

using nlohmann::json;

AuditLog::AuditLog(std::string path) : path_(std::move(path)) {}

void AuditLog::append(const AuditRecord& rec) {
    std::lock_guard lock(mu_);
    if (rec.ts < last_ts_) {
        skew_events_++;
    }
    last_ts_ = std::max(last_ts_, rec.ts);
    memory_.push_back(rec);
    if (!path_.empty()) {
        json j;
        j["ts"] = rec.ts;
        j["actor"] = rec.actor;
        j["action"] = rec.action;
        j["risk"] = {{"score", rec.risk_score}, {"class", to_string(rec.risk_class)}};
        j["outcome"] = rec.outcome;
        std::ofstream out(path_, std::ios::app);
        if (!out) {
            throw Error("storage_failure", "cannot append to audit log: " + path_);
        }
        out << j.dump() << "\n";
    }
}

std::vector<AuditRecord> AuditLog::records() const {
    std::lock_guard lock(mu_);
    return memory_;
}

size_t AuditLog::skew_events() const {
    std::lock_guard lock(mu_);
    return skew_events_;
}

}  // namespace radaa
