#pragma once

#include <cstdint>
#include <mutex>
#include <string>
#include <vector>

#include "radaa/token.hpp"

namespace radaa {

struct AuditRecord {
    int64_t ts = 0;
    std::string actor;   // client_id or subject
    std::string action;  // endpoint or operation name
    double risk_score = 0.0;
    RiskClass risk_class = RiskClass::LOW;
    std::string outcome;  // "allow", "deny", or an error code
};

// Append-only JSONL log. With an empty path records are only kept in memory
// (tests, harness). Appends are serialized; a record with ts earlier than
// the previous one is still accepted but counted in skew_events.
class AuditLog {
public:
    explicit AuditLog(std::string path = "");

    void append(const AuditRecord& rec);

    std::vector<AuditRecord> records() const;
    size_t skew_events() const;

private:
    std::string path_;
    mutable std::mutex mu_;
    int64_t last_ts_ = INT64_MIN;
    size_t skew_events_ = 0;
    std::vector<AuditRecord> memory_;
};

}  // namespace radaa
