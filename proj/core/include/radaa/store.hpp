#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

namespace radaa {

// Versioned key-value store with per-key check-and-set. Namespaces are
// fixed at construction. When given a directory the contents are written
// through to one JSON file per namespace (atomic tmp+rename), so state
// survives process restart; with an empty directory it is purely in-memory.
class Store {
public:
    struct PutResult {
        bool success = false;
        uint64_t current_version = 0;  // version after the call (or the conflicting one)
    };

    static const std::set<std::string>& default_namespaces();

    explicit Store(std::string directory = "",
                   std::set<std::string> namespaces = default_namespaces());

    // Writes iff the current value equals expected_prior (std::nullopt means
    // "key absent"). Atomic per store.
    PutResult checked_put(const std::string& ns, const std::string& key,
                          const std::optional<nlohmann::json>& expected_prior,
                          const nlohmann::json& value);

    // Unconditional write.
    void put(const std::string& ns, const std::string& key, const nlohmann::json& value);

    std::optional<nlohmann::json> get(const std::string& ns, const std::string& key) const;

    std::map<std::string, nlohmann::json> list(const std::string& ns) const;

    void erase(const std::string& ns, const std::string& key);

private:
    struct Entry {
        uint64_t version = 0;
        nlohmann::json value;
    };

    void check_namespace(const std::string& ns) const;
    void load();
    void persist(const std::string& ns);  // caller holds mu_

    std::string directory_;
    std::set<std::string> namespaces_;
    mutable std::mutex mu_;
    std::map<std::string, std::map<std::string, Entry>> data_;
};

}  // namespace radaa
