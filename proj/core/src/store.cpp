#include "radaa/store.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "radaa/error.hpp"

namespace radaa {

namespace fs = std::filesystem;
using nlohmann::json;

const std::set<std::string>& Store::default_namespaces() {
    static const std::set<std::string> kNamespaces = {
        "clients", "par", "codes", "tokens", "revocations",
        "knn-model", "subject-history", "refresh", "challenges",
    };
    return kNamespaces;
}

Store::Store(std::string directory, std::set<std::string> namespaces)
    : directory_(std::move(directory)), namespaces_(std::move(namespaces)) {
    for (const auto& ns : namespaces_) {
        data_[ns];
    }
    if (!directory_.empty()) {
        fs::create_directories(directory_);
        load();
    }
}

void Store::check_namespace(const std::string& ns) const {
    if (!namespaces_.contains(ns)) {
        throw Error("unknown_namespace", "no such namespace: " + ns);
    }
}

void Store::load() {
    for (const auto& ns : namespaces_) {
        fs::path file = fs::path(directory_) / (ns + ".json");
        if (!fs::exists(file)) {
            continue;
        }
        std::ifstream in(file);
        json doc = json::parse(in);
        auto& table = data_[ns];
        for (auto& [key, entry] : doc.items()) {
            table[key] = Entry{entry.at("version").get<uint64_t>(), entry.at("value")};
        }
    }
}

void Store::persist(const std::string& ns) {
    if (directory_.empty()) {
        return;
    }
    json doc = json::object();
    for (const auto& [key, entry] : data_[ns]) {
        doc[key] = {{"version", entry.version}, {"value", entry.value}};
    }
    fs::path file = fs::path(directory_) / (ns + ".json");
    fs::path tmp = file;
    tmp += ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) {
            throw Error("storage_failure", "cannot write " + tmp.string());
        }
        out << doc.dump();
    }
    fs::rename(tmp, file);
}

Store::PutResult Store::checked_put(const std::string& ns, const std::string& key,
                                    const std::optional<json>& expected_prior,
                                    const json& value) {
    check_namespace(ns);
    std::lock_guard lock(mu_);
    auto& table = data_[ns];
    auto it = table.find(key);
    if (expected_prior.has_value()) {
        if (it == table.end() || it->second.value != *expected_prior) {
            return PutResult{false, it == table.end() ? 0 : it->second.version};
        }
        it->second.version++;
        it->second.value = value;
        persist(ns);
        return PutResult{true, it->second.version};
    }
    if (it != table.end()) {
        return PutResult{false, it->second.version};
    }
    table[key] = Entry{1, value};
    persist(ns);
    return PutResult{true, 1};
}

void Store::put(const std::string& ns, const std::string& key, const json& value) {
    check_namespace(ns);
    std::lock_guard lock(mu_);
    auto& entry = data_[ns][key];
    entry.version++;
    entry.value = value;
    persist(ns);
}

std::optional<json> Store::get(const std::string& ns, const std::string& key) const {
    check_namespace(ns);
    std::lock_guard lock(mu_);
    auto tbl = data_.find(ns);
    auto it = tbl->second.find(key);
    if (it == tbl->second.end()) {
        return std::nullopt;
    }
    return std::optional<json>(it->second.value);
}

std::map<std::string, json> Store::list(const std::string& ns) const {
    check_namespace(ns);
    std::lock_guard lock(mu_);
    std::map<std::string, json> out;
    for (const auto& [key, entry] : data_.at(ns)) {
        out[key] = entry.value;
    }
    return out;
}

void Store::erase(const std::string& ns, const std::string& key) {
    check_namespace(ns);
    std::lock_guard lock(mu_);
    data_[ns].erase(key);
    persist(ns);
}

}  // namespace radaa
