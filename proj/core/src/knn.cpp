#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

#include "radaa/engine.hpp"
#include "radaa/error.hpp"

namespace radaa {

using nlohmann::json;

namespace {

double sq_distance(const FeatureVector& a, const FeatureVector& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

int class_rank(RiskClass c) {
    switch (c) {
        case RiskClass::LOW: return 0;
        case RiskClass::MEDIUM: return 1;
        case RiskClass::HIGH: return 2;
    }
    return 0;
}

}  // namespace

KnnModel::KnnModel(int k, size_t max_samples) : k_(k), max_samples_(max_samples) {
    if (k_ <= 0 || k_ % 2 == 0) {
        throw Error("invalid_k", "k must be a positive odd integer");
    }
}

KnnModel::KnnModel(KnnModel&& other) noexcept {
    std::lock_guard lock(other.mu_);
    k_ = other.k_;
    max_samples_ = other.max_samples_;
    samples_ = std::move(other.samples_);
}

KnnModel& KnnModel::operator=(KnnModel&& other) noexcept {
    if (this != &other) {
        std::scoped_lock lock(mu_, other.mu_);
        k_ = other.k_;
        max_samples_ = other.max_samples_;
        samples_ = std::move(other.samples_);
    }
    return *this;
}

void KnnModel::observe(const FeatureVector& f, RiskClass label) {
    std::lock_guard lock(mu_);
    if (samples_.size() >= max_samples_) {
        samples_.pop_front();
    }
    samples_.emplace_back(f, label);
}

RiskClass KnnModel::classify(const FeatureVector& f) const {
    std::lock_guard lock(mu_);
    if (samples_.empty()) {
        throw Error("empty_model", "cannot classify with no training samples");
    }
    size_t k = std::min<size_t>(static_cast<size_t>(k_), samples_.size());

    // (distance, insertion index) — stable sort keeps earlier samples first
    // among distance ties.
    std::vector<std::pair<double, size_t>> dist;
    dist.reserve(samples_.size());
    for (size_t i = 0; i < samples_.size(); ++i) {
        dist.emplace_back(sq_distance(f, samples_[i].first), i);
    }
    std::stable_sort(dist.begin(), dist.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    int votes[3] = {0, 0, 0};
    for (size_t i = 0; i < k; ++i) {
        votes[class_rank(samples_[dist[i].second].second)]++;
    }
    // Ties break toward the higher risk class.
    int best = 2;
    for (int c = 1; c >= 0; --c) {
        if (votes[c] > votes[best]) {
            best = c;
        }
    }
    switch (best) {
        case 0: return RiskClass::LOW;
        case 1: return RiskClass::MEDIUM;
        default: return RiskClass::HIGH;
    }
}

size_t KnnModel::sample_count() const {
    std::lock_guard lock(mu_);
    return samples_.size();
}

std::string KnnModel::to_json() const {
    std::lock_guard lock(mu_);
    json arr = json::array();
    for (const auto& [f, label] : samples_) {
        arr.push_back(json::array({json(f), json(to_string(label))}));
    }
    return arr.dump();
}

KnnModel KnnModel::from_json(const std::string& text, int k, size_t max_samples) {
    KnnModel m(k, max_samples);
    json arr = json::parse(text);
    for (const auto& entry : arr) {
        FeatureVector f{};
        const auto& vec = entry.at(0);
        for (size_t i = 0; i < f.size(); ++i) {
            f[i] = vec.at(i).get<double>();
        }
        m.observe(f, risk_class_from_string(entry.at(1).get<std::string>()));
    }
    return m;
}

}  // namespace radaa
