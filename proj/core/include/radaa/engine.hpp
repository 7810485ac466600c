#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "radaa/token.hpp"

namespace radaa {

struct GeoPoint {
    double lat = 0.0;
    double lon = 0.0;
};

// Great-circle distance, Earth radius 6371.0 km. Throws on out-of-range
// coordinates.
double haversine_km(const GeoPoint& a, const GeoPoint& b);

struct TransactionContext {
    std::string subject;
    std::string client_id;
    std::string ip;
    double ip_reputation = 0.0;  // [0,1], 1 = worst
    GeoPoint geo;
    int64_t timestamp = 0;
    std::string device_id;
    bool device_known = false;
    bool nids_malicious = false;
    int tal = 0;
};

struct SubjectHistory {
    GeoPoint geo;
    int64_t timestamp = 0;
};

// Canonical order: [ip_reputation, impossible_travel, unknown_device,
// nids_malicious, trust_deficit].
using FeatureVector = std::array<double, 5>;

enum class PostureLevel { NORMAL, ELEVATED, CRITICAL };

struct GlobalPosture {
    PostureLevel level = PostureLevel::NORMAL;

    double offset() const {
        switch (level) {
            case PostureLevel::NORMAL: return 0.0;
            case PostureLevel::ELEVATED: return 0.2;
            case PostureLevel::CRITICAL: return 0.4;
        }
        return 0.0;
    }
};

enum class AssessmentSource { RULE, KNN };

struct RiskAssessment {
    double score = 0.0;
    RiskClass risk_class = RiskClass::LOW;
    FeatureVector features{};
    AssessmentSource source = AssessmentSource::RULE;
};

struct RiskWeights {
    std::array<double, 5> w{0.25, 0.25, 0.15, 0.20, 0.15};
};

struct RiskThresholds {
    double low = 0.35;   // scores below this are LOW
    double high = 0.70;  // scores at or above this are HIGH
};

constexpr double kImpossibleTravelSpeedKmh = 1000.0;
constexpr int kTalMax = 1;

FeatureVector extract_features(const TransactionContext& ctx,
                               const std::optional<SubjectHistory>& last_seen,
                               int tal_max = kTalMax);

double rule_score(const FeatureVector& f, const GlobalPosture& posture,
                  const RiskWeights& weights = {});

RiskClass classify(double score, const RiskThresholds& t = {});

// Incrementally trained nearest-neighbour classifier. FIFO sample eviction
// at capacity; vote ties break toward the higher risk class; distance ties
// break toward earlier insertion.
class KnnModel {
public:
    explicit KnnModel(int k = 5, size_t max_samples = 10000);

    KnnModel(KnnModel&& other) noexcept;
    KnnModel& operator=(KnnModel&& other) noexcept;

    void observe(const FeatureVector& f, RiskClass label);
    RiskClass classify(const FeatureVector& f) const;  // throws on empty model

    size_t sample_count() const;
    int k() const { return k_; }

    std::string to_json() const;
    static KnnModel from_json(const std::string& text, int k = 5, size_t max_samples = 10000);

private:
    int k_;
    size_t max_samples_;
    mutable std::mutex mu_;
    std::deque<std::pair<FeatureVector, RiskClass>> samples_;
};

enum class ProtocolStage { AUTHN, TOKEN_ISSUE, RESOURCE_ACCESS };

enum class Action { PROCEED, STEP_UP, LIMIT_SCOPES, DENY, DENY_AND_REVOKE };

std::string to_string(Action a);
std::string to_string(ProtocolStage s);

struct Decision {
    Action action = Action::PROCEED;
    std::set<std::string> stripped_scopes;  // only for LIMIT_SCOPES
};

// Scopes suffixed ":elevated" are the privileged tier that MEDIUM risk strips.
bool is_elevated_scope(const std::string& scope);

Decision decide(const RiskAssessment& assessment, ProtocolStage stage,
                const std::set<std::string>& requested_scopes);

// One engine instance is shared by the authorization and resource servers.
class AdaptiveEngine {
public:
    AdaptiveEngine() = default;
    AdaptiveEngine(RiskWeights w, RiskThresholds t, int knn_k, size_t knn_capacity)
        : weights_(w), thresholds_(t), model_(knn_k, knn_capacity) {}

    RiskAssessment assess(const TransactionContext& ctx,
                          const std::optional<SubjectHistory>& last_seen) const;

    Decision decide_for(const RiskAssessment& a, ProtocolStage stage,
                        const std::set<std::string>& requested_scopes) const {
        return decide(a, stage, requested_scopes);
    }

    void observe(const FeatureVector& f, RiskClass label) { model_.observe(f, label); }

    void set_posture(PostureLevel level);
    PostureLevel posture() const;

    // When true and the model has samples, classification comes from KNN.
    void set_use_knn(bool on) { use_knn_ = on; }
    bool use_knn() const { return use_knn_; }

    const KnnModel& model() const { return model_; }
    KnnModel& model() { return model_; }
    const RiskThresholds& thresholds() const { return thresholds_; }

private:
    RiskWeights weights_;
    RiskThresholds thresholds_;
    KnnModel model_;
    bool use_knn_ = false;
    mutable std::mutex posture_mu_;
    GlobalPosture posture_{};
};

}  // namespace radaa
