#include "radaa/engine.hpp"

#include <algorithm>
#include <cmath>

#include "radaa/error.hpp"

namespace radaa {

namespace {

constexpr double kEarthRadiusKm = 6371.0;
constexpr double kPi = 3.14159265358979323846;

double deg2rad(double d) { return d * kPi / 180.0; }

void check_geo(const GeoPoint& p) {
    if (p.lat < -90.0 || p.lat > 90.0 || p.lon < -180.0 || p.lon > 180.0) {
        throw Error("invalid_geo", "coordinates out of range");
    }
}

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace

double haversine_km(const GeoPoint& a, const GeoPoint& b) {
    check_geo(a);
    check_geo(b);
    double dlat = deg2rad(b.lat - a.lat);
    double dlon = deg2rad(b.lon - a.lon);
    double s = std::sin(dlat / 2) * std::sin(dlat / 2) +
               std::cos(deg2rad(a.lat)) * std::cos(deg2rad(b.lat)) *
                   std::sin(dlon / 2) * std::sin(dlon / 2);
    return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(s)));
}

FeatureVector extract_features(const TransactionContext& ctx,
                               const std::optional<SubjectHistory>& last_seen,
                               int tal_max) {
    double impossible_travel = 0.0;
    if (last_seen) {
        double dist = haversine_km(last_seen->geo, ctx.geo);
        int64_t dt = ctx.timestamp - last_seen->timestamp;
        if (dt <= 0) {
            impossible_travel = dist > 0.0 ? 1.0 : 0.0;
        } else {
            double speed_kmh = dist / (static_cast<double>(dt) / 3600.0);
            impossible_travel = speed_kmh > kImpossibleTravelSpeedKmh ? 1.0 : 0.0;
        }
    }
    double trust_deficit =
        tal_max > 0 ? 1.0 - static_cast<double>(std::clamp(ctx.tal, 0, tal_max)) / tal_max : 0.0;
    return FeatureVector{
        clamp01(ctx.ip_reputation),
        impossible_travel,
        ctx.device_known ? 0.0 : 1.0,
        ctx.nids_malicious ? 1.0 : 0.0,
        trust_deficit,
    };
}

double rule_score(const FeatureVector& f, const GlobalPosture& posture,
                  const RiskWeights& weights) {
    double s = posture.offset();
    for (size_t i = 0; i < f.size(); ++i) {
        s += weights.w[i] * f[i];
    }
    return clamp01(s);
}

RiskClass classify(double score, const RiskThresholds& t) {
    if (score < 0.0 || score > 1.0) {
        throw Error("invalid_score", "score outside [0,1]");
    }
    if (score < t.low) return RiskClass::LOW;
    if (score < t.high) return RiskClass::MEDIUM;
    return RiskClass::HIGH;
}

std::string to_string(Action a) {
    switch (a) {
        case Action::PROCEED: return "PROCEED";
        case Action::STEP_UP: return "STEP_UP";
        case Action::LIMIT_SCOPES: return "LIMIT_SCOPES";
        case Action::DENY: return "DENY";
        case Action::DENY_AND_REVOKE: return "DENY_AND_REVOKE";
    }
    return "PROCEED";
}

std::string to_string(ProtocolStage s) {
    switch (s) {
        case ProtocolStage::AUTHN: return "AUTHN";
        case ProtocolStage::TOKEN_ISSUE: return "TOKEN_ISSUE";
        case ProtocolStage::RESOURCE_ACCESS: return "RESOURCE_ACCESS";
    }
    return "AUTHN";
}

bool is_elevated_scope(const std::string& scope) {
    constexpr std::string_view kSuffix = ":elevated";
    return scope.size() >= kSuffix.size() &&
           scope.compare(scope.size() - kSuffix.size(), kSuffix.size(), kSuffix) == 0;
}

Decision decide(const RiskAssessment& assessment, ProtocolStage stage,
                const std::set<std::string>& requested_scopes) {
    switch (assessment.risk_class) {
        case RiskClass::LOW:
            return Decision{Action::PROCEED, {}};
        case RiskClass::MEDIUM:
            if (stage == ProtocolStage::RESOURCE_ACCESS) {
                Decision d{Action::LIMIT_SCOPES, {}};
                for (const auto& s : requested_scopes) {
                    if (is_elevated_scope(s)) {
                        d.stripped_scopes.insert(s);
                    }
                }
                return d;
            }
            return Decision{Action::STEP_UP, {}};
        case RiskClass::HIGH:
            if (stage == ProtocolStage::RESOURCE_ACCESS) {
                return Decision{Action::DENY_AND_REVOKE, {}};
            }
            return Decision{Action::DENY, {}};
    }
    return Decision{Action::DENY, {}};
}

RiskAssessment AdaptiveEngine::assess(const TransactionContext& ctx,
                                      const std::optional<SubjectHistory>& last_seen) const {
    RiskAssessment a;
    a.features = extract_features(ctx, last_seen);
    a.score = rule_score(a.features, GlobalPosture{posture()}, weights_);
    if (use_knn_ && model_.sample_count() > 0) {
        a.risk_class = model_.classify(a.features);
        a.source = AssessmentSource::KNN;
    } else {
        a.risk_class = classify(a.score, thresholds_);
        a.source = AssessmentSource::RULE;
    }
    return a;
}

void AdaptiveEngine::set_posture(PostureLevel level) {
    std::lock_guard lock(posture_mu_);
    posture_.level = level;
}

PostureLevel AdaptiveEngine::posture() const {
    std::lock_guard lock(posture_mu_);
    return posture_.level;
}

}  // namespace radaa
