// Hot-path micro-benchmarks: token signing/verification, proof checks,
// risk scoring and classification.

#include <benchmark/benchmark.h>

#include <random>

#include "radaa/crypto.hpp"
#include "radaa/engine.hpp"
#include "radaa/pkce.hpp"
#include "radaa/sender_proof.hpp"
#include "radaa/token.hpp"

using namespace radaa;

namespace {

TokenClaims sample_claims() {
    TokenClaims c;
    c.iss = "https://as.radaa.example";
    c.sub = "alice";
    c.aud = "rs.radaa.example";
    c.client_id = "honest-app";
    c.scope = {"files:read", "files:write"};
    c.iat = 1'700'000'000;
    c.exp = c.iat + 900;
    c.jti = fresh_jti();
    c.tal = 1;
    c.cnf_thumbprint = derive_thumbprint(crypto::random_bytes(32));
    return c;
}

void BM_SignEd25519(benchmark::State& state) {
    KeyPair key = KeyPair::generate_ed25519("bench");
    TokenClaims c = sample_claims();
    for (auto _ : state) {
        benchmark::DoNotOptimize(sign_token(c, key));
    }
}
BENCHMARK(BM_SignEd25519);

void BM_SignHmac(benchmark::State& state) {
    KeyPair key = KeyPair::generate_hmac("bench");
    TokenClaims c = sample_claims();
    for (auto _ : state) {
        benchmark::DoNotOptimize(sign_token(c, key));
    }
}
BENCHMARK(BM_SignHmac);

void BM_VerifyEd25519(benchmark::State& state) {
    KeyPair key = KeyPair::generate_ed25519("bench");
    KeyRegistry reg{{"bench", {key.public_key, Algorithm::ED25519}}};
    SignedToken t = sign_token(sample_claims(), key);
    for (auto _ : state) {
        benchmark::DoNotOptimize(verify_token(t.wire, reg));
    }
}
BENCHMARK(BM_VerifyEd25519);

void BM_SenderProofRoundTrip(benchmark::State& state) {
    KeyPair key = KeyPair::generate_ed25519("bench");
    std::string cnf = derive_thumbprint(key.public_key);
    ReplayCache cache(300, 1 << 20);
    int64_t now = 1'700'000'000;
    for (auto _ : state) {
        SenderProof p = make_sender_proof("GET", "rs/resource/x", "tok", key, now);
        benchmark::DoNotOptimize(
            verify_sender_proof(p.wire, "GET", "rs/resource/x", "tok", cnf, cache, now));
    }
}
BENCHMARK(BM_SenderProofRoundTrip);

void BM_PkceVerify(benchmark::State& state) {
    std::string v = random_pkce_verifier();
    PkceChallenge ch = make_pkce_challenge(v);
    for (auto _ : state) {
        benchmark::DoNotOptimize(verify_pkce(v, ch));
    }
}
BENCHMARK(BM_PkceVerify);

void BM_RuleScore(benchmark::State& state) {
    FeatureVector f{0.3, 1.0, 0.0, 1.0, 0.5};
    GlobalPosture posture{PostureLevel::ELEVATED};
    for (auto _ : state) {
        benchmark::DoNotOptimize(rule_score(f, posture));
    }
}
BENCHMARK(BM_RuleScore);

void BM_KnnClassify(benchmark::State& state) {
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    KnnModel model(5, 10000);
    for (int i = 0; i < state.range(0); ++i) {
        FeatureVector f;
        for (auto& x : f) x = u(rng);
        model.observe(f, classify(rule_score(f, GlobalPosture{})));
    }
    FeatureVector q{0.4, 0.2, 0.9, 0.1, 0.6};
    for (auto _ : state) {
        benchmark::DoNotOptimize(model.classify(q));
    }
}
BENCHMARK(BM_KnnClassify)->Arg(100)->Arg(1000)->Arg(10000);

void BM_SealUnseal(benchmark::State& state) {
    KeyPair key = KeyPair::generate_ed25519("bench");
    SignedToken t = sign_token(sample_claims(), key);
    Bytes secret = crypto::random_bytes(32);
    for (auto _ : state) {
        Bytes sealed = seal_claims(t, secret);
        benchmark::DoNotOptimize(unseal_claims(sealed, secret));
    }
}
BENCHMARK(BM_SealUnseal);

}  // namespace

BENCHMARK_MAIN();
