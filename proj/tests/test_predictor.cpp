#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "testutil.hpp"

using namespace piproute;

TEST_CASE("class weights on balanced and skewed counts") {
    {
        const auto [wi, wf] = class_weights(1, 1);
        REQUIRE(wi == 1.0);
        REQUIRE(wf == 1.0);
    }
    {
        const auto [wi, wf] = class_weights(1, 3);
        REQUIRE(wi == Catch::Approx(2.0));
        REQUIRE(wf == Catch::Approx(2.0 / 3.0));
        REQUIRE(wi * 1.0 == wf * 3.0);
    }
}

TEST_CASE("class weights zero-count rule") {
    const auto [wi0, wf0] = class_weights(0, 5);
    REQUIRE(wi0 == 0.0);
    REQUIRE(wf0 == 1.0);
    const auto [wi1, wf1] = class_weights(5, 0);
    REQUIRE(wi1 == 1.0);
    REQUIRE(wf1 == 0.0);
    REQUIRE_THROWS_AS(class_weights(0, 0), std::invalid_argument);
}

TEST_CASE("weight identity is exact for random positive counts") {
    Rng rng(1);
    for (int trial = 0; trial < 5000; ++trial) {
        const long long a = rng.uniform_int(1, 1 << 20);
        const long long b = rng.uniform_int(1, 1 << 20);
        const auto [wi, wf] = class_weights(a, b);
        REQUIRE(wi * static_cast<double>(a) == wf * static_cast<double>(b));
    }
}

TEST_CASE("wbce gradient on a single sample") {
    // g=1, p=0.5 at v=0: gradient is -phi/2
    std::vector<std::vector<LabelSample>> steps(1);
    LabelSample smp;
    smp.phi = {0.3, -0.2, 0.7, 0.0, 1.0, 1.0, 1.0};
    smp.g = 1;
    steps[0].push_back(smp);
    const FeatureVec g = wbce_grad(FeatureVec{}, steps, {1.0, 1.0});
    for (int d = 0; d < kFeatureDim; ++d) REQUIRE(g[d] == Catch::Approx(-smp.phi[d] / 2.0));
}

TEST_CASE("wbce gradient vanishes when predictions saturate correctly") {
    std::vector<std::vector<LabelSample>> steps(2);
    LabelSample pos;
    pos.phi = {1.0, 0.5, 0.0, 0.0, 0.0, 0.0, 1.0};
    pos.g = 1;
    LabelSample neg;
    neg.phi = {-1.0, 0.3, 0.0, 0.0, 0.0, 0.0, -1.0};
    neg.g = 0;
    steps[0].push_back(pos);
    steps[1].push_back(neg);
    FeatureVec v{};
    // confident, correct direction: z = s * (phi . phi-ish)
    for (double s : {1.0, 5.0, 20.0}) {
        v = {s, 0.0, 0.0, 0.0, 0.0, 0.0, s};
        const FeatureVec g = wbce_grad(v, steps, {1.0, 1.0});
        double norm = 0.0;
        for (double x : g) norm += x * x;
        if (s == 20.0) REQUIRE(std::sqrt(norm) < 1e-6);
    }
}

TEST_CASE("wbce gradient matches central finite differences") {
    Rng rng(8);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<std::vector<LabelSample>> steps(
            static_cast<std::size_t>(rng.uniform_int(1, 4)));
        for (auto& group : steps) {
            const int k = static_cast<int>(rng.uniform_int(1, 5));
            for (int i = 0; i < k; ++i) {
                LabelSample smp;
                for (auto& x : smp.phi) x = rng.uniform(-1.5, 1.5);
                smp.g = rng.uniform() < 0.4 ? 1 : 0;
                group.push_back(smp);
            }
        }
        FeatureVec v;
        for (auto& x : v) x = rng.uniform(-1.0, 1.0);
        const auto weights = class_weights(static_cast<long long>(rng.uniform_int(1, 9)),
                                           static_cast<long long>(rng.uniform_int(1, 9)));
        const FeatureVec g = wbce_grad(v, steps, weights);
        const double h = 1e-6;
        for (int d = 0; d < kFeatureDim; ++d) {
            FeatureVec lo = v;
            FeatureVec hi = v;
            lo[d] -= h;
            hi[d] += h;
            const double fd = (wbce_loss(hi, steps, weights) - wbce_loss(lo, steps, weights)) / (2 * h);
            REQUIRE(g[d] == Catch::Approx(fd).margin(1e-5));
        }
    }
}

TEST_CASE("untrained predictor masks nothing at the default threshold") {
    // p = 0.5 everywhere; the comparison is strictly greater, so the mask
    // equals the local mask
    const TsptwInstance inst = testutil::fig1_instance();
    auto s = init_state(inst);
    step(s, 1);
    PredictorParams zero;
    const Mask predicted = predictor_mask(zero, s);
    const Mask local = local_mask(s);
    REQUIRE(predicted.selectable == local.selectable);
    REQUIRE(predicted.level == MaskLevel::Predicted);
}

TEST_CASE("saturated threshold reduces to the local mask") {
    Rng rng(3);
    PredictorParams pred;
    for (auto& x : pred.v) x = rng.uniform(-2.0, 2.0);
    pred.threshold = 1.0 - 1e-12;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const TsptwInstance inst = gen_tsptw(9, Hardness::Medium, seed);
        const auto s = testutil::random_state(inst, static_cast<int>(rng.uniform_int(0, 5)), rng);
        REQUIRE(predictor_mask(pred, s).selectable == local_mask(s).selectable);
    }
}

TEST_CASE("predictor threshold must be a probability") {
    PredictorParams pred;
    pred.threshold = 0.0;
    const TsptwInstance inst = testutil::fig1_instance();
    const auto s = init_state(inst);
    REQUIRE_THROWS_AS(predictor_mask(pred, s), std::invalid_argument);
}

TEST_CASE("predictor recall counts per class") {
    std::vector<std::vector<LabelSample>> steps(1);
    // feature vector with only bias set; z = v[6]
    LabelSample a;
    a.phi = {0, 0, 0, 0, 0, 0, 1.0};
    a.g = 1;
    LabelSample b = a;
    b.g = 0;
    steps[0] = {a, b};
    PredictorParams pred;
    pred.v = {0, 0, 0, 0, 0, 0, 5.0};  // flags everything
    const PredictorRecall rec = predictor_recall(pred, steps);
    REQUIRE(rec.infeasible == 1.0);
    REQUIRE(rec.feasible == 0.0);
    pred.v[6] = -5.0;  // flags nothing
    const PredictorRecall rec2 = predictor_recall(pred, steps);
    REQUIRE(rec2.infeasible == 0.0);
    REQUIRE(rec2.feasible == 1.0);
}
